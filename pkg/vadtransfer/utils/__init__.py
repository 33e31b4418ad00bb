from .default_values import *
from .output_manager import OutputManager
from .util_methods import *
from .exceptions import *
from .arg_parser import *
