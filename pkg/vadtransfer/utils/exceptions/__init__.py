from .vad_exceptions import *
