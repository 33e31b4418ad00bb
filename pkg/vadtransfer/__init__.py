from .base_experiment import *
from .audio import *
from .features import extract_all, levinson_durbin, rasta_filter
from .feature_store import *
from .surrogates import synthesize_clean_utterance, synthesize_noise, write_clean_pool, write_noise
from .corpus import *
from .network import *
from .evaluation import *
from .bound_runners import LowerBoundRunner, UpperBoundRunner, run_lb, run_ub
from .scheme1_runner import Scheme1Runner, run_scheme1
from .scheme2_runner import Scheme2Runner, run_scheme2
from .scheme3_runner import Scheme3tRunner, Scheme3sRunner, SourceStackCache, run_scheme3
