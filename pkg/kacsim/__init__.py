__version__ = "0.1.0"

from .logger import setup_logging

setup_logging()

from .analytic import c_of_t, density_curve, exact_density, initial_density, limit_density
from .algorithms import RunResult, run, run_bird_dsmc, run_exact_poisson, run_nanbu, run_nanbu_babovsky
from .collision import Ensemble, collide, initial_ensemble
from .metrics import Histogram, build_histogram, tvn_discrete, tvn_vs_density
from .perfect import PerfectDraw, cftp_sample
from .rng import RngStream
from .schemas import ConfigError, ExperimentSpec, OracleUnavailableError, SimConfig
