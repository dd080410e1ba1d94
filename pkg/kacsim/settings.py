# -------------------------------------------------------------------------------------------------------------------- #
# ------------------------------------- DEFAULT SETTINGS FOR KACSIM RUNS ---------------------------------------------- #
# -------------------------------------------------------------------------------------------------------------------- #

import math

# ORACLE
# ----------------------------------------------------------------
# The Krook-Wu solution only holds for this collision rate
ORACLE_LAMBDA = math.sqrt(math.pi) / 2
ORACLE_LAMBDA_RTOL = 1e-12

# BINNING
# ----------------------------------------------------------------
DEFAULT_BINS = (-5.0, 5.0, 0.1)
BIN_TILING_TOL = 1e-9
GAUSS_LEGENDRE_POINTS = 5

# RANDOMNESS
# ----------------------------------------------------------------
DEFAULT_SEED = 20240101

# ALGORITHMS
# ----------------------------------------------------------------
DT_DIVISIBILITY_RTOL = 1e-9
BIRD_CLOCK_RTOL = 1e-9

# PERFECT SAMPLER
# ----------------------------------------------------------------
ENERGY_PER_PARTICLE = 1.5
MAX_LOG2_COUPLING_TIME = 30
COARSE_EPSILON_FACTOR = 0.01
SIGN_SUBSTREAM = 1

# TELEMETRY
# ----------------------------------------------------------------
TELEMETRY_SUBSTREAM = 2

# ENVIRONMENT
# ----------------------------------------------------------------
ENV_PREFIX = "KACSIM_"
DEFAULT_CONFIG_FILE = "kacsim.env"
