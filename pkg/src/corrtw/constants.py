SEED_ENV_VAR = "CORRTW_SEED"
CACHE_DIR_ENV_VAR = "CORRTW_CACHE_DIR"
DEFAULT_CACHE_DIR = "~/.cache/corrtw"

ROW_NORM_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12
CHECK_SLACK = 1e-10
COLLISION_TOLERANCE = 1e-8
SINGULAR_VALUE_FLOOR = 1e-12

TW_T_PLUS = 8.0
TW_T_MIN = -10.0
TW_STEP = 1e-3
TW_BLOWUP = 1e6
TW_TABLE_COLUMNS = ["t", "q", "F1"]

# Left-tail asymptotics of the beta = 1 law: F1(t) ~ N exp(-a|t|^3 - b|t|^1.5) |t|^-c
TW_LEFT_TAU0 = 0.872371414954127
TW_LEFT_TAIL = (
    TW_LEFT_TAU0**0.5 / 2.0**0.25,
    1.0 / 24.0,
    2.0 ** (-0.5) / 3.0,
    1.0 / 16.0,
)

MAX_REPLICA_FAILURE_FRACTION = 1e-3

REPLICA_COLUMNS = ["replica", "lambda_min", "lambda_max", "stat_min", "stat_max"]
REPLICAS_FILE_NAME = "replicas.csv"
SUMMARY_FILE_NAME = "summary.json"
FLOAT_FORMAT = "%.17g"
