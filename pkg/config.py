# file: config.py
import os
from dotenv import load_dotenv

# Load .env
load_dotenv()

# Output location for policy JSON and sweep CSVs
DATA_DIR = os.getenv("DATA_DIR", "data")

# Worker pool (sweeps, multi-seed simulation); <= 0 means all cores
THREADS = int(os.getenv("AOI_SCHED_THREADS", 1))

# Lagrangian bisection
EPSILON = float(os.getenv("AOI_SCHED_EPSILON", 1e-6))
MAX_DOUBLINGS = int(os.getenv("AOI_SCHED_MAX_DOUBLINGS", 64))

# Simulation
HORIZON = int(os.getenv("AOI_SCHED_HORIZON", 10_000_000))
SEEDS = int(os.getenv("AOI_SCHED_SEEDS", 10))
SEED = int(os.getenv("AOI_SCHED_SEED", 2024))
CHUNK = int(os.getenv("AOI_SCHED_CHUNK", 1_000_000))

# Oracles
TAIL_TOL = float(os.getenv("AOI_SCHED_TAIL_TOL", 1e-12))
MAX_STEADY_CAP = int(os.getenv("AOI_SCHED_MAX_STEADY_CAP", 2_000_000))
CAP_FACTOR = max(4, int(os.getenv("AOI_SCHED_CAP_FACTOR", 8)))
RVI_MAX_ITER = int(os.getenv("AOI_SCHED_RVI_MAX_ITER", 200_000))
ORACLE_TOL = float(os.getenv("AOI_SCHED_ORACLE_TOL", 1e-9))
BRUTE_MARGIN = int(os.getenv("AOI_SCHED_BRUTE_MARGIN", 100_000))

# Logging / console
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
SHOW_PROGRESS = os.getenv("SHOW_PROGRESS", "True").lower() in ("true", "1", "yes")
