# resonance_lab/config.py
import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent
OUTPUT_DIR = Path(os.getenv("RESONANCE_LAB_OUTPUT_DIR", "results")).resolve()
LOG_FILE = Path(os.getenv("RESONANCE_LAB_LOG_FILE", "resonance_lab.log")).resolve()
LOG_LEVEL = os.getenv("RESONANCE_LAB_LOG_LEVEL", "INFO").upper()

# Per-h runs are dispatched to this many worker processes.
WORKERS = int(os.getenv("RESONANCE_LAB_WORKERS", "1"))

# --- Quadrature ---
QUAD_EPSABS = float(os.getenv("RESONANCE_LAB_QUAD_EPSABS", "1e-13"))
QUAD_LIMIT = 400
ACTION_TOL = 1e-12

# --- Shooting ---
SHOOT_RTOL = float(os.getenv("RESONANCE_LAB_SHOOT_RTOL", "1e-12"))
SHOOT_ATOL = 1e-14
RENORM_THRESHOLD = 1e8
# Chunk length for renormalization checks, in units of h.
RENORM_INTERVAL = 100.0
MAX_RHS_EVALUATIONS = int(os.getenv("RESONANCE_LAB_MAX_RHS_EVALUATIONS", "4000000"))
H_RANGE = (5e-4, 0.2)

# --- Root finding ---
CONTOUR_POINTS_PER_SIDE = 64
MAX_CONTOUR_REFINEMENTS = 14
CONTOUR_PERTURBATIONS = 5
NEWTON_MAX_ITER = 50
# Newton may wander this fraction of the cell size outside a cell before it is stopped.
NEWTON_SLACK = 0.5
# Halvings of a winding-1 cell tried when polishing fails.
POLISH_SUBDIVISIONS = 12
CERTIFY_RADIUS = 1e-8
RESIDUAL_TOL = 1e-10
ZERO_TOL = 1e-12

# --- WKB ---
# Truncation default is max(k, l) + 1; this is only the floor.
WKB_MIN_ORDER = 1

SCHEMA_VERSION = "1"

REQUIRED_DIRS = [OUTPUT_DIR]
