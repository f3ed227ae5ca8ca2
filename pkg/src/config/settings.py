import json
import os
import sys

from dotenv import load_dotenv

load_dotenv(os.path.join(os.path.dirname(__file__), ".env"))

# Load static config
CONFIG_PATH = os.environ.get(
    "RENORM_CONFIG_PATH", os.path.join(os.path.dirname(__file__), "config.json")
)
with open(CONFIG_PATH, "r") as f:
    config = json.load(f)

# Access patterns
LOG_LEVEL = os.getenv("RENORM_LOG_LEVEL", config.get("log_level", "INFO"))
GRID_NODES = {int(k): int(v) for k, v in config.get("grid_nodes", {}).items()}
FD_STEP = float(config.get("fd_step", 1e-3))
NESTED_FD_STEP = float(config.get("nested_fd_step", 2e-2))
CURVATURE_CHUNK = int(config.get("curvature_chunk", 2048))

EPSILON_HI = float(config.get("epsilon_hi", 0.1))
EPSILON_HI_HIGH_DIM = float(config.get("epsilon_hi_high_dim", 0.3))
EPSILON_RATIO = float(config.get("epsilon_ratio", 0.75))
EPSILON_COUNT = int(config.get("epsilon_count", 24))
R0 = float(config.get("r0", 0.5))
RADIAL_PANEL_ORDER = int(config.get("radial_panel_order", 16))
RADIAL_PANEL_RATIO = float(config.get("radial_panel_ratio", 2.0))
RADIAL_SPLIT = float(config.get("radial_split", 0.05))
MIN_EPSILON = float(config.get("min_epsilon", 1e-8))

MARCH_STEP = float(config.get("march_step", 1e-3))
MARCH_EXTENT = float(config.get("march_extent", 0.25))

FIT_CONDITION_THRESHOLD = float(config.get("fit_condition_threshold", 1e10))
TAIL_TERMS = int(config.get("tail_terms", 4))

SHOOTING_XTOL = float(config.get("shooting_xtol", 1e-12))
SHOOTING_RTOL = float(config.get("shooting_rtol", 1e-12))
SHOOTING_STOP = float(config.get("shooting_stop", 1e-6))
# brentq rejects rtol below 4 * machine epsilon
BRENTQ_RTOL = 4.0 * sys.float_info.epsilon
AREA_DENSITY_WINDOW = tuple(config.get("area_density_window", [0.01, 0.1]))

TOLERANCE = float(config.get("tolerance", 1e-5))
CLOSED_FORM_TOLERANCE = float(config.get("closed_form_tolerance", 1e-8))

_env_nodes = os.getenv("RENORM_GRID_NODES")


def grid_nodes(n: int) -> int:
    """Default quadrature nodes per chart dimension for an n-dimensional boundary."""
    if _env_nodes:
        return int(_env_nodes)
    if n in GRID_NODES:
        return GRID_NODES[n]
    return max(2, min(GRID_NODES.values()))
