"""
Environment-driven defaults for spintomo.

Values come from the process environment (optionally a .env file in the
working directory). Run configuration files and command-line flags override
them; see app.models.RunConfig.

Example .env:
  SPINTOMO_SEED=12345
  SPINTOMO_OUT_DIR=output
  SPINTOMO_LOG_LEVEL=DEBUG
"""
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


DEFAULT_SEED = int(os.getenv("SPINTOMO_SEED", "20240601"))
OUTPUT_DIR = Path(os.getenv("SPINTOMO_OUT_DIR", "output"))
LOG_LEVEL = os.getenv("SPINTOMO_LOG_LEVEL", "INFO").upper()

# Tomogram files: maximum |sum(probs) - 1| per slice
NORMALIZATION_TOL = float(os.getenv("SPINTOMO_NORM_TOL", "1e-6"))

# Squeezing sampler sizes
DIRECTION_SAMPLES = int(os.getenv("SPINTOMO_DIRECTION_SAMPLES", "800"))
PAIR_SAMPLES = int(os.getenv("SPINTOMO_PAIR_SAMPLES", "320"))

# Discord optimizer
DISCORD_RESTARTS = int(os.getenv("SPINTOMO_DISCORD_RESTARTS", "64"))
DISCORD_GRID = int(os.getenv("SPINTOMO_DISCORD_GRID", "32"))

# Entropic squeezing: flag an axis when its entropy (bits) is below this
ENTROPIC_THRESHOLD = float(os.getenv("SPINTOMO_ENTROPIC_THRESHOLD", "0.5"))

# "collective" (sum of m on a multi-qubit side) or "max" (largest pairwise |PCC|)
PCC_MODE = os.getenv("SPINTOMO_PCC_MODE", "collective").lower()
