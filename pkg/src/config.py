# src/config.py
import os

from dotenv import load_dotenv

load_dotenv()


def _env(name, default, cast=str):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return cast(raw)


# ===================================================================
# CONFIG
# ===================================================================
DEFAULT_SEED = _env("INCEX_SEED", 42, int)
DEFAULT_EPOCHS = _env("INCEX_EPOCHS", 50, int)
DEFAULT_L2 = _env("INCEX_L2", 0.1, float)
DEFAULT_LR = _env("INCEX_LR", 0.1, float)
DEFAULT_WINDOW = _env("INCEX_WINDOW", 1, int)
DEFAULT_TEST_FRACTION = _env("INCEX_TEST_FRACTION", 0.2, float)
DEFAULT_JOBS = _env("INCEX_JOBS", 1, int)
LOG_LEVEL = _env("INCEX_LOG_LEVEL", "INFO")

MODEL_FORMAT_VERSION = 1
