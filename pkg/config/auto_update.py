import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.plugins.config.auto_update import update_config  # noqa: E402

if __name__ == "__main__":
    update_config()
