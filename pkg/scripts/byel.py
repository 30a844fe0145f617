#!/usr/bin/env python3
"""
BYEL command line entry point

    python scripts/byel.py generate-data --profile desk --run-dir runs/desk
    python scripts/byel.py pretrain --run-dir runs/desk
    python scripts/byel.py transfer --run-dir runs/desk
    python scripts/byel.py eval --run-dir runs/desk
    python scripts/byel.py compare --run-dir runs/compare
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.cli.main import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())
