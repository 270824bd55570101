"""Run the acceptance suite and print one verdict line per criterion.

Exit code is 0 when every criterion passes and 1 otherwise.
"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    code = pytest.main([str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider", *sys.argv[1:]])
    sys.exit(0 if code == 0 else 1)
