#!/usr/bin/env python3
"""Regenerate the bundled toy fixture store (fixtures/toy_store).

The fixture is deterministic: rerunning this script must leave the committed
files byte-identical. The test suite checks that.
"""

import sys
from pathlib import Path

from rfiqa.planted import make_toy_store
from rfiqa.store import save_store


def main() -> int:
    out = Path(__file__).resolve().parent.parent / "fixtures" / "toy_store"
    save_store(make_toy_store(), out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
