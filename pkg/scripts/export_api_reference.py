#!/usr/bin/env python3
"""Regenerate docs/openapi.json from the service's route definitions."""

import sys
from pathlib import Path

from mlbn.server import create_app, export_openapi


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("docs/openapi.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    export_openapi(create_app(), out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
