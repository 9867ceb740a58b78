"""Support ``python -m slepian_ncp``."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
