"""CondField command-line entry point."""

import sys

from condfield.cli import main

if __name__ == "__main__":
    sys.exit(main())
