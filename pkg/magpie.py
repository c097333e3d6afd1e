#!/usr/bin/env python3
# PYTHON_ARGCOMPLETE_OK
"""MAGPIE CLI - automated software improvement by searching edit sequences."""

import sys

from magpie.cli import main

if __name__ == "__main__":
    sys.exit(main())
