#!/usr/bin/env python
"""
Main entry point for the koopholo CLI
"""

import sys

from .cli import main


def main_entry_point():
    """Entry point for console_scripts"""
    sys.exit(main())


if __name__ == "__main__":
    main_entry_point()
