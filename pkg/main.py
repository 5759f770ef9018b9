#!/usr/bin/env python3
"""
Connection Router - Main Entry Point
Command-line application for simulating, training and evaluating connection routing policies.
"""

import sys

from app.cli.commands import run


def main():
    """Main entry point."""
    try:
        sys.exit(run(sys.argv[1:]))
    except KeyboardInterrupt:
        print("\n\nRun interrupted by user.")
        sys.exit(130)


if __name__ == "__main__":
    main()
