#!/usr/bin/env python3
"""
run.py - Command-line entry point for kacsim

    python run.py sample --algorithm bird --n 50 --t 2 --out runs/bird50
    python run.py --help
"""

from kacsim.cli import main

if __name__ == "__main__":
    main()
