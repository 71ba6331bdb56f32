#!/usr/bin/env python3
"""
genericlab: generic points and reduction constructions on shift spaces

Usage:
    python main.py <command> [options]

Examples:
    python main.py prohorov a.json b.json
    python main.py trace spec.json --eps 1/4 --d1 0 --d2 0
    python main.py oxtoby words --s 3,4 --depth 2
    python main.py check --seed 7 --count 500
"""

import sys

from src.cli.lab_cli import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
