#!/usr/bin/env python3
"""Compare the Monte Carlo growth slope with its quadrature prediction."""

import sys

from braidflow import cli

if __name__ == "__main__":
    sys.exit(cli.main(["gg-check", *sys.argv[1:]]))
