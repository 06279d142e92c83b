#!/usr/bin/env python3
"""Certify the two-sided metric bounds for a family of annulus flows."""

import sys

from braidflow import cli

if __name__ == "__main__":
    sys.exit(cli.main(["embed-demo", *sys.argv[1:]]))
