#!/usr/bin/env python3
"""Scan the singular kernel moment and report its sup bound constant."""

import sys

from braidflow import cli

if __name__ == "__main__":
    sys.exit(cli.main(["psi-bound", *sys.argv[1:]]))
