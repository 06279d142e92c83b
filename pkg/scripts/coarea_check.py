#!/usr/bin/env python3
"""Check that crossing counts averaged over directions match angular variation."""

import sys

from braidflow import cli

if __name__ == "__main__":
    sys.exit(cli.main(["coarea-check", *sys.argv[1:]]))
