#!/usr/bin/env python3
"""Wrapper script to run the QSI Decoy Lab CLI from a source checkout."""

import sys
from pathlib import Path

# Add the checkout to the Python path; the working directory is left alone
# so relative --config and --out paths keep their meaning.
script_dir = Path(__file__).parent
sys.path.insert(0, str(script_dir))

try:
    from qsi_decoy_lab.cli import main

    main()
except ImportError as e:
    print(f"Import error: {e}", file=sys.stderr)
    print("Install the dependencies first: pip install -r requirements.txt", file=sys.stderr)
    sys.exit(1)
