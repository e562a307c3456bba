#!/usr/bin/env python3
"""Serve the fully offline demo (scripted LLM backend + fixture stores).

Usage: python scripts/serve_demo.py [--port 8080]
"""

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

import uvicorn

from clariq.config import load_config
from clariq.engine import ClarificationEngine
from clariq.service import create_app


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args()

    config = load_config(ROOT / "fixtures" / "demo_config.toml")
    engine = ClarificationEngine(config)
    uvicorn.run(create_app(engine), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
