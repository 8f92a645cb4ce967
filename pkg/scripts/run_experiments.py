"""Run every shipped config and print the verdict lines.

Usage: python scripts/run_experiments.py [config ...] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

from cornerscatter.cli import load_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("configs", nargs="*", type=Path)
    p.add_argument("--out", type=Path, default=ROOT / "out")
    args = p.parse_args()
    paths = args.configs or sorted((ROOT / "configs").glob("*.cfg"))
    worst = 0
    for path in paths:
        cfg = load_config(path)
        report, code = run_experiment(cfg, args.out / path.stem)
        worst = max(worst, code)
        print(f"== {path.stem}: {'pass' if report.passed else 'fail'}")
        for name, ok, detail in report.checks:
            print(f"   {'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    return worst


if __name__ == "__main__":
    sys.exit(main())
