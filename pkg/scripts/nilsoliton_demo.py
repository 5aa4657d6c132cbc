"""Decide, construct and certify a nilsoliton from pencil invariants.

    python scripts/nilsoliton_demo.py '{"real_divisors": [[0, 1], [1, 1], [-1, 1]], "minimal_indices": [1]}'
"""

import argparse
import json
from dataclasses import dataclass

from nilrad.cli import Command, execute


@dataclass
class DemoConfig:
    spec: str = '{"real_divisors": [[0, 1], [1, 1], [-1, 1]], "minimal_indices": [1]}'
    tol: float = 1e-8


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("spec", nargs="?", default=DemoConfig.spec)
    ap.add_argument("--tol", type=float, default=DemoConfig.tol)
    args = ap.parse_args(argv)
    cfg = DemoConfig(args.spec, args.tol)
    doc = json.loads(cfg.spec)
    for verb in ("classify", "preeinstein", "nilsoliton"):
        code, report = execute(Command(verb, doc, tol=cfg.tol))
        report.pop("algebra", None)
        print(f"== {verb} (exit {code})")
        print(json.dumps(report, indent=2))
        if verb == "classify" and not report.get("is_einstein"):
            code, report = execute(Command("witness", doc, tol=cfg.tol))
            print("== witness")
            print(json.dumps(report, indent=2))
            break


if __name__ == "__main__":
    main()
