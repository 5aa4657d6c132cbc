"""Random integer pencils: fraction of Einstein nilradicals and eigenvalue types.

    python scripts/sample_run.py --q 7 --count 200 --jobs 4
"""

import argparse
import json
from dataclasses import asdict, dataclass, fields

from nilrad.cli import Command, execute


@dataclass
class SampleConfig:
    q: int = 7
    count: int = 100
    seed: int = 0
    jobs: int = 1
    tol: float = 1e-8


def parse(argv=None) -> SampleConfig:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for f in fields(SampleConfig):
        ap.add_argument(f"--{f.name}", type=f.type if callable(f.type) else type(f.default), default=f.default)
    return SampleConfig(**vars(ap.parse_args(argv)))


def main(argv=None) -> None:
    cfg = parse(argv)
    code, report = execute(Command("sample", **asdict(cfg)))
    if code:
        raise SystemExit(json.dumps(report))
    print(f"q = {cfg.q}, {report['count']} pencils, seed {cfg.seed}")
    print(f"cases: {report['case_counts']}")
    print(f"Einstein fraction: {report['fraction_einstein']:.3f}")
    print(f"type (1, 2; q, 2) fraction: {report['fraction_type_1_2_q_2']:.3f}")
    for row in report["eigenvalue_types"][:10]:
        (vals, mults), n = row["type"], row["count"]
        print(f"  {n:5d}  eigenvalues {tuple(vals)} multiplicities {tuple(mults)}")


if __name__ == "__main__":
    main()
