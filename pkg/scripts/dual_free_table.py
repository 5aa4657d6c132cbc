"""Nice-basis data for the duals of free two-step algebras plus an abelian factor.

For each (f, a) prints the distinct alpha values, whether all are positive
and whether the exact metric certifies a nilsoliton.

    python scripts/dual_free_table.py --f-max 6 --a-max 6
"""

import argparse
from collections import Counter
from dataclasses import dataclass

from nilrad.algebra import dualize, free_two_step
from nilrad.nilsoliton import build_nice_Y, nice_basis_certificate, solve_alpha


@dataclass
class TableConfig:
    f_max: int = 6
    a_max: int = 6
    tol: float = 1e-10


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--f-max", type=int, default=TableConfig.f_max)
    ap.add_argument("--a-max", type=int, default=TableConfig.a_max)
    args = ap.parse_args(argv)
    cfg = TableConfig(args.f_max, args.a_max)
    print(f"{'f':>3} {'a':>3} {'dim':>5}  {'positive':>8} {'certified':>9}  alpha (value x count)")
    for f in range(2, cfg.f_max + 1):
        for a in range(1, cfg.a_max + 1):
            n = dualize(free_two_step(f, a))
            sol = solve_alpha(build_nice_Y(n))
            certified = False
            if sol.positive:
                _, cert = nice_basis_certificate(n)
                certified = cert is not None and cert.certified(cfg.tol)
            alpha = ", ".join(f"{v} x{m}" for v, m in sorted(Counter(sol.alpha).items()))
            print(f"{f:>3} {a:>3} {n.dim:>5}  {str(sol.positive):>8} {str(certified):>9}  {alpha}")


if __name__ == "__main__":
    main()
