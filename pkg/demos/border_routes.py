"""Border additivity: which routes settle which pairs.

Walks through a direct sum that is known to break additivity, a
3x3x3 summand handled by a projected flattening, and the table of
format pairs that no route covers.
"""

from __future__ import annotations

import argparse
import random

from tensorlab.borderlab import border_additivity_report, format_table, open_case_table, sigma4_test_333
from tensorlab.exactalg import QQ, Matrix
from tensorlab.tensor3 import Tensor3, mm_tensor


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-dim", type=int, default=5)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    rep = border_additivity_report(mm_tensor(2, 1, 3, QQ), mm_tensor(1, 2, 1, QQ))
    print(f"mm(2,1,3) + mm(1,2,1): {rep['status']}, lower {rep['lower_sum']['value']}, naive {rep['naive_sum']}")

    while True:
        p1 = Tensor3.random(QQ, (3, 3, 3), rng)
        if sigma4_test_333(p1).kind == "lower":
            break
    for b in (1, 2, 3):
        w = Matrix.identity(QQ, b)
        rep = border_additivity_report(p1, Tensor3.from_slices(QQ, [w]))
        ev = rep.get("evidence", {})
        print(f"generic 3x3x3 + 1x{b}x{b}: {rep['status']} via {rep['reason']}, koszul rank {ev.get('koszul_rank')}")

    rows = open_case_table(args.max_dim)
    print(f"\nformat pairs left open with dims <= {args.max_dim}: {len(rows)}")
    print(format_table(rows), end="")


if __name__ == "__main__":
    main()
