"""Bucket counts of a decomposition of a direct sum.

Builds a direct sum over GF(2), finds a minimal rank-one basis for its
slice space, sorts the basis into the seven bucket types, then runs
repletion and digestion on it.
"""

from __future__ import annotations

import argparse
import random

from tensorlab.exactalg import GF
from tensorlab.sumsplit import check_projection_inequalities, digestion, make_split_pair, repletion
from tensorlab.tensor3 import Tensor3, direct_sum, w_state


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    F2 = GF(2)

    p = direct_sum(w_state(F2), Tensor3.random(F2, (2, 1, 2), rng))
    pair = make_split_pair(p)
    r1, r2, r = pair.checks["ranks"]
    print(f"ranks: {r1} + {r2}, sum {r}")
    print("counts:", pair.cd.counts)
    print("E/F dims:", pair.cd.profile.dims)
    print("inequalities hold:", all(check_projection_inequalities(pair.cd, r1, r2).values()))

    rep = repletion(pair)
    print(f"after repletion: dims {rep.W1.dim} + {rep.W2.dim}, checks ok {all(rep.checks.values())}")
    dig = digestion(rep)
    print("after digestion: rank of W and of complements", dig.checks["ranks"])


if __name__ == "__main__":
    main()
