"""Rank versus border rank on the smallest interesting tensors.

Computes exact ranks over GF(2), then checks a two-term ε-curve that
approximates the W-state.
"""

from __future__ import annotations

import argparse

from tensorlab.borderlab import verify_border_decomposition, w_state_curve
from tensorlab.exactalg import GF
from tensorlab.rankengine import tensor_rank
from tensorlab.tensor3 import diag_tensor, mm_tensor, w_state


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--skip-mm", action="store_true", help="skip the 2x2 matrix multiplication tensor")
    args = ap.parse_args()
    F2 = GF(2)

    for n in (1, 2, 3):
        print(f"diag{n}: rank {tensor_rank(diag_tensor(n, F2)).value}")

    w = tensor_rank(w_state(F2))
    curve = verify_border_decomposition(w_state_curve(F2))
    print(f"W-state: rank {w.value}, ε-curve with {curve.value} terms (lowest order {curve.evidence['order']})")

    if not args.skip_mm:
        cert = tensor_rank(mm_tensor(2, 2, 2, F2))
        print(f"2x2 matrix multiplication: rank {cert.value}, no decomposition of length {cert.searched_depth}")


if __name__ == "__main__":
    main()
