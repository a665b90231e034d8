"""Regenerate the tensor files shipped in src/tensorlab/corpus."""

from __future__ import annotations

import json
import random
from pathlib import Path

from tensorlab.borderlab import normal_form_122, normal_form_322, w_state_curve
from tensorlab.exactalg import GF, QQ
from tensorlab.tensor3 import Tensor3, diag_tensor, direct_sum, mm_tensor, tensor_to_json, w_state, write_tensor

OUT = Path(__file__).resolve().parents[1] / "src" / "tensorlab" / "corpus"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    F2 = GF(2)
    files = {
        "mm222.gf2.json": mm_tensor(2, 2, 2, F2),
        "mm222.q.json": mm_tensor(2, 2, 2, QQ),
        "w_state.gf2.json": w_state(F2),
        "w_state.q.json": w_state(QQ),
        "diag2.gf2.json": diag_tensor(2, F2),
        "diag3.gf2.json": diag_tensor(3, F2),
        "diag3.q.json": diag_tensor(3, QQ),
        "mu213.q.json": mm_tensor(2, 1, 3, QQ),
        "mu121.q.json": mm_tensor(1, 2, 1, QQ),
        "normal_form_322.q.json": normal_form_322(QQ),
        "normal_form_122.q.json": normal_form_122(QQ),
        "w_plus_w.gf2.json": direct_sum(w_state(F2), w_state(F2)),
        "generic333.q.json": Tensor3.random(QQ, (3, 3, 3), random.Random(0)),
        "unit222.q.json": diag_tensor(2, QQ),
    }
    for name, p in files.items():
        write_tensor(p, OUT / name)
    for tag, field in (("q", QQ), ("gf2", F2)):
        curve = w_state_curve(field)
        obj = {"target": tensor_to_json(curve.target), **curve.to_json()}
        (OUT / f"w_state_curve.{tag}.json").write_text(json.dumps(obj) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
