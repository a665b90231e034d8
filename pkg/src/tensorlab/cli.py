"""Command line front end.

Reports go to stdout as JSON, a one-line summary goes to stderr.
Exit status: 0 when the question is decided, 2 when only an interval is
known, 1 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .exactalg import Field
from .tensor3 import Splitting, Tensor3, TensorFormatError, direct_sum, mm_tensor, read_tensor, slice_space, write_tensor

log = logging.getLogger("tensorlab")

CORPUS = Path(__file__).resolve().parent / "corpus"

EXIT_DECIDED, EXIT_ERROR, EXIT_INTERVAL = 0, 1, 2


class CliError(Exception):
    pass


def resolve_path(name: str) -> Path:
    """A file path, or the basename of a file shipped with the package."""
    path = Path(name)
    if path.exists():
        return path
    alt = CORPUS / path.name
    if alt.exists():
        return alt
    raise CliError(f"no such file: {name}")


def load(name: str, field: str | None = None) -> Tensor3:
    override = Field.parse(field) if field else None
    return read_tensor(resolve_path(name), override)


def _report(command: str, args: argparse.Namespace, body: dict, started: float) -> dict:
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "command", "verbose") and v is not None}
    return {
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "inputs": inputs,
        "result": body,
        "timing": {"seconds": round(time.perf_counter() - started, 4)},
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_rank(args) -> tuple[dict, int]:
    from .rankengine import rank_bounds, tensor_rank

    p = load(args.path, args.field_override)
    if p.field.is_finite:
        cert = tensor_rank(p, args.budget, strategy=args.strategy)
        body = {"field": p.field.name, "dims": list(p.dims), "certificate": cert.to_json()}
        summary = f"rank {cert.value}" if cert.kind == "exact" else f"rank > {cert.value - 1}"
        log.info(summary)
        return body, EXIT_DECIDED if cert.kind == "exact" else EXIT_INTERVAL
    res = rank_bounds(p, args.budget)
    body = {"field": p.field.name, "dims": list(p.dims), **res.to_json()}
    log.info("rank in [%s, %s]", *res.interval)
    return body, EXIT_DECIDED if res.exact else EXIT_INTERVAL


def _rank_mode(p1: Tensor3, p2: Tensor3, budget: int | None) -> tuple[dict, int]:
    from .rankengine import additivity_check
    from .sumsplit import make_split_pair, theorem_gate

    gate = theorem_gate(p1, p2)
    rep = additivity_check(p1, p2, budget)
    body = {"gates": gate.to_json(), "oracle": rep.to_json()}
    if p1.field.is_finite and rep.status != "undecided":
        pair = make_split_pair(direct_sum(p1, p2))
        body["classification"] = pair.cd.to_json()
    decided = rep.status != "undecided" or gate.guaranteed
    status = rep.status if rep.status != "undecided" else ("additive" if gate.guaranteed else "undecided")
    body["status"] = status
    log.info("additivity: %s", status)
    return body, EXIT_DECIDED if decided else EXIT_INTERVAL


def cmd_additivity(args) -> tuple[dict, int]:
    p1 = load(args.path1, args.field_override)
    p2 = load(args.path2, args.field_override)
    if p1.field != p2.field:
        raise CliError("tensors are over different fields")
    if args.mode == "rank":
        return _rank_mode(p1, p2, args.budget)
    from .borderlab import border_additivity_report

    body = border_additivity_report(p1, p2, seed=args.seed)
    log.info("border additivity: %s (%s)", body["status"], body["reason"])
    decided = body["status"] in ("additive", "violated-per-literature")
    return body, EXIT_DECIDED if decided else EXIT_INTERVAL


def _parse_split(text: str) -> Splitting:
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise CliError("--split takes six comma separated integers") from None
    if len(vals) != 6:
        raise CliError("--split takes six comma separated integers")
    return Splitting((vals[0], vals[1]), (vals[2], vals[3]), (vals[4], vals[5]))


def cmd_classify(args) -> tuple[dict, int]:
    from .sumsplit import classify_basis, make_split_pair
    from .tensor3 import MatrixSubspace

    p = load(args.path, args.field_override)
    split = _parse_split(args.split)
    if split.dims != p.dims:
        raise CliError(f"split {split.tolist()} does not match dims {list(p.dims)}")
    if not p.field.is_finite:
        raise CliError("classification enumerates rank-one matrices and needs a finite field")
    if args.decompose:
        pair = make_split_pair(p.with_split(split))
        body = {"ranks": list(pair.checks["ranks"]), "classification": pair.cd.to_json()}
    else:
        V = slice_space(p, 0)
        V = MatrixSubspace(p.field, V.shape, V.basis)
        body = {"classification": classify_basis(V, split).to_json()}
    log.info("bucket counts %s", body["classification"]["counts"])
    return body, EXIT_DECIDED


def cmd_flatten(args) -> tuple[dict, int]:
    from .borderlab import flattening_lower_bound, koszul_flattening

    p = load(args.path, args.field_override)
    body = {"dims": list(p.dims), "flattening_ranks": list(p.flattening_ranks()), "koszul": []}
    for ax in range(3):
        if p.dims[ax] in (3, 4):
            fm = koszul_flattening(p, ax)
            entry = fm.to_json()
            if args.show_matrix:
                entry["matrix"] = fm.matrix.to_strings()
            body["koszul"].append(entry)
    cert = flattening_lower_bound(p)
    body["lower_bound"] = cert.to_json()
    log.info("border rank >= %d (%s)", cert.value, cert.method)
    return body, EXIT_DECIDED


def cmd_table(args) -> tuple[dict, int]:
    from .borderlab import format_table, open_case_table

    try:
        rows = open_case_table(args.max_dim)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    log.info("%d open pairs", len(rows))
    return {"max_dim": args.max_dim, "rows": rows, "text": format_table(rows)}, EXIT_DECIDED


def cmd_mm(args) -> tuple[dict, int]:
    field = Field.parse(args.field)
    p = mm_tensor(args.i, args.j, args.k, field)
    write_tensor(p, args.out)
    log.info("wrote %s", args.out)
    return {"dims": list(p.dims), "field": field.name, "out": str(args.out)}, EXIT_DECIDED


def cmd_verify_curve(args) -> tuple[dict, int]:
    from .borderlab import LaurentTensorCurve, verify_border_decomposition
    from .tensor3 import tensor_from_json

    path = resolve_path(args.path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
        target = tensor_from_json(obj["target"])
        curve = LaurentTensorCurve.from_json(obj, target)
    except (KeyError, json.JSONDecodeError) as exc:
        raise CliError(f"malformed curve file: {exc}") from None
    cert = verify_border_decomposition(curve)
    body = {"certificate": cert.to_json()}
    if target.field.is_finite and sum(target.dims) <= 9:
        from .rankengine import tensor_rank

        r = tensor_rank(target)
        body["rank"] = r.to_json()
        body["strict_gap"] = r.kind == "exact" and r.value > cert.value
    log.info("border rank <= %d", cert.value)
    return body, EXIT_DECIDED


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tensorlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank", parents=[common], help="tensor rank with certificate")
    p.add_argument("path")
    p.add_argument("--budget", type=int)
    p.add_argument("--field-override")
    p.add_argument("--strategy", choices=["completion", "dfs"], default="completion")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("additivity", parents=[common], help="rank or border rank of a direct sum")
    p.add_argument("path1")
    p.add_argument("path2")
    p.add_argument("--mode", choices=["rank", "border"], default="rank")
    p.add_argument("--budget", type=int)
    p.add_argument("--field-override")
    p.set_defaults(func=cmd_additivity)

    p = sub.add_parser("classify", parents=[common], help="type counts of a rank-one basis")
    p.add_argument("path", help="tensor whose A-slices span V (or the direct sum with --decompose)")
    p.add_argument("--split", required=True, help="a1,a2,b1,b2,c1,c2")
    p.add_argument("--decompose", action="store_true", help="treat the file as W and find a minimal V")
    p.add_argument("--field-override")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("flatten", parents=[common], help="Koszul flattenings and border rank lower bound")
    p.add_argument("path")
    p.add_argument("--show-matrix", action="store_true")
    p.add_argument("--field-override")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("table", parents=[common], help="open border-additivity cases")
    p.add_argument("--max-dim", type=int, default=5)
    p.add_argument("--text", action="store_true", help="print the plain table instead of JSON")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("mm", parents=[common], help="write a matrix multiplication tensor")
    p.add_argument("i", type=int)
    p.add_argument("j", type=int)
    p.add_argument("k", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--field", default="Q")
    p.set_defaults(func=cmd_mm)

    p = sub.add_parser("verify-curve", parents=[common], help="check an ε-curve border decomposition")
    p.add_argument("path")
    p.set_defaults(func=cmd_verify_curve)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    started = time.perf_counter()
    try:
        body, code = args.func(args)
    except (CliError, TensorFormatError, ValueError) as exc:
        log.error("%s", exc)
        print(json.dumps({"command": args.command, "error": str(exc)}, sort_keys=True))
        return EXIT_ERROR
    if args.command == "table" and args.text:
        sys.stdout.write(body["text"])
        return code
    print(json.dumps(_report(args.command, args, body, started), sort_keys=True, indent=2, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
