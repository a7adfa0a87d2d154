"""Command-line front end.

Usage: ``cicopula <command> --model MODEL.json [options]``. Numbers are
printed with 12 significant digits; tables are CSV with a header line.

Exit codes: 0 success, 2 model file parse/validation error, 3 numerical
failure, 4 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import copulas, marginals
from .model import (
    CiModel,
    Component,
    direct_fgm_candidate,
    fgm_pair_candidate,
    joint_cdf,
    joint_copula,
    joint_copula_with_z,
    model_candidate,
    product_candidate,
    stress_strength,
    verify_ci,
)
from .montecarlo import sample
from .numerics import gauss_rule
from .orderstats import extreme_cdfs, mrl, pair_cdf, single_cdf

EXIT_OK = 0
EXIT_MODEL = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 4

QUAD_ENV = "CICOPULA_QUADRATURE_ORDER"
DIGITS = 12


class ModelFileError(ValueError):
    pass


class UsageError(ValueError):
    pass


def fmt(value: float) -> str:
    return format(float(value), f".{DIGITS}g")


def _build(registry, entry, what: str):
    if not isinstance(entry, dict) or "family" not in entry:
        raise ModelFileError(f"{what}: expected an object with a 'family' key")
    params = dict(entry)
    name = params.pop("family")
    cls = registry.get(name)
    if cls is None:
        raise ModelFileError(f"{what}: unknown family {name!r} (known: {', '.join(sorted(registry))})")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ModelFileError(f"{what}: bad parameters for {name!r}: {params}") from exc
    except ValueError as exc:
        raise ModelFileError(f"{what}: {exc}") from exc


def model_from_dict(doc: dict, quadrature_order: int | None = None) -> CiModel:
    if not isinstance(doc, dict):
        raise ModelFileError("model file must hold a JSON object")
    comps = doc.get("components")
    if not isinstance(comps, list) or not comps:
        raise ModelFileError("model needs at least one component")
    built = []
    for i, comp in enumerate(comps, start=1):
        if not isinstance(comp, dict):
            raise ModelFileError(f"component {i}: expected an object")
        built.append(
            Component(
                _build(copulas.FAMILIES, comp.get("copula"), f"component {i} copula"),
                _build(marginals.FAMILIES, comp.get("marginal"), f"component {i} marginal"),
            )
        )
    z = doc.get("z", {"marginal": {"family": "uniform01"}})
    z_marg = _build(marginals.FAMILIES, z.get("marginal") if isinstance(z, dict) else None, "z marginal")

    order = doc.get("quadrature_order", quadrature_order)
    quad = None
    if order is not None:
        try:
            quad = gauss_rule(order)
        except ValueError as exc:
            raise ModelFileError(str(exc)) from exc
    try:
        return CiModel(tuple(built), z_marg, quad)
    except ValueError as exc:
        raise ModelFileError(str(exc)) from exc


def parse_model(path, quadrature_order: int | None = None) -> CiModel:
    """Load a model file; quadrature defaults to the family-aware rule."""
    if quadrature_order is None and os.environ.get(QUAD_ENV):
        try:
            quadrature_order = int(os.environ[QUAD_ENV])
        except ValueError as exc:
            raise UsageError(f"{QUAD_ENV} must be an integer") from exc
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelFileError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc, quadrature_order)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` -> ``a, a + step, ...`` up to and including ``b``."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"grid must look like a:b:step, got {text!r}") from exc
    if not step > 0:
        raise UsageError("grid step must be positive")
    if b < a:
        raise UsageError("grid end must not precede its start")
    count = math.floor((b - a) / step + 1e-9) + 1
    return a + step * np.arange(count)


def _candidate(name: str, model: CiModel):
    if not name.startswith("builtin:"):
        raise UsageError("candidate must be given as builtin:<name>")
    kind = name.split(":", 1)[1]
    if kind == "product":
        return product_candidate(model.n)
    if kind == "model":
        return model_candidate(model)
    if kind in ("fgm-pair", "direct-fgm"):
        cops = model.copulas
        if model.n < 2 or not isinstance(cops[0], copulas.FGM):
            raise UsageError(f"builtin:{kind} needs an FGM first component")
        alpha = cops[0].alpha
        factory = fgm_pair_candidate if kind == "fgm-pair" else direct_fgm_candidate
        return factory(alpha, model.n)
    raise UsageError(f"unknown builtin candidate {kind!r} (product, model, fgm-pair, direct-fgm)")


def _write_table(header: Sequence[str], rows, out) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
        return ""
    return text


def _table(model: CiModel, args) -> str:
    grid = parse_grid(args.grid)
    op = args.op
    need = {"order-cdf": ("r",), "pair-cdf": ("r", "s", "y"), "mrl": ("k", "r")}.get(op, ())
    missing = [f"--{n}" for n in need if getattr(args, n) is None]
    if missing:
        raise UsageError(f"table --op {op} needs {' '.join(missing)}")
    if op == "order-cdf":
        rows = [(x, single_cdf(model, args.r, x)) for x in grid]
        header = ["x", f"F_{args.r}:{model.n}"]
    elif op == "pair-cdf":
        rows = [(x, pair_cdf(model, args.r, args.s, x, args.y)) for x in grid]
        header = ["x", f"F_{args.r},{args.s}:{model.n}(x;y={fmt(args.y)})"]
    elif op == "joint-cdf":
        rows = [(x, joint_cdf(model, [x] * model.n)) for x in grid]
        header = ["x", "joint_cdf"]
    elif op == "extremes":
        rows = [(x, *extreme_cdfs(model, x)) for x in grid]
        header = ["x", "min_cdf", "max_cdf"]
    elif op == "mrl":
        rows = [(t, mrl(model, args.k, args.r, t)) for t in grid]
        header = ["t", f"mrl_{args.k},{args.r}"]
    else:
        raise UsageError(f"unknown table op {op!r}")
    return _write_table(header, rows, args.out)


def run(args) -> str:
    model = parse_model(args.model)
    cmd = args.command
    if cmd == "eval-copula":
        u = _floats(args.u)
        if args.w is None:
            return fmt(joint_copula(model, u))
        return fmt(joint_copula_with_z(model, u, args.w))
    if cmd == "joint-cdf":
        return fmt(joint_cdf(model, _floats(args.x)))
    if cmd == "order-cdf":
        return fmt(single_cdf(model, args.r, args.x))
    if cmd == "pair-cdf":
        return fmt(pair_cdf(model, args.r, args.s, args.x, args.y))
    if cmd == "stress":
        return fmt(stress_strength(model, args.i, args.j))
    if cmd == "mrl":
        return fmt(mrl(model, args.k, args.r, args.t))
    if cmd == "verify-ci":
        report = verify_ci(_candidate(args.candidate, model), model, grid_size=args.grid)
        return f"{fmt(report.residual)} {'PASS' if report.passed else 'FAIL'}"
    if cmd == "sample":
        batch = sample(model, args.count, args.seed)
        header = [f"x{i}" for i in range(1, model.n + 1)] + ["z"]
        return _write_table(header, batch.columns, args.out)
    if cmd == "table":
        return _table(model, args)
    raise UsageError(f"unknown command {cmd!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cicopula", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", "-m", required=True, help="model file (JSON)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval-copula", parents=[common], help="joint copula C(u) or C(u, w)")
    p.add_argument("--u", required=True, help="comma-separated u_1..u_n")
    p.add_argument("--w", type=float)

    p = sub.add_parser("joint-cdf", parents=[common], help="F(x_1, ..., x_n)")
    p.add_argument("--x", required=True, help="comma-separated x_1..x_n")

    p = sub.add_parser("order-cdf", parents=[common], help="P{X_(r:n) <= x}")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--x", type=float, required=True)

    p = sub.add_parser("pair-cdf", parents=[common], help="P{X_(r:n) <= x, X_(s:n) <= y}")
    for name in ("r", "s"):
        p.add_argument(f"--{name}", type=int, required=True)
    for name in ("x", "y"):
        p.add_argument(f"--{name}", type=float, required=True)

    p = sub.add_parser("stress", parents=[common], help="P{X_i < X_j}")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)

    p = sub.add_parser("mrl", parents=[common], help="E[X_(k:n) - t | X_(r:n) > t]")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("verify-ci", parents=[common], help="conditional-independence check")
    p.add_argument("--candidate", required=True, help="builtin:product|model|fgm-pair|direct-fgm")
    p.add_argument("--grid", type=int, default=11)

    p = sub.add_parser("sample", parents=[common], help="Monte Carlo draws as CSV")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("table", parents=[common], help="CSV table of an operation over a grid")
    p.add_argument("--op", required=True, choices=["order-cdf", "pair-cdf", "joint-cdf", "extremes", "mrl"])
    p.add_argument("--grid", required=True, help="a:b:step")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--y", type=float)
    p.add_argument("--out")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
    except ModelFileError as exc:
        print(f"cicopula: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except ArithmeticError as exc:
        print(f"cicopula: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, IndexError) as exc:
        print(f"cicopula: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if text:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
