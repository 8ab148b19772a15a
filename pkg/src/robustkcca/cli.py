"""Command-line interface.

Every subcommand writes CSV (17 significant digits) to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiments.config import EXPERIMENTS, build_config, parse_kernel, parse_pairs
from .experiments.io import TabularResult, dataset_table, emit_csv, ingest_dataset, to_csv
from .experiments.runs import run_experiment
from .influence import index_plot_data
from .kcca import KccaModel, canonical_variates, classical_kcca, robust_kcca
from .kernels import gram
from .robust import RobustLoss, robust_center
from .synthdata import GENERATORS, generate


def _write(result: TabularResult, out) -> None:
    if out:
        emit_csv(result, out)
    else:
        sys.stdout.write(to_csv(result))


def _matrix_table(M, prefix: str = "c") -> TabularResult:
    M = np.atleast_2d(M)
    result = TabularResult([f"{prefix}{j + 1}" for j in range(M.shape[1])])
    result.rows.extend(tuple(row) for row in M)
    return result


def _loss(args) -> RobustLoss:
    if args.loss == "huber":
        return RobustLoss.huber(args.c)
    if args.loss == "hampel":
        return RobustLoss.hampel(args.c)
    return RobustLoss.quadratic()


def _view(ds, view: str):
    data = ds.X if view == "x" else ds.Y
    if data is None:
        raise ValueError("the data file has no y1, y2, ... columns")
    return data


def cmd_gen_data(args) -> None:
    options = parse_pairs({f"gen.{k}": v for k, v in (kv.split("=", 1) for kv in args.option)})
    options = options.get("generator_options", {})
    ds = generate(args.generator, args.n, contaminated=args.contaminated, fraction=args.fraction,
                  seed=args.seed, **options)
    _write(dataset_table(ds), args.out)


def cmd_gram(args) -> None:
    ds = ingest_dataset(args.data, label_column=args.label)
    data = _view(ds, args.view)
    _write(_matrix_table(gram(parse_kernel(args.kernel, data), data).values), args.out)


def cmd_robust_gram(args) -> None:
    ds = ingest_dataset(args.data, label_column=args.label)
    data = _view(ds, args.view)
    centered, weights = robust_center(gram(parse_kernel(args.kernel, data), data), _loss(args))
    _write(_matrix_table(centered.values), args.out)
    if args.weights_out:
        emit_csv(_matrix_table(weights[:, None], "w"), args.weights_out)


def _kcca_output(model: KccaModel, args) -> None:
    result = TabularResult(["component", "rho"])
    for j, r in enumerate(model.rho, start=1):
        result.add(j, r)
    _write(result, args.out)
    if args.variates_out:
        fx, fy = canonical_variates(model, model.Kx, model.Ky)
        emit_csv(_matrix_table(np.hstack([fx, fy]), "f"), args.variates_out)


def _fit_from_args(args, robust: bool) -> KccaModel:
    ds = ingest_dataset(args.data, label_column=args.label)
    X, Y = ds.X, _view(ds, "y")
    Kx = gram(parse_kernel(args.kernel_x, X), X)
    Ky = gram(parse_kernel(args.kernel_y, Y), Y)
    if robust:
        return robust_kcca(Kx, Ky, _loss(args), args.kappa, args.components)
    return classical_kcca(Kx, Ky, args.kappa, args.components)


def cmd_kcca(args) -> None:
    _kcca_output(_fit_from_args(args, robust=False), args)


def cmd_robust_kcca(args) -> None:
    _kcca_output(_fit_from_args(args, robust=True), args)


def cmd_influence(args) -> None:
    args.components = max(args.components, args.j)
    model = _fit_from_args(args, robust=args.robust)
    result = TabularResult(["subject", "if_rho"])
    for rec in index_plot_data(model, args.j - 1):
        result.add(rec.point_index, rec.if_rho)
    _write(result, args.out)


def cmd_experiment(args) -> None:
    overrides = dict(kv.split("=", 1) for kv in args.set)
    for key in ("seed", "replicates", "output"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = str(value)
    config = build_config(args.kind, args.config, overrides)
    result = run_experiment(config)
    path = emit_csv(result, config.output_path())
    print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustkcca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p, views=True):
        p.add_argument("--data", required=True, help="CSV/TSV file; y1, y2, ... columns form the second view")
        p.add_argument("--label", default=None, help="label column to exclude (name or index)")
        p.add_argument("--out", default=None, help="output CSV (default: stdout)")
        if views:
            p.add_argument("--view", choices=("x", "y"), default="x")

    def loss_args(p, default="huber"):
        p.add_argument("--loss", choices=("quadratic", "huber", "hampel"), default=default)
        p.add_argument("--c", type=float, default=None,
                       help="huber c or hampel c1 (default: median initial residual)")

    def kcca_args(p):
        data_args(p, views=False)
        p.add_argument("--kernel-x", default="gaussian")
        p.add_argument("--kernel-y", default="gaussian")
        p.add_argument("--kappa", type=float, default=1e-5)
        p.add_argument("--components", type=int, default=1)
        p.add_argument("--variates-out", default=None, help="also write variates at the training points")

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--generator", choices=sorted(GENERATORS), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--contaminated", action="store_true")
    p.add_argument("--fraction", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--option", action="append", default=[], metavar="KEY=VALUE",
                   help="extra generator parameter, e.g. noise_cd=10")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("gram", help="Gram matrix of one view")
    data_args(p)
    p.add_argument("--kernel", default="gaussian", help="linear, poly-d, gaussian[:sigma], laplacian[:beta]")
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("robust-gram", help="Gram matrix centered at the robust kernel mean element")
    data_args(p)
    p.add_argument("--kernel", default="gaussian")
    loss_args(p)
    p.add_argument("--weights-out", default=None)
    p.set_defaults(func=cmd_robust_gram)

    p = sub.add_parser("kcca", help="classical kernel CCA")
    kcca_args(p)
    p.set_defaults(func=cmd_kcca)

    p = sub.add_parser("robust-kcca", help="robust kernel CCA")
    kcca_args(p)
    loss_args(p)
    p.set_defaults(func=cmd_robust_kcca)

    p = sub.add_parser("influence", help="per-subject influence on the squared canonical correlation")
    kcca_args(p)
    loss_args(p)
    p.add_argument("--j", type=int, default=1, help="1-based component")
    p.add_argument("--robust", action="store_true", help="evaluate at the robust fit")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("experiment", help="run an experiment and write its CSV")
    p.add_argument("kind", choices=EXPERIMENTS)
    p.add_argument("--config", default=None, help="flat key = value file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--output", default=None,
                   help="output CSV; relative paths resolve under $ROBUSTKCCA_OUTPUT_DIR")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
