"""Command line: ``silvar {fit,grid,predict,trend,synth,eval}``.

Dataset CSVs have a header row and one row per sample. In multitask mode,
columns whose header starts with ``y`` are responses and the rest are
regressors; in ``ar`` and ``rpca`` mode every column is a series.
Exit codes: 0 success, 2 bad input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import models, synth
from .core import (
    Dataset,
    RegularizerSpec,
    SilvarError,
    SolverConfig,
    SolverError,
    deserialize_model,
    serialize_model,
)

H1 = {"l1": "element_l1", "group": "group_l2_across_lags", "none": "none"}
H2 = {"nuclear": "nuclear_norm", "ball": "nuclear_ball", "none": "none"}


class InputError(Exception):
    pass


# ---------------------------------------------------------------- io


def read_csv(path) -> tuple[list, np.ndarray]:
    """Header and ``samples x columns`` float matrix."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise InputError(f"{path}: need a header row and at least one sample")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InputError(f"{path}: ragged rows or header/column count mismatch")
    return header, data


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def load_multitask(path) -> Dataset:
    header, data = read_csv(path)
    is_y = np.array([h.lower().startswith("y") for h in header])
    if not is_y.any() or is_y.all():
        raise InputError(f"{path}: need both response (y*) and regressor columns")
    return Dataset(data[:, is_y].T, data[:, ~is_y].T)


def load_series(path) -> np.ndarray:
    return read_csv(path)[1].T


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False))


# ---------------------------------------------------------------- fitting helpers


def _regularizer(args, ls=None, ll=None) -> RegularizerSpec:
    return RegularizerSpec(
        H1[args.h1], H2[args.h2],
        args.lambda_s if ls is None else ls,
        args.lambda_l if ll is None else ll,
    )


def _config(args) -> SolverConfig:
    return SolverConfig(max_iters=args.max_iters, objective_tolerance=args.tol, seed=args.seed)


def _fitter(args, data):
    """``fit(lambda_s, lambda_l, init)`` for the selected mode and link."""
    config = _config(args)
    if args.mode == "ar":
        if args.link != "auto":
            raise InputError("fixed links are only available in multitask mode")

        def fit(ls, ll, init=None):
            return models.fit_silvar_ar(data, args.order, _regularizer(args, ls, ll), config, init=init)
    elif args.mode == "rpca":
        def fit(ls, ll, init=None):
            return models.fit_rpca(data, _regularizer(args, ls, ll), config)
    elif args.link == "auto":
        def fit(ls, ll, init=None):
            return models.fit_silvar(data, _regularizer(args, ls, ll), config, init=init)
    else:
        link = {"logistic": "scaled_logistic"}.get(args.link, args.link)

        def fit(ls, ll, init=None):
            return models.fit_glm_oracle(data, link, _regularizer(args, ls, ll), config, init=init)
    return fit


def _load_for_mode(args, path):
    if args.mode == "multitask":
        return load_multitask(path)
    data = load_series(path)
    if args.mode == "ar" and data.shape[1] <= 2 * args.order:
        raise InputError(f"series length {data.shape[1]} must exceed 2 * order = {2 * args.order}")
    return data


def _save_fit(out: Path, model, report, args) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_bytes(serialize_model(model))
    _write_json(out / "report.json", report.to_dict())
    if model.mode == "autoregressive":
        W = models.adjacency(model)
        rows = [(i, j, W[i, j]) for i, j in zip(*np.nonzero(W))]
        write_csv(out / "edges.csv", ["target", "source", "weight"], rows)


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    data = _load_for_mode(args, args.data)
    model, report = _fitter(args, data)(args.lambda_s, args.lambda_l)
    _save_fit(Path(args.out), model, report, args)
    print(f"fit: {report.iterations} iterations, converged={report.converged}")
    return 0


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"grid range must look like i_min:i_max, got {text!r}") from None
    if hi < lo:
        raise InputError("grid range is empty")
    return lo, hi


def cmd_grid(args) -> int:
    train = _load_for_mode(args, args.data)
    lo, hi = _parse_range(args.grid)
    lam = models.lambda_grid(lo, hi)
    if args.truth:
        truth = json.loads(Path(args.truth).read_text())
        A_true = np.asarray(truth["A"], dtype=float)

        def score(model):
            return models.l1_error(model.A, A_true)
    else:
        if not args.valid:
            raise InputError("grid needs --valid data or --truth")
        valid = _load_for_mode(args, args.valid)
        if args.mode == "multitask":
            if valid.m != train.m or valid.p != train.p:
                raise InputError("validation data dimensions differ from training data")
            Xv, Yv = valid.X, valid.Y
        elif args.mode == "ar":
            if valid.shape[0] != train.shape[0]:
                raise InputError("validation series count differs from training data")
            design = models.ArDesign(valid, args.order)
            Xv, Yv = design.X, design.Y
        else:
            if valid.shape != train.shape:
                raise InputError("validation data dimensions differ from training data")
            Xv, Yv = np.eye(valid.shape[1]), valid

        def score(model):
            return models.rmse(Yv, models.predict(model, Xv))

    result = models.grid_search(_fitter(args, train), score, lam, lam)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "grid.csv", ["lambda_s", "lambda_l", "metric", "iterations", "converged"],
              [(c.lambda_s, c.lambda_l, c.metric, c.iterations, int(c.converged)) for c in result.cells])
    (out / "model.json").write_bytes(serialize_model(result.model))
    best = result.cells[result.best]
    print(f"grid: best lambda_s={best.lambda_s:g} lambda_l={best.lambda_l:g} metric={best.metric:.6g}")
    return 0


def _load_model(path):
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    return deserialize_model(path.read_bytes())


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    if model.mode == "autoregressive":
        X = models.ArDesign(load_series(args.data), model.order).X
    else:
        header, data = read_csv(args.data)
        keep = [i for i, h in enumerate(header) if not h.lower().startswith("y")]
        X = data[:, keep].T
    Y_hat = models.predict(model, X)
    write_csv(args.out, [f"y{i}" for i in range(Y_hat.shape[0])], Y_hat.T)
    return 0


def cmd_trend(args) -> int:
    model = _load_model(args.model)
    series = load_series(args.data)
    est = models.fit_trend(series, model, args.ridge)
    write_csv(args.out, [f"s{i}" for i in range(est.L_prime.shape[0])], est.L_prime.T)
    lo, hi = est.reliable_range
    print(f"trend: reliable columns {lo}..{hi} (1-based), converged={est.converged}")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "ar":
        truth = synth.generate_ar_with_trend(args.N, args.K, args.order, args.trend,
                                             link_kind=args.link, c=args.c, seed=args.seed)
        header = [f"s{i}" for i in range(truth.series.shape[0])]
        write_csv(out / "series.csv", header, truth.series.T)
        _write_json(out / "truth.json", {"A": truth.A.tolist(), "trend": truth.trend.tolist(), "order": args.order})
        return 0
    spec = synth.SynthSpec(m=args.m, p=args.p, h=args.h, n=args.n, link_kind=args.link,
                           c=args.c, noise_sigma=args.sigma, seed=args.seed)
    truth = synth.generate_multitask(spec)
    header = [f"y{i}" for i in range(spec.m)] + [f"x{j}" for j in range(spec.p)]
    write_csv(out / "train.csv", header, np.vstack([truth.Y, truth.X]).T)
    if args.n_valid:
        Xv, _, Yv = synth.draw_samples(truth, args.n_valid, args.seed + 1)
        write_csv(out / "valid.csv", header, np.vstack([Yv, Xv]).T)
    _write_json(out / "truth.json", {"A": truth.A_true.tolist(), "B": truth.B_true.tolist()})
    return 0


def cmd_eval(args) -> int:
    result = {}
    if args.model and args.truth:
        model = _load_model(args.model)
        A_true = np.asarray(json.loads(Path(args.truth).read_text())["A"], dtype=float)
        result["l1_error"] = models.l1_error(model.A, A_true)
    if args.pred and args.target:
        _, P = read_csv(args.pred)
        header, T = read_csv(args.target)
        ycols = [i for i, h in enumerate(header) if h.lower().startswith("y")] or list(range(T.shape[1]))
        result["rmse"] = models.rmse(T[:, ycols], P)
    if not result:
        raise InputError("eval needs --model with --truth, or --pred with --target")
    print(json.dumps(result))
    return 0


# ---------------------------------------------------------------- parser


def _fit_flags(p) -> None:
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("multitask", "ar", "rpca"), default="multitask")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--h1", choices=tuple(H1), default="l1")
    p.add_argument("--h2", choices=tuple(H2), default="nuclear")
    p.add_argument("--lambda-s", type=float, default=0.1)
    p.add_argument("--lambda-l", type=float, default=0.1)
    p.add_argument("--link", choices=("auto", "identity", "softplus", "logistic"), default="auto")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--out", default="out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="silvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model")
    _fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("grid", help="grid search over (lambda_s, lambda_l) = 10^(i/4)")
    _fit_flags(p)
    p.add_argument("--valid")
    p.add_argument("--truth", help="score by l1 error of A against truth JSON instead of validation RMSE")
    p.add_argument("--grid", default="-8:8")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("predict", help="predict responses with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("trend", help="ridge trend estimate from an autoregressive model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--ridge", type=float, default=1.0)
    p.add_argument("--out", default="trend.csv")
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("synth", help="generate synthetic data")
    p.add_argument("--kind", choices=("multitask", "ar"), default="multitask")
    p.add_argument("--m", type=int, default=25)
    p.add_argument("--p", type=int, default=25)
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--n-valid", type=int, default=0)
    p.add_argument("--link", choices=synth.LINK_KINDS, default=None)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--K", type=int, default=365)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--trend", choices=("sinusoid", "none"), default="sinusoid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="l1 error against truth and/or prediction RMSE")
    p.add_argument("--model")
    p.add_argument("--truth")
    p.add_argument("--pred")
    p.add_argument("--target")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "synth" and args.link is None:
        args.link = "identity" if args.kind == "ar" else "g1_softplus"
    try:
        return args.func(args)
    except SolverError as exc:
        print(f"silvar: solver failure: {exc}", file=sys.stderr)
        return 3
    except (InputError, SilvarError, ValueError, KeyError, OSError) as exc:
        print(f"silvar: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
