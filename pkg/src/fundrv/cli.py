"""Command-line entry point.

Subcommands: ``test`` (two-stage derivative test on a dataset), ``pcurve``
(both stages across a lambda grid), ``jtest`` (non-nested model comparison),
``power`` (simulation study), ``ingest-check`` (validate a dataset file).

Input is wide-format CSV: columns ``w_1..w_m`` holding curve values at
increasing abscissae, then a named response column, then optional scalar
covariate columns.  The abscissa axis is rescaled affinely to [0, 1].
Every command is deterministic given its flags and seed; exit status 0
means the computation completed, regardless of statistical outcome.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass

import numpy as np

from .basis import Basis, make_bspline, make_fourier_plus_linear
from .dtest import TestKind, run_test
from .fdata import FunctionalSample, project
from .jtest import LinearSpec, NWSpec, j_test
from .penreg import DEFAULT_LAMBDA_GRID, FixedLambda, OCVLambda, assemble, ocv
from .sim import SimConfig, power_study

SCHEMA_VERSION = 1

#: representation basis for raw curves; rich enough for 100-point spectra
CURVE_BASIS = ("bspline", 6, 21)


class IngestError(Exception):
    """Raised for malformed dataset files; maps to exit status 1."""


@dataclass(frozen=True)
class Dataset:
    grid: np.ndarray
    curves: np.ndarray
    response: np.ndarray
    response_name: str
    scalars: np.ndarray | None
    scalar_names: tuple


def ingest(path: str) -> Dataset:
    """Parse a wide-format CSV into a Dataset.

    Errors name the offending (row, column); rows are 1-based file lines.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise IngestError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]

    m = 0
    while m < len(header) and header[m].startswith("w_"):
        m += 1
    if m == 0:
        raise IngestError(f"{path}: no w_ curve columns in header")
    for j in range(m, len(header)):
        if header[j].startswith("w_"):
            raise IngestError(
                f"{path}: curve column {header[j]} appears after scalar columns"
            )
    if m == len(header):
        raise IngestError(f"{path}: no response column after the w_ block")

    absc = []
    for j in range(m):
        try:
            absc.append(float(header[j][2:]))
        except ValueError:
            raise IngestError(f"{path}: bad abscissa in column name {header[j]}")
    absc = np.asarray(absc)
    if not np.all(np.diff(absc) > 0):
        raise IngestError(f"{path}: w_ abscissae are not strictly increasing")
    if len(rows) < 2:
        raise IngestError(f"{path}: no data rows")

    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise IngestError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            if cell.strip() == "":
                raise IngestError(f"{path}: missing value at row {i}, column {header[j]}")
            try:
                data[i - 2, j] = float(cell)
            except ValueError:
                raise IngestError(
                    f"{path}: cannot parse {cell!r} at row {i}, column {header[j]}"
                )

    grid = (absc - absc[0]) / (absc[-1] - absc[0])
    q = len(header) - m - 1
    return Dataset(
        grid=grid,
        curves=data[:, :m],
        response=data[:, m],
        response_name=header[m],
        scalars=data[:, m + 1 :] if q else None,
        scalar_names=tuple(header[m + 1 :]),
    )


def parse_basis(text: str) -> Basis:
    parts = text.split(":")
    try:
        if parts[0] == "fourier" and len(parts) == 2:
            return make_fourier_plus_linear(int(parts[1]))
        if parts[0] == "bspline" and len(parts) == 3:
            return make_bspline(int(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad basis {text!r}: {exc}")
    raise argparse.ArgumentTypeError(
        f"bad basis {text!r}; expected fourier:K or bspline:ORDER:NKNOTS"
    )


def parse_model_spec(text: str, coef_basis: Basis):
    """Model mini-grammar for jtest: nw:D or lin:D or lin:D+scalars."""
    spec = text.strip()
    scal = spec.endswith("+scalars")
    if scal:
        spec = spec[: -len("+scalars")]
    parts = spec.split(":")
    if len(parts) == 2 and parts[1].isdigit() and int(parts[1]) in (0, 1, 2):
        d = int(parts[1])
        if parts[0] == "nw":
            if scal:
                raise argparse.ArgumentTypeError("nw models take no +scalars")
            return NWSpec(semimetric_deriv=d)
        if parts[0] == "lin":
            return LinearSpec(coef_basis=coef_basis, deriv=d, include_scalars=scal)
    raise argparse.ArgumentTypeError(
        f"bad model {text!r}; expected nw:D or lin:D[+scalars] with D in 0..2"
    )


def project_curves(ds: Dataset) -> FunctionalSample:
    kind, order, nknots = CURVE_BASIS
    assert kind == "bspline"
    return project(ds.grid, ds.curves, make_bspline(order, nknots))


def lambda_policy_from(args):
    if getattr(args, "ocv", False):
        return OCVLambda()
    if getattr(args, "lam", None) is not None:
        return FixedLambda(args.lam)
    return OCVLambda()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _stage_dict(stage):
    return {
        "F": stage.F,
        "pC": stage.p_C,
        "df2": stage.df2,
        "eta": stage.eta,
        "p": stage.p_value,
        "p_central": stage.p_value_central,
    }


def _design_scalars(args, ds):
    if not getattr(args, "use_scalars", False):
        return None, ()
    if ds.scalars is None:
        raise IngestError(f"{args.data}: --use-scalars but the file has no scalar columns")
    return ds.scalars, ds.scalar_names


def cmd_test(args) -> int:
    ds = ingest(args.data)
    x = project_curves(ds)
    scalars, scalar_names = _design_scalars(args, ds)
    report = run_test(
        ds.response,
        x,
        TestKind(args.test),
        args.basis,
        scalars=scalars,
        scalar_names=scalar_names,
        lambda_policy=lambda_policy_from(args),
        level=args.level,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "test",
        "test_kind": report.test_kind.value,
        "lambda": report.stage1.lambda_used,
        "stage1": _stage_dict(report.stage1),
        "stage2": _stage_dict(report.stage2),
        "decision": report.decision.value,
    }
    if args.json:
        emit(json_dump(payload), args.out)
    else:
        s1, s2 = report.stage1, report.stage2
        lines = [
            f"test {report.test_kind.value} on {args.data} (lambda={s1.lambda_used:g})",
            f"  stage 1: F={s1.F:.4g} df=({s1.p_C},{s1.df2:.1f}) eta={s1.eta:.4g} p={s1.p_value:.4g}",
            f"  stage 2: F={s2.F:.4g} df=({s2.p_C},{s2.df2:.1f}) eta={s2.eta:.4g} p={s2.p_value:.4g}",
            f"  decision: {report.decision.value}",
        ]
        emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_pcurve(args) -> int:
    ds = ingest(args.data)
    x = project_curves(ds)
    kind = TestKind(args.test)
    scalars, scalar_names = _design_scalars(args, ds)
    grid = DEFAULT_LAMBDA_GRID if args.lam is None else (args.lam,)

    from .dtest import design_spec_for

    d = assemble(ds.response, x, design_spec_for(kind, args.basis, scalars, scalar_names))
    lam_star, scores = ocv(d, ds.response, grid)

    buf = []
    w = csv.writer(_ListWriter(buf), lineterminator="\n")
    w.writerow(["lambda", "p_stage1", "p_stage2", "ocv_score", "ocv_argmin"])
    for lam, score in zip(grid, scores):
        rep = run_test(
            ds.response, x, kind, args.basis,
            scalars=scalars, scalar_names=scalar_names,
            lambda_policy=FixedLambda(lam), level=args.level,
        )
        w.writerow([
            f"{lam:.10g}",
            f"{rep.stage1.p_value:.10g}",
            f"{rep.stage2.p_value:.10g}",
            f"{score:.10g}" if np.isfinite(score) else "inf",
            int(lam == lam_star),
        ])
    emit("".join(buf), args.out)
    return 0


class _ListWriter:
    """File-like shim so csv.writer can fill a list of strings."""

    def __init__(self, sink):
        self.sink = sink

    def write(self, text):
        self.sink.append(text)


def cmd_jtest(args) -> int:
    ds = ingest(args.data)
    x = project_curves(ds)
    null_spec = parse_model_spec(args.null, args.basis)
    alt_spec = parse_model_spec(args.alt, args.basis)
    res = j_test(
        ds.response,
        x,
        null_spec,
        alt_spec,
        frac=args.frac,
        seed=args.seed,
        scalars=ds.scalars,
        free_null_coef=args.free_null,
    )
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "jtest",
        "null": args.null,
        "alt": args.alt,
        "frac": args.frac,
        "seed": res.split_seed,
        "free_null_coef": args.free_null,
        "theta_hat": res.theta_hat,
        "t": res.t_stat,
        "p": res.p_value,
        "n1": res.n1,
        "n2": res.n2,
    }
    if args.json:
        emit(json_dump(payload), args.out)
    else:
        emit(
            f"jtest {args.null} vs {args.alt} on {args.data} "
            f"(n1={res.n1}, n2={res.n2})\n"
            f"  theta_hat={res.theta_hat:.4g} t={res.t_stat:.4g} p={res.p_value:.4g}\n",
            args.out,
        )
    return 0


def cmd_power(args) -> int:
    cfg = SimConfig(
        n=args.n,
        reps=args.reps,
        beta0_grid=tuple(args.beta0),
        noise_sd=args.noise_sd,
        seed=args.seed,
        lambda_policy=lambda_policy_from(args),
        level=args.level,
    )
    table = power_study(cfg, TestKind(args.test), coef_basis=args.basis, n_jobs=args.jobs)
    emit(table.to_csv(), args.out)
    return 0


def cmd_ingest_check(args) -> int:
    ds = ingest(args.data)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "ingest-check",
        "n": int(ds.curves.shape[0]),
        "m": int(ds.curves.shape[1]),
        "q": 0 if ds.scalars is None else int(ds.scalars.shape[1]),
        "response": ds.response_name,
        "scalars": list(ds.scalar_names),
    }
    if args.json:
        emit(json_dump(payload), args.out)
    else:
        emit(
            f"{args.data}: n={payload['n']} curves of m={payload['m']} points, "
            f"response={ds.response_name}, scalars={list(ds.scalar_names)}\n",
            args.out,
        )
    return 0


def _comma_floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fundrv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="wide-format CSV file")
        p.add_argument("--basis", type=parse_basis, default=parse_basis("fourier:12"),
                       help="coefficient basis: fourier:K or bspline:ORDER:NKNOTS")
        p.add_argument("--out", default=None, help="write output to a file instead of stdout")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("test", help="two-stage derivative test")
    common(p)
    p.add_argument("--test", required=True, choices=[k.value for k in TestKind])
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--ocv", action="store_true", help="pick lambda by leave-one-out CV")
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--use-scalars", action="store_true",
                   help="add the file's scalar covariate columns to the design")
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("pcurve", help="p-values across a lambda grid")
    common(p)
    p.add_argument("--test", required=True, choices=[k.value for k in TestKind])
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="single lambda instead of the default 14-point grid")
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--use-scalars", action="store_true",
                   help="add the file's scalar covariate columns to the design")
    p.set_defaults(fn=cmd_pcurve)

    p = sub.add_parser("jtest", help="non-nested comparison of two models")
    common(p)
    p.add_argument("--null", required=True, help="nw:D or lin:D[+scalars]")
    p.add_argument("--alt", required=True, help="nw:D or lin:D[+scalars]")
    p.add_argument("--frac", type=float, default=160 / 215)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--free-null", action="store_true",
                   help="refit the null coefficient in the stage-2 regression")
    p.set_defaults(fn=cmd_jtest)

    p = sub.add_parser("power", help="simulated rejection rates")
    common(p, data=False)
    p.add_argument("--test", required=True, choices=[k.value for k in TestKind])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--beta0", type=_comma_floats, default=[0.0])
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-11)
    p.add_argument("--ocv", action="store_true")
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_power)

    p = sub.add_parser("ingest-check", help="validate a dataset file")
    common(p)
    p.set_defaults(fn=cmd_ingest_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except argparse.ArgumentTypeError as exc:
        print(f"fundrv: {exc}", file=sys.stderr)
        raise SystemExit(2)
    except IngestError as exc:
        print(f"fundrv: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError) as exc:
        print(f"fundrv: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
