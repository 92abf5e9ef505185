"""Simulation harness: covariate and response generation plus power curves.

Covariates are random smooth curves built from a damped trigonometric
expansion with linear and exponential terms, projected onto the order-6,
21-knot B-spline basis.  Responses follow a first-derivative linear model
whose coefficient function is a fixed trigonometric polynomial plus a
constant ``beta0``; sweeping ``beta0`` traces out power curves for the
derivative tests, since at ``beta0 = 0`` the competing derivative models
coincide.

Replication noise comes from counter-based Philox streams keyed by
``(seed, replication)``, so results are bit-for-bit identical no matter
how replications are scheduled across workers.  The same noise stream is
reused across the ``beta0`` grid (common random numbers), which makes the
power curves smooth functions of ``beta0``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .basis import Basis, gram, make_bspline, make_fourier_plus_linear
from .dtest import Decision, TestKind, run_test
from .errors import (
    EstimabilityError,
    RankError,
    SingularContrastError,
    SingularSystemError,
)
from .fdata import FunctionalSample, project
from .penreg import FixedLambda, OCVLambda

logger = logging.getLogger(__name__)

#: evaluation grid for covariate construction before projection
GEN_GRID_SIZE = 201

#: number of damped sin/cos pairs in the covariate expansion
N_HARMONICS = 12

#: coefficient-function basis used by the power study's test runs
DEFAULT_COEF_BASIS = make_fourier_plus_linear(12)

_FAILURE_ERRORS = (
    SingularSystemError,
    SingularContrastError,
    EstimabilityError,
    RankError,
    np.linalg.LinAlgError,
)


@dataclass(frozen=True)
class SimConfig:
    n: int = 250
    reps: int = 1000
    beta0_grid: tuple = (0.0,)
    noise_sd: float = 0.1
    seed: int = 0
    lambda_policy: object = field(default_factory=lambda: FixedLambda(1e-11))
    level: float = 0.05

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        object.__setattr__(self, "beta0_grid", tuple(float(b) for b in self.beta0_grid))


@dataclass(frozen=True)
class PowerRow:
    test_kind: str
    lambda_policy: str
    beta0: float
    reject1: float
    reject2: float
    correct: float
    reps: int
    seed: int
    failures: int = 0


CSV_COLUMNS = (
    "test_kind",
    "lambda_policy",
    "beta0",
    "reject1",
    "reject2",
    "correct",
    "reps",
    "seed",
)


@dataclass(frozen=True)
class PowerTable:
    rows: tuple

    def __post_init__(self):
        for r in self.rows:
            if r.correct > r.reject1 + 1e-12:
                raise ValueError("correct-model rate cannot exceed stage-1 rate")

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.rows)

    def to_csv(self, path=None) -> str:
        """Write the table in the fixed column order; returns the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([getattr(r, c) for c in CSV_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _policy_label(policy) -> str:
    if isinstance(policy, FixedLambda):
        return f"fixed:{policy.value!r}"
    if isinstance(policy, OCVLambda):
        return "ocv"
    raise TypeError("lambda_policy must be FixedLambda or OCVLambda")


def _rng(seed_key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_key)))


def gen_covariates(n: int, seed) -> FunctionalSample:
    """Draw ``n`` random curves and project them onto BSpline(6, 21).

    Each curve is d0 + d1 (t - 1/2)/2 + (d2/2) e^(t - 1/2) plus twelve
    sin/cos pairs whose amplitudes decay as e^(min(-(k - 3/2), 0)) and
    e^(-(k - 1)); all underlying coefficients are independent standard
    normals.
    """
    if n < 1:
        raise ValueError("need at least one curve")
    rng = _rng(seed)
    coefs = rng.standard_normal((n, 3 + 2 * N_HARMONICS))
    d = coefs[:, :3]
    f = coefs[:, 3 : 3 + N_HARMONICS]
    g = coefs[:, 3 + N_HARMONICS :]

    t = np.linspace(0.0, 1.0, GEN_GRID_SIZE)
    k = np.arange(1, N_HARMONICS + 1)
    sin_scale = np.exp(np.minimum(-(k - 1.5), 0.0))
    cos_scale = np.exp(-(k - 1.0))
    sins = np.sin(2 * np.pi * np.outer(k, t))
    coss = np.cos(2 * np.pi * np.outer(k, t))

    vals = (
        d[:, [0]]
        + d[:, [1]] * ((t - 0.5) / 2.0)[None, :]
        + (d[:, [2]] / 2.0) * np.exp(t - 0.5)[None, :]
        + (f * sin_scale) @ sins
        + (g * cos_scale) @ coss
    )
    return project(t, vals, make_bspline(6, 21))


#: basis holding the response coefficient function beta0 + 0.5 sin(2 pi t)
#: + 0.3 sin(4 pi t) + 0.1 sin(6 pi t)
_BETA_BASIS = make_fourier_plus_linear(3)
_BETA_REST = np.array([0.0, 0.0, 0.5, 0.0, 0.3, 0.0, 0.1, 0.0])


def response_signal(x: FunctionalSample, beta0: float) -> np.ndarray:
    """Noise-free responses: the first-derivative functional term."""
    beta_coef = _BETA_REST.copy()
    beta_coef[0] = beta0
    return x.coef @ gram(x.basis, _BETA_BASIS, 1 + x.deriv_order, 0) @ beta_coef


def gen_response(x: FunctionalSample, beta0: float, noise_sd: float, seed) -> np.ndarray:
    """Responses from the first-derivative model with N(0, noise_sd^2) errors."""
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    noise = _rng(seed).standard_normal(x.n) if noise_sd > 0 else 0.0
    return response_signal(x, beta0) + noise_sd * noise


def _one_rep(x, cfg: SimConfig, test_kind, coef_basis, rep: int):
    """Outcomes for one replication across the beta0 grid.

    Returns a list of (reject1, reject2, correct, failed) int tuples, one
    per beta0; a failed fit contributes (0, 0, 0, 1).
    """
    out = []
    for beta0 in cfg.beta0_grid:
        y = gen_response(x, beta0, cfg.noise_sd, [cfg.seed, rep])
        try:
            report = run_test(
                y,
                x,
                test_kind,
                coef_basis,
                lambda_policy=cfg.lambda_policy,
                level=cfg.level,
            )
        except _FAILURE_ERRORS:
            out.append((0, 0, 0, 1))
            continue
        r1 = int(report.stage1.p_value < cfg.level)
        r2 = int(report.stage2.p_value < cfg.level)
        corr = int(report.decision == Decision.SWITCH_TO_ALTERNATIVE)
        out.append((r1, r2, corr, 0))
    return out


def power_study(
    cfg: SimConfig,
    test_kind: TestKind,
    coef_basis: Basis = None,
    n_jobs: int = 1,
) -> PowerTable:
    """Empirical rejection rates over the beta0 grid.

    One covariate sample is drawn and reused across replications; each
    replication redraws the response noise from its own Philox stream.
    Replications whose fits raise singularity or estimability errors are
    counted in the row's ``failures`` and excluded from the denominator.
    """
    if coef_basis is None:
        coef_basis = DEFAULT_COEF_BASIS
    label = _policy_label(cfg.lambda_policy)
    x = gen_covariates(cfg.n, cfg.seed)
    per_rep = Parallel(n_jobs=n_jobs)(
        delayed(_one_rep)(x, cfg, test_kind, coef_basis, rep)
        for rep in range(cfg.reps)
    )

    rows = []
    for j, beta0 in enumerate(cfg.beta0_grid):
        cells = [per_rep[rep][j] for rep in range(cfg.reps)]
        failures = sum(c[3] for c in cells)
        used = cfg.reps - failures
        if failures:
            logger.warning(
                "%s beta0=%g: %d of %d replications failed to fit",
                test_kind.value, beta0, failures, cfg.reps,
            )
        denom = max(used, 1)
        rows.append(
            PowerRow(
                test_kind=test_kind.value,
                lambda_policy=label,
                beta0=beta0,
                reject1=sum(c[0] for c in cells) / denom,
                reject2=sum(c[1] for c in cells) / denom,
                correct=sum(c[2] for c in cells) / denom,
                reps=used,
                seed=cfg.seed,
                failures=failures,
            )
        )
    return PowerTable(rows=tuple(rows))
