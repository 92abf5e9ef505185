"""Point-impact-augmented penalized least squares.

Builds the design ``[1 | scalar covariates | endpoint impacts | Z]`` where
``Z[i, j] = int X_i^(k)(t) phi_j(t) dt``, applies a curvature penalty to
the functional coefficient block only, and solves

    min ||y - Z~ g~||^2 + lambda g~' P~ g~ .

The fit keeps ``(Z~'Z~ + lambda P~)^{-1}`` so Wald-type contrast statistics
can reuse it, and exposes effective degrees of freedom, the residual
variance estimate and hat diagonals (for leave-one-out cross-validation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import Basis, penalty_matrix
from .errors import EstimabilityError, SingularSystemError
from .fdata import FunctionalSample, derivative, design_inner_products, endpoints

#: identifiability floor for the smoothing parameter
LAMBDA_MIN = 1e-11

#: default search grid: 14 points, log-spaced 1e-11 .. 1e2
DEFAULT_LAMBDA_GRID = tuple(np.logspace(-11, 2, 14))


@dataclass(frozen=True)
class FixedLambda:
    value: float


@dataclass(frozen=True)
class OCVLambda:
    grid: tuple = DEFAULT_LAMBDA_GRID


@dataclass(frozen=True)
class DesignSpec:
    """Recipe for an augmented design.

    ``impacts`` lists ``(deriv, endpoint)`` pairs with endpoint ``0`` or
    ``1``; ``functional_deriv`` is how many projection-derivatives to apply
    to the covariate before forming the functional block.
    """

    coef_basis: Basis
    functional_deriv: int = 0
    impacts: tuple = ()
    scalars: np.ndarray | None = None
    scalar_names: tuple = ()


@dataclass(frozen=True)
class AugmentedDesign:
    Zt: np.ndarray
    Pt: np.ndarray
    labels: tuple
    n_scalars: int
    n_impacts: int
    K: int

    @property
    def n(self):
        return self.Zt.shape[0]

    @property
    def p(self):
        return self.Zt.shape[1]

    @property
    def impact_cols(self):
        start = 1 + self.n_scalars
        return slice(start, start + self.n_impacts)

    @property
    def functional_cols(self):
        return slice(self.p - self.K, self.p)


@dataclass(frozen=True)
class PenalizedFit:
    gt: np.ndarray
    lam: float
    df: float
    sigma2_hat: float
    rss: float
    hat_diag: np.ndarray
    A_inv: np.ndarray
    ztz: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.hat_diag.size


def _derivative_chain(x: FunctionalSample, max_order: int):
    chain = [x]
    for _ in range(max_order):
        chain.append(derivative(chain[-1]))
    return chain


def assemble(y, x: FunctionalSample, spec: DesignSpec) -> AugmentedDesign:
    """Build the augmented design and its padded penalty for one model."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != x.n:
        raise ValueError("y must be a vector with one entry per curve")
    max_order = max([spec.functional_deriv, *(d for d, _ in spec.impacts)])
    chain = _derivative_chain(x, max_order)

    cols = [np.ones((x.n, 1))]
    labels = ["intercept"]

    q = 0
    if spec.scalars is not None:
        scalars = np.atleast_2d(np.asarray(spec.scalars, dtype=float))
        if scalars.shape[0] != x.n:
            raise ValueError("scalars must have one row per curve")
        q = scalars.shape[1]
        names = spec.scalar_names or tuple(f"s{j}" for j in range(q))
        cols.append(scalars)
        labels.extend(f"scalar:{name}" for name in names)

    impact_cols = []
    for d, end in spec.impacts:
        end = int(end)
        if end not in (0, 1):
            raise ValueError("impact endpoint must be 0 or 1")
        x0, x1 = endpoints(chain[d])
        impact_cols.append(x0 if end == 0 else x1)
        labels.append(f"impact:d{d}@{end}")
    if impact_cols:
        imp = np.column_stack(impact_cols)
        probe = np.column_stack([np.ones(x.n), imp])
        if np.linalg.matrix_rank(probe, tol=1e-8 * max(1.0, np.abs(probe).max())) < probe.shape[1]:
            raise EstimabilityError(
                "impact columns are collinear with the intercept or each "
                "other (e.g. periodic curves with X(0) = X(1)); the "
                "augmented model is not estimable"
            )
        cols.append(imp)

    Z = design_inner_products(chain[spec.functional_deriv], spec.coef_basis)
    cols.append(Z)
    K = spec.coef_basis.K
    labels.extend(f"coef:{j}" for j in range(K))

    Zt = np.column_stack(cols)
    p = Zt.shape[1]
    Pt = np.zeros((p, p))
    Pt[p - K :, p - K :] = penalty_matrix(spec.coef_basis)
    return AugmentedDesign(
        Zt=Zt,
        Pt=Pt,
        labels=tuple(labels),
        n_scalars=q,
        n_impacts=len(spec.impacts),
        K=K,
    )


def _factor(Zt, Pt, lam):
    A = Zt.T @ Zt + lam * Pt
    return scipy.linalg.cho_factor(A)


def fit(d: AugmentedDesign, y, lam: float) -> PenalizedFit:
    """Solve the penalized normal equations at one ``lam``.

    Raises :class:`SingularSystemError` (naming the smallest viable
    ``lam`` on the default grid) if the system cannot be factorized.
    """
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    ztz = d.Zt.T @ d.Zt
    try:
        chol = _factor(d.Zt, d.Pt, lam)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        suggested = None
        for cand in DEFAULT_LAMBDA_GRID:
            if cand <= lam:
                continue
            try:
                _factor(d.Zt, d.Pt, cand)
            except (scipy.linalg.LinAlgError, ValueError):
                continue
            suggested = cand
            break
        msg = f"singular penalized system at lambda={lam:g}"
        if suggested is not None:
            msg += f"; smallest viable lambda on the default grid is {suggested:g}"
        raise SingularSystemError(msg, suggested_lambda=suggested) from exc

    A_inv = scipy.linalg.cho_solve(chol, np.eye(d.p))
    A_inv = 0.5 * (A_inv + A_inv.T)
    gt = A_inv @ (d.Zt.T @ y)
    resid = y - d.Zt @ gt
    rss = float(resid @ resid)
    hat_diag = np.einsum("ij,jk,ik->i", d.Zt, A_inv, d.Zt)
    df = float(hat_diag.sum())
    sigma2 = rss / (d.n - df)
    return PenalizedFit(
        gt=gt,
        lam=float(lam),
        df=df,
        sigma2_hat=sigma2,
        rss=rss,
        hat_diag=hat_diag,
        A_inv=A_inv,
        ztz=ztz,
    )


def ocv(d: AugmentedDesign, y, lambda_grid=None):
    """Ordinary (leave-one-out) cross-validation over a lambda grid.

    Uses the hat-diagonal identity ``sum ((y_i - yhat_i)/(1 - h_ii))^2``;
    grid points where some ``h_ii`` reaches 1 score ``+inf``.  Returns
    ``(lambda_star, scores)`` with ties broken toward the smaller lambda.
    """
    y = np.asarray(y, dtype=float)
    grid = np.asarray(
        DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid, dtype=float
    )
    if grid.size == 0:
        raise ValueError("lambda grid must be nonempty")
    scores = np.empty(grid.size)
    for i, lam in enumerate(grid):
        try:
            f = fit(d, y, lam)
        except SingularSystemError:
            scores[i] = np.inf
            continue
        denom = 1.0 - f.hat_diag
        if np.any(denom <= 1e-12):
            scores[i] = np.inf
            continue
        resid = y - d.Zt @ f.gt
        scores[i] = float(np.sum((resid / denom) ** 2))
    order = np.lexsort((grid, scores))
    return float(grid[order[0]]), scores
