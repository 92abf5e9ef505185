"""Samples of curves represented by basis coefficients.

A :class:`FunctionalSample` stores ``n`` curves as rows of a coefficient
matrix against a shared basis, so curve ``i`` is
``X_i(t) = sum_j coef[i, j] phi_j(t)``.

Derivatives are formed by projecting the analytic derivative back onto the
*same* basis (the convention of penalized basis-expansion software).  For
bases not closed under differentiation this is inexact, and the mismatch
propagates into the integration-by-parts identity; tests quantify it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import Basis, gram
from .errors import RankError


@dataclass(frozen=True)
class FunctionalSample:
    """``n`` curves as rows of ``coef`` against ``basis``.

    ``deriv_order`` counts how many projection-derivatives produced this
    sample (bookkeeping only).
    """

    basis: Basis
    coef: np.ndarray
    deriv_order: int = 0

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=float)
        if coef.ndim != 2:
            raise ValueError("coef must be a 2-d array (n x K)")
        if coef.shape[0] < 1:
            raise ValueError("need at least one curve")
        if coef.shape[1] != self.basis.K:
            raise ValueError(
                f"coef has {coef.shape[1]} columns, basis has K={self.basis.K}"
            )
        if not np.all(np.isfinite(coef)):
            raise ValueError("coef entries must be finite")
        object.__setattr__(self, "coef", coef)

    @property
    def n(self):
        return self.coef.shape[0]


def project(grid, values, basis, smoothing: float = 0.0) -> FunctionalSample:
    """Least-squares projection of gridded curves onto a basis.

    ``values`` is ``(n, m)`` with curve ``i`` observed at ``grid`` (strictly
    increasing, inside [0, 1], ``m >= K``).  ``smoothing`` optionally adds a
    curvature penalty; the default is a plain projection.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if values.shape[1] != grid.size:
        raise ValueError("values must have one column per grid point")
    if grid.size < basis.K:
        raise ValueError(
            f"underdetermined projection: {grid.size} points for "
            f"K={basis.K} basis functions"
        )
    B = basis.eval(grid, 0)
    if smoothing > 0.0:
        from .basis import penalty_matrix

        A = B.T @ B + smoothing * penalty_matrix(basis)
        coef = scipy.linalg.solve(A, B.T @ values.T, assume_a="pos").T
    else:
        coef, _, rank, _ = np.linalg.lstsq(B, values.T, rcond=None)
        if rank < basis.K:
            raise RankError(
                f"evaluation matrix rank {rank} < K={basis.K}; "
                "basis not identifiable on this grid"
            )
        coef = coef.T
    return FunctionalSample(basis=basis, coef=coef)


def evaluate(x: FunctionalSample, points, deriv: int = 0):
    """Evaluate every curve at ``points``; returns ``(n, len(points))``.

    ``deriv`` uses the basis' analytic derivative (not the projected one);
    pass ``derivative(x)`` for the projection convention.
    """
    return x.coef @ x.basis.eval(points, deriv).T


def derivative(x: FunctionalSample) -> FunctionalSample:
    """Differentiate each curve, then project back onto the same basis.

    ``coef_new = coef @ D.T`` with ``D = G00^{-1} G01``, the L2 projection
    of ``X_i'`` onto the basis span.
    """
    g00 = gram(x.basis, x.basis, 0, 0)
    g01 = gram(x.basis, x.basis, 0, 1)
    try:
        chol = scipy.linalg.cho_factor(g00)
    except scipy.linalg.LinAlgError as exc:
        raise RankError("singular basis Gram matrix") from exc
    d = scipy.linalg.cho_solve(chol, g01)
    return FunctionalSample(
        basis=x.basis, coef=x.coef @ d.T, deriv_order=x.deriv_order + 1
    )


def endpoints(x: FunctionalSample):
    """Vectors of curve values at ``t = 0`` and ``t = 1``."""
    vals = evaluate(x, np.array([0.0, 1.0]))
    return vals[:, 0].copy(), vals[:, 1].copy()


def design_inner_products(x: FunctionalSample, coef_basis: Basis):
    """Design block ``Z[i, j] = int X_i(t) phi_j(t) dt``.

    Derivatives of the covariate are expected to be baked into ``x``
    already (via :func:`derivative`), matching the software pipeline the
    tests are defined against.
    """
    return x.coef @ gram(x.basis, coef_basis, 0, 0)
