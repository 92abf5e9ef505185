"""Function bases on [0, 1] and their integral machinery.

Two basis families are provided:

* :class:`FourierPlusLinearBasis` -- the functions ``1, t, sin(2*pi*k*t),
  cos(2*pi*k*t)`` for ``k = 1..n_pairs``, in that fixed order.  All
  derivatives and pairwise product integrals have closed forms.
* :class:`BSplineBasis` -- clamped B-splines of a given order on a knot
  sequence spanning [0, 1], evaluated through the de Boor recursion
  (via :class:`scipy.interpolate.BSpline`).

Module functions compute cross-Gram matrices of derivatives
``G[i, j] = int phi_i^(da) psi_j^(db) dt``, the curvature penalty matrix,
and the integral vectors ``m_j = int phi_j dt`` and
``mbar_j = int int_0^t phi_j(s) ds dt`` used by the contrast tests.

Quadrature is composite Gauss-Legendre with 10 nodes per panel; panels are
aligned to spline knots (exact for piecewise polynomials of these orders)
and to a 1/50 grid for trigonometric factors without closed forms.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.interpolate import BSpline as _SciBSpline

from .errors import DomainError

TWO_PI = 2.0 * np.pi

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _check_domain(points):
    x = np.atleast_1d(np.asarray(points, dtype=float))
    if x.ndim != 1:
        raise ValueError("evaluation points must be one-dimensional")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise DomainError("evaluation points must lie in [0, 1]")
    return x


class FourierPlusLinearBasis:
    """Fourier basis augmented with a linear term.

    Functions are ordered ``1, t, sin(2 pi t), cos(2 pi t), ...,
    sin(2 pi n t), cos(2 pi n t)`` so that contrast matrices can index
    columns deterministically.
    """

    kind = "fourier_plus_linear"

    def __init__(self, n_pairs: int):
        if n_pairs < 1:
            raise ValueError("n_pairs must be at least 1")
        self.n_pairs = int(n_pairs)
        self.K = 2 * self.n_pairs + 2

    def __repr__(self):
        return f"FourierPlusLinearBasis(n_pairs={self.n_pairs})"

    def __eq__(self, other):
        return (
            isinstance(other, FourierPlusLinearBasis)
            and other.n_pairs == self.n_pairs
        )

    def __hash__(self):
        return hash((self.kind, self.n_pairs))

    def eval(self, points, deriv: int = 0):
        """Evaluate all basis functions (or a derivative) at ``points``.

        Returns an ``(len(points), K)`` matrix with entry ``(i, j)`` equal
        to ``phi_j^(deriv)(points[i])``.  Any derivative order is allowed;
        high derivatives of the affine terms are identically zero.
        """
        if deriv < 0:
            raise ValueError("deriv must be nonnegative")
        x = _check_domain(points)
        out = np.zeros((x.size, self.K))
        if deriv == 0:
            out[:, 0] = 1.0
            out[:, 1] = x
        elif deriv == 1:
            out[:, 1] = 1.0
        for k in range(1, self.n_pairs + 1):
            w = TWO_PI * k
            phase = deriv % 4
            scale = w**deriv
            arg = w * x
            # d/dt sin -> cos -> -sin -> -cos, and similarly for cos.
            if phase == 0:
                s, c = np.sin(arg), np.cos(arg)
            elif phase == 1:
                s, c = np.cos(arg), -np.sin(arg)
            elif phase == 2:
                s, c = -np.sin(arg), -np.cos(arg)
            else:
                s, c = -np.cos(arg), np.sin(arg)
            out[:, 2 * k] = scale * s
            out[:, 2 * k + 1] = scale * c
        return out

    def _atoms(self, deriv: int):
        """Closed-form description of each basis function's derivative.

        Each entry is ``(scale, tag, k)`` with ``tag`` one of
        ``zero/one/t/sin/cos``; the function is ``scale * atom``.
        """
        atoms = []
        if deriv == 0:
            atoms.append((1.0, "one", 0))
            atoms.append((1.0, "t", 0))
        elif deriv == 1:
            atoms.append((0.0, "zero", 0))
            atoms.append((1.0, "one", 0))
        else:
            atoms.append((0.0, "zero", 0))
            atoms.append((0.0, "zero", 0))
        for k in range(1, self.n_pairs + 1):
            w = TWO_PI * k
            scale = w**deriv
            phase = deriv % 4
            sin_map = [("sin", 1.0), ("cos", 1.0), ("sin", -1.0), ("cos", -1.0)]
            cos_map = [("cos", 1.0), ("sin", -1.0), ("cos", -1.0), ("sin", 1.0)]
            tag, sgn = sin_map[phase]
            atoms.append((sgn * scale, tag, k))
            tag, sgn = cos_map[phase]
            atoms.append((sgn * scale, tag, k))
        return atoms


class BSplineBasis:
    """Clamped B-spline basis of a given order on knots spanning [0, 1].

    ``K = order + len(knots) - 2``.  Derivatives up to ``order - 1`` are
    supported; values at the domain endpoints are one-sided limits.
    """

    kind = "bspline"

    def __init__(self, order: int, knots):
        if order < 2:
            raise ValueError("order must be at least 2")
        knots = np.asarray(knots, dtype=float)
        if knots.size < 2:
            raise ValueError("need at least 2 knots")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be nondecreasing")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise ValueError("knots must span [0, 1] exactly")
        self.order = int(order)
        self.degree = self.order - 1
        self.knots = knots
        self.K = self.order + knots.size - 2
        self._t = np.concatenate(
            [np.zeros(self.degree), knots, np.ones(self.degree)]
        )
        self._splines = {}

    def __repr__(self):
        return f"BSplineBasis(order={self.order}, n_knots={self.knots.size})"

    def __eq__(self, other):
        return (
            isinstance(other, BSplineBasis)
            and other.order == self.order
            and other.knots.shape == self.knots.shape
            and bool(np.all(other.knots == self.knots))
        )

    def __hash__(self):
        return hash((self.kind, self.order, tuple(self.knots)))

    def _spline(self, deriv):
        if deriv not in self._splines:
            spl = _SciBSpline(self._t, np.eye(self.K), self.degree)
            if deriv:
                spl = spl.derivative(deriv)
            self._splines[deriv] = spl
        return self._splines[deriv]

    def eval(self, points, deriv: int = 0):
        """De Boor evaluation matrix ``(len(points), K)`` of a derivative."""
        if deriv < 0:
            raise ValueError("deriv must be nonnegative")
        if deriv > self.order - 1:
            raise ValueError(
                f"derivative order {deriv} exceeds order-{self.order} "
                "spline smoothness"
            )
        x = _check_domain(points)
        return self._spline(deriv)(x)


Basis = FourierPlusLinearBasis | BSplineBasis


def make_fourier_plus_linear(n_pairs: int) -> FourierPlusLinearBasis:
    """Basis ``1, t, {sin(2 pi k t), cos(2 pi k t)}_{k<=n_pairs}``."""
    return FourierPlusLinearBasis(n_pairs)


def make_bspline(order: int, n_knots: int, knots=None) -> BSplineBasis:
    """B-spline basis with uniform knots on [0, 1] unless ``knots`` given."""
    if knots is None:
        if n_knots < 2:
            raise ValueError("n_knots must be at least 2")
        knots = np.linspace(0.0, 1.0, int(n_knots))
    return BSplineBasis(order, knots)


# -- product integrals --------------------------------------------------

# int_0^1 atom_a(t) * atom_b(t) dt for the closed-form family.


def _atom_product_integral(tag_a, k_a, tag_b, k_b):
    if tag_a == "zero" or tag_b == "zero":
        return 0.0
    if (tag_a, tag_b) in (("one", "one"),):
        return 1.0
    if {tag_a, tag_b} == {"one", "t"}:
        return 0.5
    if (tag_a, tag_b) == ("t", "t"):
        return 1.0 / 3.0
    trig = {"sin", "cos"}
    if tag_a in trig and tag_b in trig:
        if tag_a == tag_b and k_a == k_b:
            return 0.5
        return 0.0
    # one trig factor, one polynomial factor
    if tag_a in trig:
        tag_a, tag_b, k_a, k_b = tag_b, tag_a, k_b, k_a
    if tag_a == "one":
        return 0.0  # full periods integrate to zero
    # tag_a == "t": int t sin(2 pi k t) = -1/(2 pi k); int t cos = 0
    if tag_b == "sin":
        return -1.0 / (TWO_PI * k_b)
    return 0.0


def _gram_closed_form(a, b, deriv_a, deriv_b):
    atoms_a = a._atoms(deriv_a)
    atoms_b = b._atoms(deriv_b)
    out = np.zeros((a.K, b.K))
    for i, (sa, ta, ka) in enumerate(atoms_a):
        if sa == 0.0:
            continue
        for j, (sb, tb, kb) in enumerate(atoms_b):
            if sb == 0.0:
                continue
            val = _atom_product_integral(ta, ka, tb, kb)
            if val != 0.0:
                out[i, j] = sa * sb * val
    return out


def _breakpoints(basis):
    if isinstance(basis, BSplineBasis):
        return np.unique(basis.knots)
    return np.linspace(0.0, 1.0, 51)


def _panel_nodes(breaks):
    """Gauss-Legendre nodes/weights on each panel of a partition of [0,1]."""
    lo = breaks[:-1]
    hi = breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _quadrature_grid(a, b):
    breaks = np.union1d(_breakpoints(a), _breakpoints(b))
    return _panel_nodes(breaks)


@lru_cache(maxsize=256)
def _gram_cached(a, b, deriv_a, deriv_b):
    if isinstance(a, FourierPlusLinearBasis) and isinstance(
        b, FourierPlusLinearBasis
    ):
        return _gram_closed_form(a, b, deriv_a, deriv_b)
    nodes, weights = _quadrature_grid(a, b)
    av = a.eval(nodes, deriv_a)
    bv = b.eval(nodes, deriv_b)
    out = (av * weights[:, None]).T @ bv
    if a == b and deriv_a == deriv_b:
        out = 0.5 * (out + out.T)
    return out


def gram(a, b, deriv_a: int = 0, deriv_b: int = 0):
    """Cross-Gram matrix ``int phi_i^(deriv_a) psi_j^(deriv_b) dt``.

    Closed form for Fourier-plus-linear pairs, composite Gauss-Legendre
    quadrature otherwise.  Symmetric (exactly) when ``a is b`` and the
    derivative orders agree.
    """
    return _gram_cached(a, b, int(deriv_a), int(deriv_b)).copy()


def penalty_matrix(basis):
    """Second-derivative roughness penalty ``P_ij = int phi_i'' phi_j''``."""
    return gram(basis, basis, 2, 2)


@lru_cache(maxsize=64)
def _integral_vectors_cached(basis):
    if isinstance(basis, FourierPlusLinearBasis):
        one = FourierPlusLinearBasis(1)
        # rows of the closed-form cross-Gram against {1, t}
        m = _gram_closed_form(basis, one, 0, 0)[:, 0]
        tm = _gram_closed_form(basis, one, 0, 0)[:, 1]
        return m, tm
    nodes, weights = _panel_nodes(_breakpoints(basis))
    vals = basis.eval(nodes, 0)
    m = vals.T @ weights
    tm = vals.T @ (weights * nodes)
    return m, tm


def integral_vector(basis):
    """Vector ``m`` with ``m_j = int_0^1 phi_j(t) dt``."""
    return _integral_vectors_cached(basis)[0].copy()


def double_integral_vector(basis):
    """Vector ``mbar`` with ``mbar_j = int_0^1 int_0^t phi_j(s) ds dt``.

    Computed as ``int phi_j - int t phi_j`` (integration by parts).
    """
    m, tm = _integral_vectors_cached(basis)
    return m - tm
