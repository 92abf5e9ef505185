"""Tests for which derivative of a functional covariate belongs in the model.

Adjacent derivative orders nest inside a point-impact-augmented regression:
integration by parts turns ``int beta X'`` into endpoint terms plus
``-int beta' X``, so the design ``[1 | impacts | Z]`` contains both the
null-order and alternative-order linear models.  Each of the three tests
runs a two-stage procedure on that design:

  stage 1  are the endpoint impacts significant?  (reject: the null
           derivative order is inadequate)
  stage 2  does the augmented fit collapse onto the alternative-order
           model?  (reject: the alternative is inadequate too)

Both stages are Wald-type F tests with a sandwich covariance and a
noncentrality correction for smoothing bias.

A note on the stage-2 contrast rows.  For the one-derivative-down test the
augmented model is ``y ~ c + delta_1 X(1) + int delta X'`` and the
lower-order model corresponds to ``delta = -B`` with ``B`` the
antiderivative pinned at ``B(0) = 0``, hence ``delta_1 + delta(1) = 0``
(same sign on both entries).  For the two-derivatives test, writing
``Q(t)`` for the double antiderivative of the coefficient function, the
second-derivative model corresponds to

    zeta_00 + zeta_01 + int zeta       = 0
    zeta_10 + zeta_11 - zeta_00 - Q(1) = 0

which one can confirm on ``beta_2 = 1`` (only ``X'(1) - X'(0)`` survives)
and ``beta_2 = t`` (``X'(1) - X(1) + X(0)``).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats

from .basis import Basis, double_integral_vector, integral_vector
from .errors import SingularContrastError
from .fdata import FunctionalSample
from .penreg import (
    LAMBDA_MIN,
    AugmentedDesign,
    DesignSpec,
    FixedLambda,
    OCVLambda,
    PenalizedFit,
    assemble,
    fit,
    ocv,
)

logger = logging.getLogger(__name__)

DEFAULT_LEVEL = 0.05


class TestKind(enum.Enum):
    ZERO_VS_FIRST = "0v1"
    FIRST_VS_ZERO = "1v0"
    ZERO_VS_SECOND = "0v2"


class Decision(enum.Enum):
    KEEP_NULL = "KeepNull"
    SWITCH_TO_ALTERNATIVE = "SwitchToAlternative"
    NEITHER_ADEQUATE = "NeitherAdequate"


#: impact columns (derivative order, endpoint) per test, in design order
_IMPACTS = {
    TestKind.ZERO_VS_FIRST: ((0, 0), (0, 1)),
    TestKind.FIRST_VS_ZERO: ((0, 1),),
    TestKind.ZERO_VS_SECOND: ((0, 0), (0, 1), (1, 0), (1, 1)),
}

#: derivative order of the functional block per test
_FUNCTIONAL_DERIV = {
    TestKind.ZERO_VS_FIRST: 0,
    TestKind.FIRST_VS_ZERO: 1,
    TestKind.ZERO_VS_SECOND: 0,
}


@dataclass(frozen=True)
class ContrastMatrix:
    C: np.ndarray
    p_C: int
    description: str

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        object.__setattr__(self, "C", C)
        if C.shape[0] != self.p_C:
            raise ValueError("p_C must equal the number of rows")
        if np.linalg.matrix_rank(C) < self.p_C:
            raise ValueError("contrast rows must be linearly independent")


@dataclass(frozen=True)
class ContrastResult:
    F: float
    p_C: int
    df2: float
    eta: float
    p_value: float
    p_value_central: float
    lambda_used: float


@dataclass(frozen=True)
class DerivativeTestReport:
    test_kind: TestKind
    stage1: ContrastResult
    stage2: ContrastResult
    decision: Decision


def design_spec_for(
    test_kind: TestKind,
    coef_basis: Basis,
    scalars=None,
    scalar_names=(),
) -> DesignSpec:
    """The augmented-design recipe used by ``test_kind``."""
    return DesignSpec(
        coef_basis=coef_basis,
        functional_deriv=_FUNCTIONAL_DERIV[test_kind],
        impacts=_IMPACTS[test_kind],
        scalars=scalars,
        scalar_names=scalar_names,
    )


def contrasts(test_kind: TestKind, coef_basis: Basis, p: int):
    """Stage-1 and stage-2 contrast matrices for a p-column augmented design.

    Columns are laid out [intercept | scalars | impacts | coefficients];
    scalar covariates get zero contrast entries, so ``p`` larger than the
    scalar-free case simply widens the matrices.
    """
    test_kind = TestKind(test_kind)
    K = coef_basis.K
    n_imp = len(_IMPACTS[test_kind])
    n_scalars = p - 1 - n_imp - K
    if n_scalars < 0:
        raise ValueError(
            f"p={p} is too small for {test_kind.value} with a {K}-function basis"
        )
    imp0 = 1 + n_scalars  # first impact column
    cblock = imp0 + n_imp  # first coefficient column

    C1 = np.zeros((n_imp, p))
    C1[:, imp0:cblock] = np.eye(n_imp)
    c1 = ContrastMatrix(C1, n_imp, f"{test_kind.value} stage 1: impact significance")

    m = integral_vector(coef_basis)
    if test_kind is TestKind.ZERO_VS_FIRST:
        C2 = np.zeros((1, p))
        C2[0, imp0:cblock] = 1.0
        C2[0, cblock:] = m
    elif test_kind is TestKind.FIRST_VS_ZERO:
        C2 = np.zeros((1, p))
        C2[0, imp0] = 1.0
        C2[0, cblock:] = coef_basis.eval(np.array([1.0]))[0]
    else:
        mbar = double_integral_vector(coef_basis)
        C2 = np.zeros((2, p))
        C2[0, imp0 : imp0 + 2] = 1.0
        C2[0, cblock:] = m
        C2[1, imp0] = -1.0
        C2[1, imp0 + 2 : imp0 + 4] = 1.0
        C2[1, cblock:] = -mbar
    c2 = ContrastMatrix(
        C2, C2.shape[0], f"{test_kind.value} stage 2: collapse onto alternative"
    )
    return c1, c2


def _quad_form(v, M_chol):
    w = scipy.linalg.cho_solve(M_chol, v)
    return float(v @ w)


def _contrast_chol(fit: PenalizedFit, C: np.ndarray):
    V = fit.A_inv @ fit.ztz @ fit.A_inv
    M = C @ V @ C.T
    try:
        return scipy.linalg.cho_factor(M)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularContrastError("contrast covariance C V C' is singular") from exc


def f_statistic(fit: PenalizedFit, C: ContrastMatrix):
    """Wald-type F for the contrast ``C g~`` with sandwich covariance."""
    chol = _contrast_chol(fit, C.C)
    cg = C.C @ fit.gt
    num = _quad_form(cg, chol)
    if num <= 0.0:
        return 0.0, C.p_C
    if fit.sigma2_hat <= 0.0:
        raise ValueError("residual variance is zero; F statistic undefined")
    return num / (C.p_C * fit.sigma2_hat), C.p_C


def noncentrality(
    d: AugmentedDesign,
    y,
    C,
    lam: float,
    alt_fit: PenalizedFit | None = None,
    main_fit: PenalizedFit | None = None,
) -> float:
    """Smoothing-bias noncentrality for the contrast at smoothing ``lam``.

    Fits the augmented model at the identifiability floor, projects those
    fitted values onto the null space of C in coefficient space, then
    measures how far the re-smoothed projected coefficients still sit from
    the null, in units of the undersmoothed residual variance.
    """
    if isinstance(C, ContrastMatrix):
        C = C.C
    y = np.asarray(y, dtype=float)
    if alt_fit is None:
        alt_fit = fit(d, y, LAMBDA_MIN)
    Ya = d.Zt @ alt_fit.gt

    ztz = alt_fit.ztz
    rhs = d.Zt.T @ Ya
    try:
        b = scipy.linalg.solve(ztz, rhs, assume_a="pos")
    except (scipy.linalg.LinAlgError, ValueError):
        logger.debug(
            "Z'Z singular in noncentrality projection; applying the %.0e ridge floor",
            LAMBDA_MIN,
        )
        b = scipy.linalg.solve(ztz + LAMBDA_MIN * d.Pt, rhs, assume_a="pos")
    # orthogonal projection of the coefficients onto {b : C b = 0}
    CCt_inv_Cb = scipy.linalg.solve(C @ C.T, C @ b, assume_a="pos")
    b0 = b - C.T @ CCt_inv_Cb
    Y0 = d.Zt @ b0

    if main_fit is None or main_fit.lam != lam:
        main_fit = fit(d, y, lam)
    g0 = main_fit.A_inv @ (d.Zt.T @ Y0)
    chol = _contrast_chol(main_fit, C)
    num = _quad_form(C @ g0, chol)
    if num <= 0.0:
        return 0.0
    if alt_fit.sigma2_hat <= 0.0:
        raise ValueError("undersmoothed residual variance is zero; eta undefined")
    return num / alt_fit.sigma2_hat


def noncentral_f_pvalue(F: float, df1: int, df2: float, eta: float) -> float:
    """Upper tail of the noncentral F(df1, df2, eta) distribution at F.

    Poisson mixture of central terms via the regularized incomplete beta,
    truncated once the unaccounted Poisson mass drops below 1e-12.
    """
    for name, val in (("F", F), ("df1", df1), ("df2", df2), ("eta", eta)):
        if not np.isfinite(val):
            raise ValueError(f"{name} must be finite")
    if df1 < 1 or df2 <= 0:
        raise ValueError("need df1 >= 1 and df2 > 0")
    if F < 0 or eta < 0:
        raise ValueError("F and eta must be nonnegative")

    xb = df2 / (df2 + df1 * F)  # P(F_mix > F) = sum_j w_j I_xb(df2/2, df1/2 + j)
    lam = eta / 2.0
    p = 0.0
    start = 0
    chunk = 64
    while True:
        js = np.arange(start, start + chunk)
        if lam > 0:
            w = scipy.stats.poisson.pmf(js, lam)
        else:
            w = (js == 0).astype(float)
        terms = scipy.special.betainc(df2 / 2.0, df1 / 2.0 + js, xb)
        p += float(w @ terms)
        start += chunk
        if lam == 0 or scipy.stats.poisson.sf(start - 1, lam) < 1e-12:
            break
    return min(max(p, 0.0), 1.0)


def _decide(p1: float, p2: float, level: float) -> Decision:
    if p1 >= level:
        return Decision.KEEP_NULL
    if p2 >= level:
        return Decision.SWITCH_TO_ALTERNATIVE
    return Decision.NEITHER_ADEQUATE


def run_test(
    y,
    x: FunctionalSample,
    test_kind,
    coef_basis: Basis,
    scalars=None,
    scalar_names=(),
    lambda_policy=None,
    level: float = DEFAULT_LEVEL,
) -> DerivativeTestReport:
    """Run the full two-stage derivative test.

    ``lambda_policy`` is FixedLambda(value) or OCVLambda(grid); the default
    is leave-one-out cross-validation on the standard grid.
    """
    test_kind = TestKind(test_kind)
    y = np.asarray(y, dtype=float)
    spec = design_spec_for(test_kind, coef_basis, scalars, scalar_names)
    d = assemble(y, x, spec)

    if lambda_policy is None:
        lambda_policy = OCVLambda()
    if isinstance(lambda_policy, FixedLambda):
        lam = float(lambda_policy.value)
    elif isinstance(lambda_policy, OCVLambda):
        lam, _ = ocv(d, y, lambda_policy.grid)
    else:
        raise TypeError("lambda_policy must be FixedLambda or OCVLambda")

    main = fit(d, y, lam)
    alt = main if lam == LAMBDA_MIN else fit(d, y, LAMBDA_MIN)
    df2 = d.n - main.df

    results = []
    for C in contrasts(test_kind, spec.coef_basis, d.p):
        F, p_C = f_statistic(main, C)
        eta = noncentrality(d, y, C, lam, alt_fit=alt, main_fit=main)
        results.append(
            ContrastResult(
                F=F,
                p_C=p_C,
                df2=df2,
                eta=eta,
                p_value=noncentral_f_pvalue(F, p_C, df2, eta),
                p_value_central=noncentral_f_pvalue(F, p_C, df2, 0.0),
                lambda_used=lam,
            )
        )
    stage1, stage2 = results
    return DerivativeTestReport(
        test_kind=test_kind,
        stage1=stage1,
        stage2=stage2,
        decision=_decide(stage1.p_value, stage2.p_value, level),
    )
