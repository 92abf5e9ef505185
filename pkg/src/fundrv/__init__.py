"""Derivative selection for scalar-on-function regression.

Covers penalized functional linear fits with endpoint-impact terms,
two-stage contrast F-tests between derivative orders, a sample-split
J-test for non-nested model comparison, simulation-based power studies,
and a bundled synthetic spectroscopy dataset exercising all of it.
"""

__version__ = "0.1.0"

from .dtest import Decision, TestKind, run_test
from .jtest import LinearSpec, NWSpec, j_test
from .penreg import FixedLambda, OCVLambda

__all__ = [
    "Decision",
    "TestKind",
    "run_test",
    "LinearSpec",
    "NWSpec",
    "j_test",
    "FixedLambda",
    "OCVLambda",
    "__version__",
    "tecator_like_path",
]


def tecator_like_path() -> str:
    """Filesystem path of the bundled synthetic meat spectra CSV."""
    from importlib.resources import files

    return str(files("fundrv") / "data" / "tecator_like.csv")
