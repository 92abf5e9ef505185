"""End-to-end analysis of the bundled meat spectra.

Reproduces the applied story on the synthetic Tecator-style dataset:
predicting fat content from near-infrared absorbance curves, deciding
which derivative of the spectrum carries the information, and checking
whether a linear functional model is enough.
"""

import numpy as np

from fundrv import tecator_like_path
from fundrv.basis import make_bspline, make_fourier_plus_linear
from fundrv.cli import ingest
from fundrv.dtest import TestKind, run_test
from fundrv.fdata import project
from fundrv.jtest import LinearSpec, NWSpec, j_test
from fundrv.penreg import OCVLambda

ds = ingest(tecator_like_path())
print(f"dataset: n={ds.curves.shape[0]} spectra of m={ds.curves.shape[1]} channels, "
      f"response={ds.response_name}, scalars={list(ds.scalar_names)}")
print(f"fat: mean {ds.response.mean():.1f}, sd {ds.response.std():.1f}, "
      f"range [{ds.response.min():.1f}, {ds.response.max():.1f}]\n")

x = project(ds.grid, ds.curves, make_bspline(6, 21))
fb = make_fourier_plus_linear(12)

print("1) which derivative order does a linear model want?")
rep = run_test(ds.response, x, TestKind.ZERO_VS_FIRST, fb, lambda_policy=OCVLambda())
print(f"   0v1 at ocv lambda={rep.stage1.lambda_used:g}: "
      f"stage-1 p={rep.stage1.p_value:.2e}, stage-2 p={rep.stage2.p_value:.2f}")
print(f"   decision: {rep.decision.value} (the raw-curve model is inadequate;")
print("   the design collapses onto the first-derivative alternative)\n")

print("2) same question, model-free:")
rb = j_test(ds.response, x, NWSpec(0), NWSpec(1), seed=0)
print(f"   kernel on X vs kernel on X': t={rb.t_stat:+.2f}, p={rb.p_value:.2e}")
print("   first-derivative distances sort the spectra far better\n")

print("3) is a linear functional model enough, even on X''?")
null = LinearSpec(coef_basis=fb, deriv=2, include_scalars=True)
rc = j_test(ds.response, x, null, NWSpec(2), seed=0,
            scalars=np.asarray(ds.scalars), free_null_coef=True)
print(f"   scalar-augmented linear model on X'' vs kernel on X'': "
      f"t={rc.t_stat:+.2f}, p={rc.p_value:.2e}")
print("   the kernel model explains held-out residual structure the linear")
print("   model cannot: the fat response is nonlinear in the curve shape.")
