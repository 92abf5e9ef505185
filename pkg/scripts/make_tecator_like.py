"""Generate the bundled synthetic near-infrared meat dataset.

Writes a wide-format CSV (w_1..w_100, fat, protein, moisture) with 215
samples.  The construction mimics Tecator-style absorbance spectra: smooth
per-sample baselines, a fat-free band near channel 40, a protein band, a
water band tied to moisture, and a sharp fat absorption shoulder near the
right end whose amplitude saturates in fat.  Fat is recoverable from curve
shape but only nonlinearly, which is what makes the dataset useful for
exercising the derivative tests and the model-comparison J-test.

Deterministic: fixed Philox seed, fixed float formatting.  Rerunning this
script must reproduce src/fundrv/data/tecator_like.csv byte for byte.
"""

from __future__ import annotations

import argparse
import os

import numpy as np

SEED = 20240817
N, M = 215, 100

# saturation scale and frozen standardization constants for the fat shoulder
G_SAT = 45.0
G_MU = 11.6341
G_SD = 5.4470


def make_dataset(seed: int = SEED):
    """Return (grid, spectra, fat, protein, moisture) for n=215, m=100."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    wl = np.linspace(850.0, 1050.0, M)
    t = (wl - 850.0) / 200.0

    fat = np.clip(rng.gamma(shape=2.2, scale=8.0, size=N), 0.8, 52.0)
    moisture = 76.0 - 0.85 * fat + rng.normal(0.0, 6.0, N)
    protein = 20.5 - 0.06 * fat + rng.normal(0.0, 1.25, N)

    g = fat / (1.0 + fat / G_SAT)
    gt = (g - G_MU) / G_SD

    base_a = 2.9 + 0.35 * rng.standard_normal(N)
    base_b = 0.30 * rng.standard_normal(N)
    base_c = 0.10 * rng.standard_normal(N)
    amp_mid = 0.10 * rng.standard_normal(N)

    band_mid = np.exp(-0.5 * ((wl - 930.0) / 11.0) ** 2)
    band_fat = np.exp(-0.5 * ((wl - 1040.0) / 6.0) ** 2)
    band_wat = np.exp(-0.5 * ((wl - 970.0) / 18.0) ** 2)
    band_pro = np.exp(-0.5 * ((wl - 905.0) / 18.0) ** 2)

    smooth = sum(
        0.007 * rng.standard_normal(N)[:, None] * np.cos((k + 1) * np.pi * t)[None, :]
        for k in range(3)
    )
    spectra = (
        base_a[:, None]
        + base_b[:, None] * (t - 0.5)[None, :]
        + base_c[:, None] * ((t - 0.5) ** 2)[None, :]
        + amp_mid[:, None] * band_mid[None, :]
        + 0.20 * gt[:, None] * band_fat[None, :]
        + 0.004 * (moisture - 60.0)[:, None] * band_wat[None, :]
        + 0.004 * protein[:, None] * band_pro[None, :]
        + smooth
        + 0.0008 * rng.standard_normal((N, M))
    )
    return t, spectra, fat, protein, moisture


def write_csv(path: str) -> None:
    _, spectra, fat, protein, moisture = make_dataset()
    header = [f"w_{i + 1}" for i in range(M)] + ["fat", "protein", "moisture"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(N):
            row = [f"{v:.10g}" for v in spectra[i]]
            row += [f"{fat[i]:.10g}", f"{protein[i]:.10g}", f"{moisture[i]:.10g}"]
            fh.write(",".join(row) + "\n")


def main() -> None:
    default = os.path.join(
        os.path.dirname(__file__), "..", "src", "fundrv", "data", "tecator_like.csv"
    )
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.path.normpath(default))
    args = ap.parse_args()
    write_csv(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
