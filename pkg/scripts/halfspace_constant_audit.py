"""Distributional residual of the explicit half-space solution for C* = c0/2 and C* = c0.

The printed constant (c0) leaves a residual of the size of the boundary
term; c0/2 leaves round-off only.
"""

import numpy as np

from cornerscatter.oracles import distributional_residual_report, halfspace_blowup_solution
from cornerscatter.waves import HarmonicPolynomial2D


def main() -> None:
    rng = np.random.default_rng(0)
    print("m,c0,residual_half,residual_full,normalization")
    for m in range(1, 7):
        c0 = float(rng.uniform(0.5, 2.0))
        H = HarmonicPolynomial2D(m, complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
        half = distributional_residual_report(halfspace_blowup_solution(H, c0), H, c0)
        full = distributional_residual_report(halfspace_blowup_solution(H, c0, constant=c0), H, c0)
        print(f"{m},{c0:.4f},{half.residual:.3e},{full.residual:.3e},{half.normalization:.3e}")


if __name__ == "__main__":
    main()
