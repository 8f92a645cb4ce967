"""Decay of the FEM scattered field at a sector corner under mesh refinement.

Prints S_r, the fitted decay exponent, the Cauchy gaps of the order-(m+2)
rescalings and the value at the corner for each mesh size.  A field that
does not vanish at the corner has exponent near 0 and growing gaps.
"""

import argparse

import numpy as np

from cornerscatter.blowup import blowup_limit_fit, decay_trace
from cornerscatter.cli import load_config, solve_level


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--config", default="configs/blowup-corner.cfg")
    p.add_argument("--levels", default="0.04,0.02,0.01")
    args = p.parse_args()
    cfg = load_config(args.config)
    m = int(cfg.incident.orders[0])
    name = f"fb{m}"
    radii = sorted(cfg.blowup.radii, reverse=True)
    print("h,exponent,u_corner_abs," + ",".join(f"S_{r:g}" for r in radii) + ",gaps")
    for i, h in enumerate(float(x) for x in args.levels.split(",")):
        u = solve_level(cfg, i, h, keep_fields=True).fields[name]
        x0 = u.mesh.vertices[u.mesh.corner_vertex]
        trace = decay_trace(u, x0, radii, m + 2)
        fit = blowup_limit_fit(u, x0, m + 2, radii)
        corner = abs(u(x0[None, :])[0])
        S = dict(zip(trace.radii, trace.S))
        print(f"{h:g},{trace.exponent:.4f},{corner:.4e}," + ",".join(f"{S[r]:.4e}" for r in radii)
              + "," + " ".join(f"{g:.3g}" for g in fit.gaps))


if __name__ == "__main__":
    np.set_printoptions(precision=4)
    main()
