"""Far-field patterns by outgoing mode matching, and scattering norms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waves import hankel1

Array = np.ndarray


@dataclass(frozen=True)
class FarFieldPattern:
    """u_inf(theta) = sum_m c_m e^{i m theta} for orders -N..N."""

    orders: Array
    coefficients: Array
    kappa: float
    r_eval: float | None = None

    def __call__(self, theta) -> Array:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return np.exp(1j * np.outer(theta, self.orders)) @ self.coefficients

    def coefficient(self, m: int) -> complex:
        hit = np.flatnonzero(self.orders == m)
        return complex(self.coefficients[hit[0]]) if len(hit) else 0j

    def rotated(self, angle: float) -> "FarFieldPattern":
        """Pattern theta -> u_inf(theta - angle)."""
        return FarFieldPattern(self.orders, self.coefficients * np.exp(-1j * self.orders * angle),
                               self.kappa, self.r_eval)

    def to_csv_rows(self) -> list[str]:
        rows = ["m,re,im"]
        rows += [f"{m},{c.real:.17g},{c.imag:.17g}" for m, c in zip(self.orders, self.coefficients)]
        rows.append(f"L2norm,{scattering_norm(self):.17g}")
        return rows


def farfield_normalization(m, kappa: float) -> Array:
    """gamma_m = sqrt(2/(pi kappa)) e^{-i(m pi/2 + pi/4)}."""
    m = np.asarray(m)
    return math.sqrt(2.0 / (math.pi * kappa)) * np.exp(-1j * (m * math.pi / 2 + math.pi / 4))


def farfield_from_boundary(u, kappa: float, r_eval: float, N: int | None = None,
                           n_angles: int | None = None) -> FarFieldPattern:
    """Mode-match an outgoing field on the circle r = r_eval.

    ``u`` is any callable on (n, 2) points (a WaveField or closed form).
    Coefficients: c_m = u_m(r_eval) / H_m(kappa r_eval) * gamma_m with u_m
    from the trapezoid rule on ``4N + 1`` uniform angles.
    """
    if r_eval <= 0:
        raise ValueError("evaluation radius must be positive")
    support = getattr(u, "support", None)
    if support is not None and r_eval <= support.extent:
        raise ValueError(f"r_eval={r_eval} lies inside the scatterer (extent {support.extent:.4g})")
    mesh = getattr(u, "mesh", None)
    if mesh is not None and r_eval >= mesh.truncation_radius:
        raise ValueError("r_eval must lie strictly inside the truncation circle")
    if N is None:
        N = int(math.ceil(kappa * r_eval)) + 15
    n = 4 * N + 1 if n_angles is None else int(n_angles)
    if n < 2 * N + 1:
        raise ValueError(f"{n} angles are below Nyquist for mode cutoff {N}")
    theta = 2 * math.pi * np.arange(n) / n
    pts = r_eval * np.c_[np.cos(theta), np.sin(theta)]
    vals = np.asarray(u(pts), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise ValueError("field undefined on the evaluation circle")
    orders = np.arange(-N, N + 1)
    u_hat = np.exp(-1j * np.outer(orders, theta)) @ vals / n
    coeffs = u_hat / hankel1(orders, kappa * r_eval) * farfield_normalization(orders, kappa)
    return FarFieldPattern(orders, coeffs, float(kappa), float(r_eval))


def scattering_norm(p: FarFieldPattern) -> float:
    """L2(S^1) norm by Parseval: sqrt(2 pi sum |c_m|^2)."""
    return float(math.sqrt(2 * math.pi * np.sum(np.abs(p.coefficients) ** 2)))


def incident_energy(incident, mesh) -> float:
    """int_D |u_inc|^2 over the scatterer triangles of a mesh (7-point rule)."""
    from .solver import QUAD_BARY, QUAD_W

    inside = np.flatnonzero(mesh.in_scatterer)
    p = mesh.vertices[mesh.triangles[inside]]
    qp = np.einsum("qk,tkd->tqd", QUAD_BARY, p).reshape(-1, 2)
    vals = np.abs(incident(qp)).reshape(len(inside), len(QUAD_W)) ** 2
    return float(np.sum(mesh.areas[inside] * (vals @ QUAD_W)))


def normalized_scattering_norm(p: FarFieldPattern, incident, mesh) -> float:
    """Scattering norm divided by ||u_inc||_{L2(D)}, the root incident energy on D.

    Both sides are linear in the incident amplitude, so the ratio is
    amplitude-free and stays O(1) in the weak-scattering regime even for
    incident waves vanishing to high order inside D.
    """
    e = incident_energy(incident, mesh)
    if e <= 0:
        raise ValueError("incident wave vanishes on the scatterer")
    return scattering_norm(p) / math.sqrt(e)


def relative_pattern_error(p: FarFieldPattern, ref: FarFieldPattern) -> float:
    """Relative L2(S^1) error, matching modes by order."""
    orders = np.union1d(p.orders, ref.orders)
    a = np.array([p.coefficient(m) for m in orders])
    b = np.array([ref.coefficient(m) for m in orders])
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
