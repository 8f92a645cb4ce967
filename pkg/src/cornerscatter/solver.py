"""P1 finite elements for the transmission problem with a Fourier-Bessel DtN map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from .coefficients import CoefficientField, Diffeomorphism
from .geometry import DomainSpec, MeshedDomain
from .waves import IncidentWave, bessel_j, bessel_j_derivative, bessel_y

Array = np.ndarray

DTN_EXTRA_MODES = 15
DTN_MIN_EXTRA = 10
RESIDUAL_TOL = 1e-10

# Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1).
_S15 = math.sqrt(15.0)
_A1, _B1 = (9 - 2 * _S15) / 21, (6 + _S15) / 21
_A2, _B2 = (9 + 2 * _S15) / 21, (6 - _S15) / 21
QUAD_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
QUAD_W = np.array([0.225] + [(155 + _S15) / 1200] * 3 + [(155 - _S15) / 1200] * 3)


class SolverError(RuntimeError):
    pass


class SingularSystemError(SolverError):
    """The discrete system is (numerically) singular: a discrete resonance."""


# ---------------------------------------------------------------------------
# DtN map
# ---------------------------------------------------------------------------


def dtn_coefficients(kappa: float, R: float, N: int) -> tuple[Array, Array]:
    """Orders m = -N..N and lambda_m = kappa H_m'(kappa R) / H_m(kappa R)."""
    if kappa * R <= 0:
        raise ValueError("kappa R must be positive")
    m = np.arange(0, N + 1)
    x = kappa * R
    J, Y = bessel_j(m, x), bessel_y(m, x)
    dJ = bessel_j_derivative(m, x)
    dY = 0.5 * (bessel_y(m - 1, x) - bessel_y(m + 1, x))
    mod2 = J * J + Y * Y
    # H'/H = (J J' + Y Y' + i W) / |H|^2 with the Wronskian W = 2 / (pi x); the
    # imaginary part is formed from W directly so it stays positive when |H| is huge
    lam_pos = kappa * (J * dJ + Y * dY) / mod2 + 1j * kappa * (2.0 / (math.pi * x)) / mod2
    if not np.all(np.isfinite(lam_pos)):
        raise SolverError("Hankel evaluation failed in the DtN multipliers")
    orders = np.arange(-N, N + 1)
    return orders, lam_pos[np.abs(orders)]


def default_mode_cutoff(kappa: float, R: float) -> int:
    return int(math.ceil(kappa * R)) + DTN_EXTRA_MODES


def boundary_fourier_matrix(mesh: MeshedDomain, orders: Array, gauss: int = 8) -> tuple[Array, Array]:
    """c[m, i] = (1/2pi) int N_i(theta) e^{-i m theta} d theta for truncation hats.

    Hats are taken piecewise linear in the polar angle between consecutive
    truncation vertices; each edge is integrated by ``gauss``-point Gauss.
    """
    idx = mesh.truncation_vertices
    th = np.arctan2(mesh.vertices[idx, 1], mesh.vertices[idx, 0])
    th_next = np.roll(th, -1)
    th_next[-1] += 2 * math.pi
    xg, wg = np.polynomial.legendre.leggauss(gauss)
    s = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    C = np.zeros((len(orders), len(idx)), dtype=complex)
    nxt = np.roll(np.arange(len(idx)), -1)
    for e in range(len(idx)):
        a, b = th[e], th_next[e]
        t = a + (b - a) * s
        phase = np.exp(-1j * np.outer(orders, t)) * (w * (b - a))
        C[:, e] += phase @ (1.0 - s)
        C[:, nxt[e]] += phase @ s
    return idx, C / (2 * math.pi)


# ---------------------------------------------------------------------------
# Problem and assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransmissionProblem:
    mesh: MeshedDomain
    medium: CoefficientField
    incident: IncidentWave | None = None
    N: int | None = None

    def __post_init__(self):
        R = self.mesh.truncation_radius
        if R <= self.medium.domain.extent:
            raise ValueError("truncation radius must exceed the scatterer extent")
        if self.incident is not None and abs(self.incident.kappa - self.medium.kappa) > 0:
            raise ValueError("incident wave and medium disagree on the wavenumber")
        floor = int(math.ceil(self.medium.kappa * R)) + DTN_MIN_EXTRA
        if self.N is not None and self.N < floor:
            raise ValueError(f"DtN cutoff must be at least {floor}")

    @property
    def kappa(self) -> float:
        return self.medium.kappa

    @property
    def cutoff(self) -> int:
        return self.N if self.N is not None else default_mode_cutoff(self.kappa, self.mesh.truncation_radius)


def _gradients(mesh: MeshedDomain) -> Array:
    """Constant gradients of the three hat functions per triangle, (T, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    det = 2.0 * mesh.areas
    g = np.empty((len(p), 3, 2))
    for k in range(3):
        j, l = (k + 1) % 3, (k + 2) % 3
        g[:, k, 0] = (y[:, j] - y[:, l]) / det
        g[:, k, 1] = (x[:, l] - x[:, j]) / det
    return g


def _quadrature_points(mesh: MeshedDomain, tri_idx: Array) -> Array:
    p = mesh.vertices[mesh.triangles[tri_idx]]
    return np.einsum("qk,tkd->tqd", QUAD_BARY, p)


def _coo(mesh: MeshedDomain, tri_idx: Array, local: Array):
    tri = mesh.triangles[tri_idx]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return rows, cols, local.reshape(len(tri_idx), 9).ravel()


@dataclass
class AssembledSystem:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix          # kappa^2 rho weighted
    dtn: sp.csr_matrix
    matrix: sp.csc_matrix        # K - M - B

    @property
    def dof(self) -> int:
        return self.matrix.shape[0]


def assemble_matrices(mesh: MeshedDomain, medium: CoefficientField, N: int) -> AssembledSystem:
    n = mesh.n_vertices
    G = _gradients(mesh)
    area = mesh.areas
    kappa2 = medium.kappa ** 2
    inside = np.flatnonzero(mesh.in_scatterer)
    outside = np.flatnonzero(~mesh.in_scatterer)

    # exterior: A = Id, rho = 1 in closed form
    K_out = area[outside, None, None] * np.einsum("tid,tjd->tij", G[outside], G[outside])
    M_loc = (np.ones((3, 3)) + np.eye(3)) / 12.0
    M_out = kappa2 * area[outside, None, None] * M_loc

    # scatterer: 7-point quadrature of A and rho
    qp = _quadrature_points(mesh, inside).reshape(-1, 2)
    A = medium.A_ext(qp).reshape(len(inside), len(QUAD_W), 2, 2)
    rho = medium.rho_ext(qp).reshape(len(inside), len(QUAD_W))
    Abar = np.einsum("q,tqde->tde", QUAD_W, A)
    if not np.all(np.isfinite(Abar)) or not np.all(np.isfinite(rho)):
        raise SolverError("medium undefined at a quadrature point inside the scatterer")
    K_in = area[inside, None, None] * np.einsum("tid,tde,tje->tij", G[inside], Abar, G[inside])
    phi = QUAD_BARY
    M_in = kappa2 * area[inside, None, None] * np.einsum("q,tq,qi,qj->tij", QUAD_W, rho, phi, phi)

    def build(parts):
        r, c, v = zip(*parts)
        return sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(n, n))

    K = build([_coo(mesh, outside, K_out), _coo(mesh, inside, K_in)])
    M = build([_coo(mesh, outside, M_out), _coo(mesh, inside, M_in)])

    orders, lam = dtn_coefficients(medium.kappa, mesh.truncation_radius, N)
    idx, C = boundary_fourier_matrix(mesh, orders)
    R = mesh.truncation_radius
    Bd = 2 * math.pi * R * (np.conj(C).T * lam) @ C
    Bd = 0.5 * (Bd + Bd.T)
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    B = sp.csr_matrix((Bd.ravel(), (ii.ravel(), jj.ravel())), shape=(n, n))

    Amat = (K.astype(complex) - M - B).tocsc()
    return AssembledSystem(K, M, B, Amat)


def assemble_source(mesh: MeshedDomain, medium: CoefficientField, incident: IncidentWave) -> Array:
    """b_i = int_D (A - Id) grad u_inc . grad phi_i - int_D h u_inc phi_i.

    The discrete equation is (K - kappa^2 M - B) u = -b.  Triangles where
    both A - Id and h vanish contribute exact zeros.
    """
    n = mesh.n_vertices
    b = np.zeros(n, dtype=complex)
    inside = np.flatnonzero(mesh.in_scatterer)
    if medium.is_identity or len(inside) == 0:
        return b
    G = _gradients(mesh)[inside]
    area = mesh.areas[inside]
    qp = _quadrature_points(mesh, inside).reshape(-1, 2)
    nq = len(QUAD_W)
    P = medium.anisotropy_ext(qp)
    h = medium.contrast_ext(qp)
    u = incident(qp)
    gu = incident.gradient(qp)
    flux = np.einsum("nde,ne->nd", P, gu).reshape(len(inside), nq, 2)
    hu = (h * u).reshape(len(inside), nq)
    term1 = np.einsum("q,tqd,tid->ti", QUAD_W, flux, G)
    term2 = np.einsum("q,tq,qi->ti", QUAD_W, hu, QUAD_BARY)
    local = area[:, None] * (term1 - term2)
    np.add.at(b, mesh.triangles[inside].ravel(), local.ravel())
    return b


def assemble_transmission_system(p: TransmissionProblem) -> tuple[sp.csc_matrix, Array]:
    """Matrix K - kappa^2 M - B and right-hand side -b for the scattered field."""
    system = assemble_matrices(p.mesh, p.medium, p.cutoff)
    if p.incident is None:
        raise ValueError("problem has no incident wave")
    return system.matrix, -assemble_source(p.mesh, p.medium, p.incident)


def transmission_sources(medium: CoefficientField, incident: IncidentWave, pts, normals_in=None,
                         fd_step: float = 1e-5):
    """Volume density f at ``pts`` and, given inward normals, the surface density g.

    With nu pointing into D the surface density that makes the distributional
    equation hold is g = -nu . (A - Id) grad u_inc (equivalently the outward
    normal without the sign).  The divergence in f uses central differences
    of (A - Id) grad u_inc.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))

    def flux(x):
        return np.einsum("nde,ne->nd", medium.anisotropy_ext(x), incident.gradient(x))

    div = np.zeros(len(pts), dtype=complex)
    for d in range(2):
        e = np.zeros(2)
        e[d] = fd_step
        div += (flux(pts + e)[:, d] - flux(pts - e)[:, d]) / (2 * fd_step)
    f = -(div + medium.contrast_ext(pts) * incident(pts))
    if normals_in is None:
        return f
    g = -np.einsum("nd,nd->n", np.atleast_2d(normals_in), flux(pts))
    return f, g


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


class PointLocator:
    """Triangle lookup by nearest centroids with a brute-force fallback."""

    def __init__(self, mesh: MeshedDomain, k: int = 12):
        self.mesh = mesh
        self.k = min(k, len(mesh.triangles))
        p = mesh.vertices[mesh.triangles]
        self._p0 = p[:, 0]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self._inv = np.stack([np.stack([e2[:, 1], -e2[:, 0]], -1),
                              np.stack([-e1[:, 1], e1[:, 0]], -1)], -2) / det[:, None, None]
        self._tree = cKDTree(p.mean(axis=1))

    def _bary(self, tri, pts):
        st = np.einsum("nij,nj->ni", self._inv[tri], pts - self._p0[tri])
        return np.c_[1 - st.sum(1), st]

    def locate(self, pts, tol: float = 1e-10) -> tuple[Array, Array]:
        """Triangle index (-1 outside the mesh) and barycentric coordinates."""
        pts = np.atleast_2d(pts)
        tri_out = np.full(len(pts), -1)
        bary_out = np.zeros((len(pts), 3))
        _, cand = self._tree.query(pts, k=self.k)
        cand = np.atleast_2d(cand)
        best = np.full(len(pts), -np.inf)
        for j in range(cand.shape[1]):
            t = cand[:, j]
            lam = self._bary(t, pts)
            score = lam.min(axis=1)
            better = score > best
            best[better] = score[better]
            tri_out[better] = t[better]
            bary_out[better] = lam[better]
        miss = np.flatnonzero(best < -tol)
        for i in miss:
            lam = self._bary(np.arange(len(self.mesh.triangles)), np.repeat(pts[i:i + 1], len(self._p0), 0))
            score = lam.min(axis=1)
            t = int(np.argmax(score))
            if score[t] >= -tol:
                tri_out[i], bary_out[i] = t, lam[t]
            else:
                tri_out[i] = -1
        return tri_out, bary_out


@dataclass
class WaveField:
    """Complex field: P1 nodal values on a mesh or closed-form evaluators.

    ``role`` is one of scattered, total, manufactured, closed-form.
    """

    role: str
    mesh: MeshedDomain | None = None
    values: Array | None = None
    value_fn: Callable[[Array], Array] | None = None
    gradient_fn: Callable[[Array], Array] | None = None
    support: DomainSpec | None = None
    meta: dict = field(default_factory=dict)
    _locator: PointLocator | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.role not in ("scattered", "total", "manufactured", "closed-form"):
            raise ValueError(f"unknown role {self.role!r}")
        if self.values is not None:
            if self.mesh is None or len(self.values) != self.mesh.n_vertices:
                raise ValueError("nodal values need a matching mesh")
            if not np.all(np.isfinite(self.values)):
                raise ValueError("nonfinite nodal values")
        elif self.value_fn is None:
            raise ValueError("field needs nodal values or an evaluator")

    @property
    def is_nodal(self) -> bool:
        return self.values is not None

    @property
    def locator(self) -> PointLocator:
        if self._locator is None:
            self._locator = PointLocator(self.mesh)
        return self._locator

    def __call__(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if not self.is_nodal:
            return np.asarray(self.value_fn(pts), dtype=complex)
        tri, lam = self.locator.locate(pts)
        out = np.einsum("ni,ni->n", lam, self.values[self.mesh.triangles[np.maximum(tri, 0)]])
        out[tri < 0] = np.nan
        return out

    def gradient(self, pts) -> Array:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if not self.is_nodal:
            if self.gradient_fn is None:
                raise ValueError("closed-form field has no gradient evaluator")
            return np.asarray(self.gradient_fn(pts), dtype=complex)
        tri, _ = self.locator.locate(pts)
        G = _gradients(self.mesh)[np.maximum(tri, 0)]
        vals = self.values[self.mesh.triangles[np.maximum(tri, 0)]]
        out = np.einsum("ni,nid->nd", vals, G)
        out[tri < 0] = np.nan
        return out

    def __mul__(self, c):
        if self.is_nodal:
            return WaveField(self.role, self.mesh, c * self.values, support=self.support, meta=dict(self.meta))
        gf = None if self.gradient_fn is None else (lambda p, g=self.gradient_fn: c * g(p))
        return WaveField(self.role, value_fn=lambda p, f=self.value_fn: c * f(p), gradient_fn=gf,
                         support=self.support, meta=dict(self.meta))

    __rmul__ = __mul__


def closed_form_field(value_fn, gradient_fn=None, support: DomainSpec | None = None,
                      role: str = "closed-form", **meta) -> WaveField:
    return WaveField(role, value_fn=value_fn, gradient_fn=gradient_fn, support=support, meta=meta)


def nonscattering_field(phi: Diffeomorphism, spec: DomainSpec, incident: IncidentWave) -> WaveField:
    """u_sc = u_inc o Phi^-1 - u_inc in D and 0 outside, with its exact gradient."""

    def value(x):
        x = np.atleast_2d(x)
        inside = spec.contains(x)
        out = np.zeros(len(x), dtype=complex)
        if inside.any():
            xi = x[inside]
            out[inside] = incident(phi.inverse(xi)) - incident(xi)
        return out

    def grad(x):
        x = np.atleast_2d(x)
        inside = spec.contains(x)
        out = np.zeros((len(x), 2), dtype=complex)
        if inside.any():
            xi = x[inside]
            y = phi.inverse(xi)
            Jinv_T = np.transpose(np.linalg.inv(phi.jacobian(y)), (0, 2, 1))
            out[inside] = np.einsum("nij,nj->ni", Jinv_T, incident.gradient(y)) - incident.gradient(xi)
        return out

    return WaveField("scattered", value_fn=value, gradient_fn=grad, support=spec,
                     meta={"construction": "pushforward", "diffeomorphism": phi.label})


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------


class FactorizedTransmission:
    """One LU factorization of the system, reused for many incident waves."""

    def __init__(self, mesh: MeshedDomain, medium: CoefficientField, N: int | None = None):
        self.mesh = mesh
        self.medium = medium
        probe = TransmissionProblem(mesh, medium, None, N)
        self.N = probe.cutoff
        self.system = assemble_matrices(mesh, medium, self.N)
        try:
            self.lu = splu(self.system.matrix)
        except RuntimeError as exc:
            raise SingularSystemError(f"factorization failed: {exc}") from exc

    @property
    def dof(self) -> int:
        return self.system.dof

    def condition_estimate(self) -> float:
        from scipy.sparse.linalg import LinearOperator, onenormest

        A = self.system.matrix
        n = A.shape[0]
        inv = LinearOperator((n, n), matvec=self.lu.solve,
                             rmatvec=lambda x: np.conj(self.lu.solve(np.conj(x), trans="H")),
                             dtype=complex)
        return float(onenormest(A) * onenormest(inv))

    def solve(self, incident: IncidentWave) -> WaveField:
        rhs = -assemble_source(self.mesh, self.medium, incident)
        if not np.any(rhs):
            u = np.zeros(self.dof, dtype=complex)
        else:
            u = self.lu.solve(rhs)
            if not np.all(np.isfinite(u)):
                raise SingularSystemError(f"nonfinite solution; condition estimate {self.condition_estimate():.3g}")
            res = np.linalg.norm(self.system.matrix @ u - rhs) / np.linalg.norm(rhs)
            if res > RESIDUAL_TOL:
                # one step of iterative refinement before giving up
                u = u + self.lu.solve(rhs - self.system.matrix @ u)
                res = np.linalg.norm(self.system.matrix @ u - rhs) / np.linalg.norm(rhs)
                if res > RESIDUAL_TOL:
                    raise SingularSystemError(
                        f"relative residual {res:.3g}; condition estimate {self.condition_estimate():.3g}")
        return WaveField("scattered", self.mesh, u, support=self.medium.domain,
                         meta={"kappa": self.medium.kappa, "N": self.N, "incident": incident})


def solve_scattered_field(p: TransmissionProblem) -> WaveField:
    if p.incident is None:
        raise ValueError("problem has no incident wave")
    return FactorizedTransmission(p.mesh, p.medium, p.N).solve(p.incident)
