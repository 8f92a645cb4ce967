"""Media (A, rho, q), decay classification, and pushforward nonscattering media."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import DomainSpec

Array = np.ndarray

CONTRAST_NONDEGENERATE = "contrast-nondegenerate"
A_DECAYS = "A-decays"
CONTRAST_DECAYS = "contrast-decays"
A_ORTHOGONAL = "A-orthogonal-structure"

DYADIC_LEVELS = range(3, 13)
EXPONENT_SLACK = 0.1
FD_RELATIVE_STEP = 1e-6


class DiffeomorphismError(ValueError):
    """Jacobian determinant is not positive somewhere on the sample set."""


@dataclass(frozen=True)
class CoefficientField:
    """Medium (A, rho, q) with A = Id + anisotropy inside D and (Id, 1) outside.

    ``anisotropy`` returns A - Id, shape (N, 2, 2); ``density`` returns rho,
    shape (N,).  Both are smooth extensions evaluated without the indicator
    of D; :meth:`A` and :meth:`rho` apply the indicator.  Storing A - Id
    rather than A keeps small perturbations exact near the tracked point.
    """

    kappa: float
    domain: DomainSpec
    anisotropy: Callable[[Array], Array] | None = None
    density: Callable[[Array], Array] | None = None
    potential: Callable[[Array], Array] | None = None
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("wavenumber must be positive")

    # smooth extensions ------------------------------------------------
    def anisotropy_ext(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        if self.anisotropy is None:
            return np.zeros((len(pts), 2, 2))
        return np.asarray(self.anisotropy(pts), dtype=float)

    def A_ext(self, pts) -> Array:
        return np.eye(2) + self.anisotropy_ext(pts)

    def rho_ext(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        if self.density is None:
            return np.ones(len(pts))
        return np.asarray(self.density(pts), dtype=float)

    def contrast_ext(self, pts) -> Array:
        return self.kappa ** 2 * (self.rho_ext(pts) - 1.0)

    # with the indicator of D -----------------------------------------
    def A(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        inside = self.domain.contains(pts)
        out = np.broadcast_to(np.eye(2), (len(pts), 2, 2)).copy()
        if inside.any():
            out[inside] = self.A_ext(pts[inside])
        return out

    def rho(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        return np.where(self.domain.contains(pts), self.rho_ext(pts), 1.0)

    def contrast(self, pts) -> Array:
        """h = kappa^2 (rho - 1) chi_D."""
        pts = np.atleast_2d(pts)
        return np.where(self.domain.contains(pts), self.contrast_ext(pts), 0.0)

    @property
    def is_identity(self) -> bool:
        return self.anisotropy is None and self.density is None

    def ellipticity_constant(self, pts) -> float:
        """Smallest c with c^-1 |xi|^2 <= xi.A xi <= c |xi|^2 on the samples."""
        A = self.A(pts)
        if not np.allclose(A, np.transpose(A, (0, 2, 1)), atol=1e-13):
            raise ValueError("A is not symmetric on the sample set")
        ev = np.linalg.eigvalsh(A)
        if ev.min() <= 0:
            raise ValueError("A is not positive definite on the sample set")
        return float(max(ev.max(), 1.0 / ev.min()))


def constant_medium(domain: DomainSpec, kappa: float, rho: float = 1.0, c0: float = 0.0) -> CoefficientField:
    """A = (1 + c0) Id, rho constant, inside D."""
    aniso = None if c0 == 0 else (lambda p: np.broadcast_to(c0 * np.eye(2), (len(p), 2, 2)).copy())
    dens = None if rho == 1 else (lambda p: np.full(len(p), float(rho)))
    return CoefficientField(kappa, domain, aniso, dens, label="constant-contrast",
                            params={"rho": rho, "c0": c0})


# ---------------------------------------------------------------------------
# Decay classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayCertificate:
    condition: str
    x0: tuple[float, float]
    alpha: float
    C: float
    c0: float | None = None
    B: Array | None = None
    m: int | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("Hoelder exponent must be positive")
        if self.condition == A_ORTHOGONAL:
            if self.c0 is None or self.c0 == 0 or self.B is None:
                raise ValueError("orthogonal-structure certificate needs c0 != 0 and B")
            if np.abs(self.B.T @ self.B - np.eye(2)).max() > 1e-12:
                raise ValueError("B is not orthogonal")


@dataclass
class DecayClassification:
    x0: tuple[float, float]
    alpha: float
    certificates: list[DecayCertificate]
    exponents: dict[str, float]
    failures: dict[str, str]

    def holds(self, condition: str) -> bool:
        return any(c.condition == condition for c in self.certificates)

    @property
    def regime(self) -> str | None:
        """'density-contrast' or 'anisotropic-contrast' when both conditions of that regime are certified."""
        if self.holds(CONTRAST_NONDEGENERATE) and self.holds(A_DECAYS):
            return "density-contrast"
        if self.holds(CONTRAST_DECAYS) and self.holds(A_ORTHOGONAL):
            return "anisotropic-contrast"
        return None


def _annulus_samples(domain: DomainSpec, x0: Array, k: int, n_r=6, n_theta=96):
    r = np.geomspace(2.0 ** (-k - 1), 2.0 ** (-k), n_r)
    th = (np.arange(n_theta) + 0.5) * 2 * math.pi / n_theta
    R, TH = np.meshgrid(r, th, indexing="ij")
    pts = x0 + np.c_[(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()]
    return pts[domain.contains(pts)]


def _fd_gradient_norm(fn: Callable[[Array], Array], pts: Array, x0: Array) -> Array:
    """Central-difference |grad F| for a matrix-valued F, step 1e-6 |x - x0|."""
    step = FD_RELATIVE_STEP * np.linalg.norm(pts - x0, axis=1)
    total = np.zeros(len(pts))
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1.0
        d = (fn(pts + step[:, None] * e) - fn(pts - step[:, None] * e)) / (2 * step)[:, None, None]
        total += np.sum(d * d, axis=(1, 2))
    return np.sqrt(total)


def _fit_exponent(radii: Array, maxima: Array, floor: float = 1e-300) -> float:
    """Log-log least-squares slope; +inf when the quantity vanishes identically."""
    good = maxima > floor
    if good.sum() < 2:
        return math.inf
    slope, _ = np.polyfit(np.log(radii[good]), np.log(maxima[good]), 1)
    return float(slope)


def classify_decay(field: CoefficientField, x0, alpha: float, m: int | None = None) -> DecayClassification:
    """Certify the decay hypotheses at the boundary point x0 from dyadic samples."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x0 = np.asarray(x0, dtype=float)
    radii, a_max, grad_max, h_max, dh_max, rem_max, rem_grad_max = ([] for _ in range(7))
    c_a, c_grad, c_h, c_dh, c_rem, c_rem_grad = (0.0,) * 6

    h0 = float(field.contrast_ext(x0[None])[0])
    M = field.anisotropy_ext(x0[None])[0]
    if not (np.all(np.isfinite(M)) and np.isfinite(h0)):
        raise ValueError("coefficient evaluator undefined at x0")

    for k in DYADIC_LEVELS:
        pts = _annulus_samples(field.domain, x0, k)
        if len(pts) == 0:
            raise ValueError(f"no samples of D in the dyadic annulus k={k} around x0")
        dist = np.linalg.norm(pts - x0, axis=1)
        P = field.anisotropy_ext(pts)
        if not np.all(np.isfinite(P)):
            raise ValueError(f"inconsistent coefficient samples near x0 (annulus k={k})")
        a = np.linalg.norm(P, ord=2, axis=(1, 2))
        g = _fd_gradient_norm(field.anisotropy_ext, pts, x0)
        h = np.abs(field.contrast_ext(pts))
        dh = np.abs(field.contrast_ext(pts) - h0)
        rem = np.linalg.norm(P - M, ord=2, axis=(1, 2))
        radii.append(2.0 ** (-k))
        for store, vals in ((a_max, a), (grad_max, g), (h_max, h), (dh_max, dh), (rem_max, rem)):
            store.append(vals.max())
        c_a = max(c_a, np.max(a / dist ** (2 + alpha)))
        c_grad = max(c_grad, np.max(g / dist ** (1 + alpha)))
        c_h = max(c_h, np.max(h / dist ** alpha))
        c_dh = max(c_dh, np.max(dh / dist ** alpha))
        c_rem = max(c_rem, np.max(rem / dist ** alpha))
        c_rem_grad = max(c_rem_grad, np.max(g / dist ** (alpha - 1)))

    radii = np.array(radii)
    exps = {
        "|A-Id|": _fit_exponent(radii, np.array(a_max)),
        "|grad A|": _fit_exponent(radii, np.array(grad_max), floor=1e-13),
        "|h|": _fit_exponent(radii, np.array(h_max)),
        "|h-h(x0)|": _fit_exponent(radii, np.array(dh_max), floor=1e-14 * max(1.0, abs(h0))),
        "|A-Id-c0/B|": _fit_exponent(radii, np.array(rem_max), floor=1e-14),
    }
    certs: list[DecayCertificate] = []
    fails: dict[str, str] = {}
    xt = (float(x0[0]), float(x0[1]))

    if abs(h0) > 1e-12 and exps["|h-h(x0)|"] >= alpha - EXPONENT_SLACK:
        certs.append(DecayCertificate(CONTRAST_NONDEGENERATE, xt, alpha, c_dh, m=m))
    else:
        fails[CONTRAST_NONDEGENERATE] = f"h(x0)={h0:.3g}, Hoelder exponent {exps['|h-h(x0)|']:.3g}"

    if exps["|A-Id|"] >= 2 + alpha - EXPONENT_SLACK and exps["|grad A|"] >= 1 + alpha - EXPONENT_SLACK:
        certs.append(DecayCertificate(A_DECAYS, xt, alpha, max(c_a, c_grad), m=m))
    else:
        fails[A_DECAYS] = f"exponents |A-Id| {exps['|A-Id|']:.3g}, |grad A| {exps['|grad A|']:.3g}"

    if exps["|h|"] >= alpha - EXPONENT_SLACK:
        certs.append(DecayCertificate(CONTRAST_DECAYS, xt, alpha, c_h, m=m))
    else:
        fails[CONTRAST_DECAYS] = f"|h| exponent {exps['|h|']:.3g}"

    MMt = M @ M.T
    c0 = math.sqrt(max(np.trace(MMt) / 2.0, 0.0))
    orth = c0 > 1e-12 and np.abs(MMt / c0 ** 2 - np.eye(2)).max() < 1e-10
    rem_ok = exps["|A-Id-c0/B|"] >= alpha - EXPONENT_SLACK
    if orth and rem_ok:
        Binv = M / c0
        B = Binv.T
        B = _nearest_orthogonal(B)
        certs.append(DecayCertificate(A_ORTHOGONAL, xt, alpha, max(c_rem, c_rem_grad), c0=c0, B=B, m=m))
    else:
        fails[A_ORTHOGONAL] = ("A(x0)-Id is not a nonzero multiple of an orthogonal matrix"
                                  if not orth else f"remainder exponent {exps['|A-Id-c0/B|']:.3g}")
    return DecayClassification(xt, alpha, certs, exps, fails)


def _nearest_orthogonal(B: Array) -> Array:
    u, _, vt = np.linalg.svd(B)
    return u @ vt


# ---------------------------------------------------------------------------
# Diffeomorphisms and pushforwards
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Diffeomorphism:
    """Boundary-fixing map Phi with closed-form forward map and Jacobian.

    ``jacobian`` returns (N, 2, 2) with entries d Phi_i / d x_j.  The inverse
    is closed form or a scalar Newton solve along the map's invariant curves.
    """

    forward: Callable[[Array], Array]
    inverse: Callable[[Array], Array]
    jacobian: Callable[[Array], Array]
    support_center: tuple[float, float]
    support_radius: float
    label: str = ""


def bump_profile(t):
    """b(t) = (1 - t^2)^3 on [0, 1], zero beyond."""
    t = np.asarray(t, dtype=float)
    return np.where(t < 1.0, (1.0 - t * t) ** 3, 0.0)


def _bump_profile_over_t(t):
    """b'(t) / t, finite at t = 0."""
    t = np.asarray(t, dtype=float)
    return np.where(t < 1.0, -6.0 * (1.0 - t * t) ** 2, 0.0)


def bump_diffeomorphism(center, radius: float, amplitude: float, samples: int = 4000) -> Diffeomorphism:
    """Radial bump Phi(x) = x + amplitude b(|x-c|/radius) (x-c).

    The map preserves rays from the centre, so its inverse reduces to a
    monotone scalar equation s (1 + amplitude b(s)) = t solved by Newton.
    """
    c = np.asarray(center, dtype=float)
    rad = float(radius)
    amp = float(amplitude)

    def forward(x):
        x = np.atleast_2d(x)
        d = x - c
        s = np.linalg.norm(d, axis=1) / rad
        return x + amp * bump_profile(s)[:, None] * d

    def jacobian(x):
        x = np.atleast_2d(x)
        d = x - c
        s = np.linalg.norm(d, axis=1) / rad
        g = 1.0 + amp * bump_profile(s)
        J = g[:, None, None] * np.eye(2)
        J = J + (amp * _bump_profile_over_t(s) / rad ** 2)[:, None, None] * np.einsum("ni,nj->nij", d, d)
        return J

    def inverse(y):
        y = np.atleast_2d(y)
        d = y - c
        t = np.linalg.norm(d, axis=1) / rad
        s = t.copy()
        inside = t < 1.0
        for _ in range(60):
            si = s[inside]
            f = si * (1.0 + amp * bump_profile(si)) - t[inside]
            df = 1.0 + amp * (bump_profile(si) + si * si * _bump_profile_over_t(si))
            step = f / df
            s[inside] = si - step
            if np.all(np.abs(step) < 1e-16):
                break
        scale = np.where(t > 0, s / np.where(t > 0, t, 1.0), 1.0 / (1.0 + amp))
        return c + d * scale[:, None]

    phi = Diffeomorphism(forward, inverse, jacobian, (float(c[0]), float(c[1])), rad, label="radial-bump")
    _audit_jacobian(phi, samples)
    return phi


def corner_twist_diffeomorphism(spec: DomainSpec, amplitude: float, samples: int = 4000) -> Diffeomorphism:
    """Angular twist of a sector about its corner, fixing the whole boundary.

    Phi(r e^{i phi}) = r e^{i(phi + delta)}, delta = amplitude f(r) sin(pi phi/theta0)
    with f(r) = (r/a)^2 (1 - (r/a)^2)^3, so Phi - x = O(r^3) and the
    Jacobian equals the identity at the corner.
    """
    if spec.kind != "sector":
        raise ValueError("corner twist is defined for sector domains")
    a, th0, amp = spec.outer_radius, spec.corner_angle, float(amplitude)
    k = math.pi / th0

    def radial(r):
        u = np.clip(r / a, 0.0, 1.0)
        return u * u * (1.0 - u * u) ** 3

    def radial_deriv(r):
        u = np.clip(r / a, 0.0, 1.0)
        return (2 * u * (1 - u * u) ** 3 - 6 * u ** 3 * (1 - u * u) ** 2) / a

    def polar(x):
        r = np.hypot(x[:, 0], x[:, 1])
        ph = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2 * math.pi)
        inside = (r < a) & (ph <= th0)
        return r, ph, inside

    def delta(r, ph, inside):
        return np.where(inside, amp * radial(r) * np.sin(k * np.minimum(ph, th0)), 0.0)

    def rotate(x, ang):
        c, s = np.cos(ang), np.sin(ang)
        return np.c_[c * x[:, 0] - s * x[:, 1], s * x[:, 0] + c * x[:, 1]]

    def forward(x):
        x = np.atleast_2d(x)
        r, ph, inside = polar(x)
        return rotate(x, delta(r, ph, inside))

    def inverse(y):
        y = np.atleast_2d(y)
        r, psi, inside = polar(y)
        cr = amp * radial(r)
        ph = psi.copy()
        for _ in range(60):
            f = ph + cr * np.sin(k * ph) - psi
            df = 1.0 + cr * k * np.cos(k * ph)
            step = np.where(inside, f / df, 0.0)
            ph = ph - step
            if np.all(np.abs(step) < 1e-16):
                break
        return rotate(y, np.where(inside, ph - psi, 0.0))

    def jacobian(x):
        x = np.atleast_2d(x)
        r, ph, inside = polar(x)
        d = delta(r, ph, inside)
        rs = np.where(r > 0, r, 1.0)
        er = x / rs[:, None]
        ephi = np.c_[-er[:, 1], er[:, 0]]
        dr = amp * radial_deriv(r) * np.sin(k * ph)
        dphi = amp * radial(r) * k * np.cos(k * ph) / rs
        grad_delta = np.where(inside[:, None], dr[:, None] * er + dphi[:, None] * ephi, 0.0)
        perp = np.c_[-x[:, 1], x[:, 0]]
        inner = np.eye(2) + np.einsum("ni,nj->nij", perp, grad_delta)
        c, s = np.cos(d), np.sin(d)
        Rm = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        return Rm @ inner

    phi = Diffeomorphism(forward, inverse, jacobian, (0.0, 0.0), a, label="corner-twist")
    _audit_jacobian(phi, samples)
    return phi


def _audit_jacobian(phi: Diffeomorphism, samples: int) -> None:
    rng = np.random.default_rng(12345)
    c = np.asarray(phi.support_center)
    ang = rng.uniform(0, 2 * math.pi, samples)
    rad = phi.support_radius * np.sqrt(rng.uniform(0, 1, samples))
    pts = c + np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    det = np.linalg.det(phi.jacobian(pts))
    if np.any(det <= 0):
        raise DiffeomorphismError(f"Jacobian determinant {det.min():.3g} <= 0; amplitude too large")


def pushforward_medium(phi: Diffeomorphism, spec: DomainSpec, kappa: float, samples: int = 4000) -> CoefficientField:
    """A = [J J^T / |det J|] o Phi^-1 and rho = [1 / |det J|] o Phi^-1 on D."""

    def aniso(x):
        y = phi.inverse(x)
        J = phi.jacobian(y)
        det = np.abs(np.linalg.det(J))
        if np.any(det <= 0):
            raise DiffeomorphismError("singular Jacobian at a sample point")
        A = J @ np.transpose(J, (0, 2, 1)) / det[:, None, None]
        return A - np.eye(2)

    def dens(x):
        y = phi.inverse(x)
        return 1.0 / np.abs(np.linalg.det(phi.jacobian(y)))

    field_ = CoefficientField(kappa, spec, aniso, dens, label="pushforward",
                              params={"diffeomorphism": phi.label})
    _audit_jacobian(phi, samples)
    return field_
