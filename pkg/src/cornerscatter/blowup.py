"""Free-boundary diagnostics: rescalings, decay traces, Weiss energies, blowup fits.

Every routine takes a field as any object with ``__call__(pts)`` and
``gradient(pts)`` on (n, 2) arrays: a nodal or closed-form
:class:`~cornerscatter.solver.WaveField` or an analytic closed-form field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientField
from .waves import HarmonicPolynomial2D

Array = np.ndarray

GRID_ANGLES = 96
GRID_RADII = 64
SUPPORT_THRESHOLD = 1e-3
CAUCHY_RATIO = 0.8
DECAY_SLACK = 0.15
NONDEGENERACY_SLOPE = -0.1
WEISS_GAUSS = 32
WEISS_REL_TOL = 1e-4
HALFSPACE_TOL_DEG = 5.0
NODAL_BINS = 2


class ResolutionError(ValueError):
    """The requested radius is not resolved by the field's mesh."""


class QuadratureResolutionError(ArithmeticError):
    """Estimated quadrature error exceeds the relative tolerance."""


def unit_ball_grid(n_theta: int = GRID_ANGLES, n_r: int = GRID_RADII) -> tuple[Array, Array, Array]:
    """Polar grid of the closed unit ball: radii j/n_r (j = 1..n_r), angles 2 pi k/n_theta.

    Returns (points, radii, angles); points have shape (n_r * n_theta, 2),
    ordered radius-major.
    """
    r = np.arange(1, n_r + 1) / n_r
    th = 2 * math.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(r, th, indexing="ij")
    pts = np.c_[(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()]
    return pts, r, th


def _check_resolution(u, x0: Array, r: float) -> None:
    mesh = getattr(u, "mesh", None)
    if mesh is None or not getattr(u, "is_nodal", False):
        return
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    near = np.linalg.norm(cent - x0, axis=1) < r
    if not near.any():
        raise ResolutionError(f"no element inside B_{r:.3g}(x0)")
    hmax = mesh.edge_lengths()[near].max()
    if 2 * r < 4 * hmax:
        raise ResolutionError(f"B_{r:.3g}(x0) spans fewer than 4 elements (local size {hmax:.3g})")


# ---------------------------------------------------------------------------
# Rescaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RescaledField:
    values: Array
    points: Array
    r: float
    order: float
    n_theta: int = GRID_ANGLES
    n_r: int = GRID_RADII

    def as_grid(self) -> Array:
        return self.values.reshape(self.n_r, self.n_theta)


def rescale_field(u, x0, r: float, order: float, n_theta: int = GRID_ANGLES, n_r: int = GRID_RADII) -> RescaledField:
    """Values of u(x0 + r x) / r^order on the fixed polar grid of the unit ball."""
    if r <= 0:
        raise ValueError("scale must be positive")
    x0 = np.asarray(x0, dtype=float)
    _check_resolution(u, x0, r)
    pts, _, _ = unit_ball_grid(n_theta, n_r)
    vals = np.asarray(u(x0 + r * pts), dtype=complex) / r ** order
    if not np.all(np.isfinite(vals)):
        raise ValueError("rescaled ball leaves the field's domain")
    return RescaledField(vals, pts, float(r), float(order), n_theta, n_r)


# ---------------------------------------------------------------------------
# Decay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayTrace:
    radii: Array
    S: Array
    exponent: float | None
    target: float | None = None
    note: str = ""

    @property
    def violation(self) -> bool:
        """S_r <= C r^target fails when the fitted exponent falls short by more than 0.15."""
        if self.exponent is None or self.target is None:
            return False
        return self.exponent < self.target - DECAY_SLACK

    def to_csv_rows(self) -> list[str]:
        return ["r,S_r"] + [f"{r:.17g},{s:.17g}" for r, s in zip(self.radii, self.S)]


def decay_trace(u, x0, radii, target: float | None = None) -> DecayTrace:
    """S_r = sup_{B_r} |u| + r sup_{B_r} |grad u| and its log-log slope."""
    x0 = np.asarray(x0, dtype=float)
    radii = np.sort(np.asarray(radii, dtype=float))
    pts, _, _ = unit_ball_grid()
    S = []
    for r in radii:
        _check_resolution(u, x0, r)
        p = x0 + r * pts
        val = np.abs(np.asarray(u(p)))
        grad = np.linalg.norm(np.asarray(u.gradient(p)), axis=1)
        if not (np.all(np.isfinite(val)) and np.all(np.isfinite(grad))):
            raise ValueError(f"field undefined in B_{r:.3g}(x0)")
        S.append(val.max() + r * grad.max())
    # B_r' in B_r for r' < r, so the sup over the larger ball dominates
    S = np.maximum.accumulate(np.array(S))
    if np.all(S == 0):
        return DecayTrace(radii, S, None, target, note="identically zero field: exponent undefined")
    good = S > 0
    slope = float(np.polyfit(np.log(radii[good]), np.log(S[good]), 1)[0])
    return DecayTrace(radii, S, slope, target)


# ---------------------------------------------------------------------------
# Weiss energy
# ---------------------------------------------------------------------------


def _angular_rule(n: int, breaks) -> tuple[Array, Array]:
    if not breaks:
        th = 2 * math.pi * np.arange(n) / n
        return th, np.full(n, 2 * math.pi / n)
    b = np.sort(np.mod(np.asarray(breaks, dtype=float), 2 * math.pi))
    edges = np.r_[b, b[0] + 2 * math.pi]
    x, w = np.polynomial.legendre.leggauss(max(8, n // len(b)))
    th, wt = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        th.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        wt.append(0.5 * (hi - lo) * w)
    return np.concatenate(th), np.concatenate(wt)


def _weiss_once(u, H, medium, x0, r, order, n_r, n_theta, breaks, radial_breaks):
    th, wth = _angular_rule(n_theta, breaks)
    xg, wg = np.polynomial.legendre.leggauss(n_r)
    edges = np.unique(np.r_[0.0, [b for b in radial_breaks if 0 < b < r], r])
    vol_A = vol_I = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        rr = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        wr = 0.5 * (hi - lo) * wg * rr
        R, T = np.meshgrid(rr, th, indexing="ij")
        W = np.outer(wr, wth).ravel()
        rel = np.c_[(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()]
        p = x0 + rel
        val = np.asarray(u(p), dtype=complex)
        g = np.asarray(u.gradient(p), dtype=complex)
        hv = 0.0 if H is None else 2 * np.real(H(rel) * np.conj(val))
        gI = np.sum(np.abs(g) ** 2, axis=1)
        if medium is None:
            gA = gI
        else:
            A = medium.A(p)
            gA = np.real(np.einsum("ni,nij,nj->n", np.conj(g), A, g))
        vol_A += np.sum(W * (gA + hv))
        vol_I += np.sum(W * (gI + hv))
    circ = x0 + r * np.c_[np.cos(th), np.sin(th)]
    bnd = r * np.sum(wth * np.abs(np.asarray(u(circ))) ** 2)
    k = order
    WA = r ** (-2 * k) * vol_A - k * r ** (-2 * k - 1) * bnd
    WI = r ** (-2 * k) * vol_I - k * r ** (-2 * k - 1) * bnd
    return WA, WI


def _default_breaks(u, x0):
    sup = getattr(u, "support", None)
    sector = getattr(sup, "sector", None)
    if sector is not None and np.allclose(x0, 0):
        return list(sector)
    if getattr(sup, "is_corner", False) and np.allclose(x0, sup.corner_point):
        return [sup.corner_direction, sup.corner_direction + sup.corner_angle]
    return None


def weiss_energy(u, H: HarmonicPolynomial2D | None, medium: CoefficientField | None, r: float, order: float,
                 x0=(0.0, 0.0), angular_breaks=None, radial_breaks=(), n_r: int = WEISS_GAUSS,
                 n_theta: int = 256, check: bool = True) -> tuple[float, float]:
    """(W_A(r, u), W(r, u)) with W_A = r^{-2k} int_{B_r}(A grad u . grad u + 2 H u) - k r^{-2k-1} int_{dB_r} u^2.

    k = order (m + 2 when H has degree m).  Complex fields use the
    sesquilinear forms A grad u . conj(grad u), Re(H conj u) and |u|^2.
    ``H`` is evaluated at x - x0.  ``medium=None`` means A = Id.
    """
    if H is not None and not np.isclose(order, H.m + 2):
        raise ValueError("order must equal deg H + 2")
    x0 = np.asarray(x0, dtype=float)
    breaks = _default_breaks(u, x0) if angular_breaks is None else angular_breaks
    WA, WI = _weiss_once(u, H, medium, x0, r, order, n_r, n_theta, breaks, radial_breaks)
    if check:
        WA2, WI2 = _weiss_once(u, H, medium, x0, r, order, max(8, (3 * n_r) // 4), n_theta // 2 + 1,
                               breaks, radial_breaks)
        scale = max(abs(WI), abs(WA), 1e-300)
        err = max(abs(WA - WA2), abs(WI - WI2))
        if err > WEISS_REL_TOL * scale and err > 1e-13:
            raise QuadratureResolutionError(f"estimated Weiss quadrature error {err:.3g} at r={r:.3g}")
    return float(WA), float(WI)


@dataclass(frozen=True)
class WeissTrace:
    radii: Array
    W_A: Array
    W: Array
    order: float
    H: HarmonicPolynomial2D | None
    limit: float

    def to_csv_rows(self) -> list[str]:
        return ["r,W_A,W"] + [f"{r:.17g},{a:.17g},{b:.17g}" for r, a, b in zip(self.radii, self.W_A, self.W)]


def weiss_trace(u, H, medium, radii, order, x0=(0.0, 0.0), **kw) -> WeissTrace:
    """Weiss energies over decreasing radii; W(0+) by a linear fit in r of the smallest radii."""
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    vals = [weiss_energy(u, H, medium, r, order, x0, **kw) for r in radii]
    WA = np.array([v[0] for v in vals])
    WI = np.array([v[1] for v in vals])
    k = min(3, len(radii))
    if k >= 2:
        limit = float(np.polyfit(radii[-k:], WA[-k:], 1)[1])
    else:
        limit = float(WA[-1])
    return WeissTrace(radii, WA, WI, float(order), H, limit)


# ---------------------------------------------------------------------------
# Blowup limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportClass:
    kind: str                 # full | half-space | sector | empty
    angle: float              # opening in radians (2 pi for full)
    start: float              # first angle of the occupied arc
    normal: Array | None = None

    def contains(self, pts) -> Array:
        pts = np.atleast_2d(pts)
        if self.kind == "full":
            return np.ones(len(pts), dtype=bool)
        th = np.arctan2(pts[:, 1], pts[:, 0])
        rel = np.mod(th - self.start, 2 * math.pi)
        return (rel <= self.angle + 1e-12) | (np.hypot(pts[:, 0], pts[:, 1]) == 0)

    @property
    def label(self) -> str:
        if self.kind == "sector":
            return f"sector({math.degrees(self.angle):.1f}deg)"
        return self.kind


def _fill_nodal_lines(occ: Array) -> Array:
    """Close empty angular runs of at most NODAL_BINS bins: nodal lines, not support gaps."""
    if occ.all() or not occ.any():
        return occ
    k0 = int(np.flatnonzero(occ)[0])
    rolled = np.roll(occ, -k0).copy()
    i, n = 0, len(rolled)
    while i < n:
        if rolled[i]:
            i += 1
            continue
        j = i
        while j < n and not rolled[j]:
            j += 1
        if j - i <= NODAL_BINS:
            rolled[i:j] = True
        i = j
    return np.roll(rolled, k0)


def classify_support(resc: RescaledField, threshold: float = SUPPORT_THRESHOLD) -> SupportClass:
    """Angular extent of {|v| > threshold max|v|} on the polar grid."""
    grid = np.abs(resc.as_grid())
    vmax = grid.max()
    if vmax == 0:
        return SupportClass("empty", 0.0, 0.0)
    occ = (grid > threshold * vmax).any(axis=0)
    n = len(occ)
    d = 2 * math.pi / n
    occ = _fill_nodal_lines(occ)
    if occ.all():
        return SupportClass("full", 2 * math.pi, 0.0)
    # longest circular run of occupied bins
    k0 = int(np.flatnonzero(~occ)[0])
    rolled = np.roll(occ, -k0)
    best_len, best_start, run, start = 0, 0, 0, 0
    for i, o in enumerate(rolled):
        if o:
            if run == 0:
                start = i
            run += 1
            if run > best_len:
                best_len, best_start = run, start
        else:
            run = 0
    # a continuous field vanishes on its support boundary, so the edges sit at the first empty samples
    width = (best_len + 1) * d
    start_angle = ((best_start + k0) % n - 1) * d
    start_angle %= 2 * math.pi
    if abs(math.degrees(width) - 180.0) <= HALFSPACE_TOL_DEG:
        mid = start_angle + width / 2
        return SupportClass("half-space", width, start_angle, np.array([math.cos(mid), math.sin(mid)]))
    return SupportClass("sector", width, start_angle)


def _zzbar_basis(pts: Array, d: int) -> Array:
    z = pts[:, 0] + 1j * pts[:, 1]
    zb = np.conj(z)
    return np.stack([z ** j * zb ** (d - j) for j in range(d + 1)], axis=1)


@dataclass
class BlowupFit:
    rescalings: list[RescaledField]
    gaps: Array
    converged: bool
    support: SupportClass
    limit: RescaledField
    coefficients: Array | None = None       # in the basis z^j zbar^(d-j), j = 0..d, extrapolated to r = 0
    final_coefficients: Array | None = None  # same basis, fitted to the smallest-radius rescaling
    harmonic: HarmonicPolynomial2D | None = None
    fit_residual: float | None = None
    family: str | None = None
    H_fit: Array | None = None              # z^j zbar^(d-2-j) coefficients of Delta v
    notes: list[str] = field(default_factory=list)

    def evaluate(self, pts) -> Array:
        if self.coefficients is None:
            raise ValueError("no fitted polynomial")
        pts = np.atleast_2d(pts)
        d = len(self.coefficients) - 1
        return np.where(self.support.contains(pts), _zzbar_basis(pts, d) @ self.coefficients, 0.0)

    def report_lines(self) -> list[str]:
        lines = [f"support: {self.support.label}",
                 f"support_angle_deg: {math.degrees(self.support.angle):.6f}",
                 f"converged: {self.converged}",
                 "cauchy_gaps: " + " ".join(f"{g:.6g}" for g in self.gaps)]
        if self.harmonic is not None:
            h = self.harmonic
            lines += [f"family: {self.family}", f"fit_residual: {self.fit_residual:.6g}",
                      f"m: {h.m}", f"a: {h.a.real:.17g} {h.a.imag:.17g}", f"b: {h.b.real:.17g} {h.b.imag:.17g}"]
        lines += [f"note: {n}" for n in self.notes]
        return lines


def blowup_limit_fit(u, x0, order: int, radii, force_fit: bool = False) -> BlowupFit:
    """Compare successive rescalings, classify the support, fit the last one.

    The final rescaling is least-squares fitted by homogeneous polynomials
    of degree ``order`` over its support (basis z^j zbar^(order-j)).  When
    the gaps contract, the per-radius coefficients are extrapolated linearly
    in r to r = 0; the z^order and zbar^order coefficients of that estimate
    give the HarmonicPolynomial2D.
    A non-contracting Cauchy gap is reported and blocks the fit unless
    ``force_fit`` is set.
    """
    radii = list(radii)
    if len(radii) < 3:
        raise ValueError("need at least three radii")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    resc = [rescale_field(u, x0, r, order) for r in radii]
    gaps = np.array([np.abs(b.values - a.values).max() for a, b in zip(resc, resc[1:])])
    scale = max(np.abs(resc[-1].values).max(), 1e-300)
    if np.all(gaps <= 1e-12 * scale):
        converged = True
    else:
        ratios = gaps[1:] / np.maximum(gaps[:-1], 1e-300)
        converged = bool(np.all(ratios < CAUCHY_RATIO))
    limit = resc[-1]
    support = classify_support(limit)
    fit = BlowupFit(resc, gaps, converged, support, limit)
    if not converged:
        fit.notes.append("Cauchy gap does not contract: no blowup limit at this order")
        if not force_fit:
            return fit
    if support.kind == "empty":
        fit.notes.append("limit vanishes on the grid")
        return fit

    pts = limit.points
    mask = support.contains(pts)
    fit.family = {"full": "full-plane", "half-space": "half-space"}.get(support.kind, "sector")
    B = _zzbar_basis(pts[mask], order)
    per_radius = np.array([np.linalg.lstsq(B, rs.values[mask], rcond=None)[0] for rs in resc])
    final = per_radius[-1]
    fit.final_coefficients = final
    fit.fit_residual = float(np.abs(B @ final - limit.values[mask]).max() / scale)
    if converged:
        # the rescalings approach the limit at rate O(r): extrapolate each coefficient to r = 0
        k = min(3, len(radii))
        coef = np.array([np.polyfit(radii[-k:], per_radius[-k:, j], 1)[1] for j in range(order + 1)])
    else:
        coef = final
    fit.coefficients = coef
    fit.harmonic = HarmonicPolynomial2D(order, complex(coef[order]), complex(coef[0]))
    if order >= 2:
        # Delta = 4 d_z d_zbar maps z^j zbar^(d-j) to 4 j (d-j) z^(j-1) zbar^(d-j-1)
        fit.H_fit = np.array([4 * j * (order - j) * coef[j] for j in range(1, order)])
    return fit


# ---------------------------------------------------------------------------
# Non-degeneracy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NondegeneracyResult:
    c_eps: float | None
    slope: float | None
    passed: bool
    radii: Array
    min_ratios: Array
    reason: str = ""


def nondegeneracy_check(u, x0, order: float, eps: float, radii=None, n_dir: int = 48,
                        support_tol: float = 1e-12) -> NondegeneracyResult:
    """min over sampled x in supp(u) of sup_{B_{eps|x|}(x)} |u| / |x - x0|^order.

    Sample points lie on circles |x - x0| = s (default 16 radii from 1/2 to
    1/64); each local ball is sampled on a polar grid aligned with x - x0.
    Fails when the per-radius minimum decays as |x| -> 0 (log-log slope
    against log(1/|x|) below -0.1) or when the support is empty.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    x0 = np.asarray(x0, dtype=float)
    radii = np.geomspace(0.5, 1 / 64, 16) if radii is None else np.asarray(radii, dtype=float)
    dirs = 2 * math.pi * np.arange(n_dir) / n_dir
    loc_r = np.linspace(0, 1, 9)[1:]
    loc_t = 2 * math.pi * np.arange(16) / 16
    LR, LT = np.meshgrid(loc_r, loc_t, indexing="ij")
    mins = []
    peak = 0.0
    for s in radii:
        e = np.c_[np.cos(dirs), np.sin(dirs)]
        xs = x0 + s * e
        vals_x = np.abs(np.asarray(u(xs)))
        in_supp = vals_x > 0
        best = np.full(len(xs), np.nan)
        for k in np.flatnonzero(in_supp):
            # polar grid about x_k, angle 0 along x_k - x0
            ang = LT + dirs[k]
            loc = xs[k] + eps * s * np.c_[(LR * np.cos(ang)).ravel(), (LR * np.sin(ang)).ravel()]
            best[k] = max(np.nanmax(np.abs(np.asarray(u(loc)))), vals_x[k])
        peak = max(peak, np.nanmax(best) if np.any(in_supp) else 0.0)
        ratio = best / s ** order
        mins.append(np.nanmin(ratio) if np.any(in_supp) else np.nan)
    mins = np.array(mins)
    ok = np.isfinite(mins)
    if not ok.any() or peak <= support_tol:
        return NondegeneracyResult(None, None, False, radii, mins, reason="empty support")
    c_eps = float(np.nanmin(mins))
    slope = float(np.polyfit(np.log(1 / radii[ok]), np.log(np.maximum(mins[ok], 1e-300)), 1)[0])
    passed = c_eps > 0 and slope >= NONDEGENERACY_SLOPE
    return NondegeneracyResult(c_eps, slope, passed, radii, mins,
                               reason="" if passed else f"minimum ratio decays (slope {slope:.3g})")
