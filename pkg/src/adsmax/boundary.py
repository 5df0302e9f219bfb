"""Circle homeomorphisms and their lifted graphs in the asymptotic boundary.

A monotone degree-1 circle map f acts on the doubled-angle coordinate of the
first ruling family; its graph {(xi, f(xi))} lifts to the achronal curve

    theta(s) = (s + F(s))/2,   tau(s) = (F(s) - s)/2,

where F is a lift of f.  The identity lifts to the equator tau = 0, the
boundary of the reference plane.  Quasi-symmetry is probed by the distortion
of cross-ratio-2 quadruples, transported around the circle by Mobius maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import ive

from . import lorentz as L
from .constants import ACHRONAL_TOL

TWO_PI = 2 * np.pi


def cross_ratio(a, b, c, d):
    """cr(a,b;c,d) = ((a-c)(b-d))/((b-c)(a-d)) on RP^1, inf handled by limits."""
    vals = [a, b, c, d]
    if sum(np.isinf(v) for v in vals) > 1:
        raise ValueError("at most one argument may be infinite")
    if np.isinf(d):
        num, den = (a - c), (b - c)
    elif np.isinf(c):
        num, den = (b - d), (a - d)
    elif np.isinf(b):
        num, den = (a - c), (a - d)
    elif np.isinf(a):
        num, den = (b - d), (b - c)
    else:
        num = (a - c) * (b - d)
        den = (b - c) * (a - d)
    if den == 0 and num == 0:
        raise ValueError("undefined coincidence pattern")
    if den == 0:
        return np.inf
    return num / den


def angle_to_rp1(beta):
    """Affine RP^1 coordinate of a doubled angle: cot(beta/2), inf at beta=0."""
    beta = np.asarray(beta, dtype=float)
    s = np.sin(beta / 2)
    with np.errstate(divide="ignore"):
        out = np.where(s == 0.0, np.inf, np.cos(beta / 2) / np.where(s == 0, 1, s))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CircleHomeo:
    """Strictly increasing degree-1 circle map, monotone-cubic between knots.

    knots_x are angles in [0, 2pi), knots_y the lifted values (strictly
    increasing, winding +1).  Evaluation goes through a PCHIP interpolant on a
    periodically padded window, which preserves monotonicity.  The closed-form
    families attach an exact lift; the knots stay canonical (they are what a
    JSON round trip keeps), the exact evaluator just removes interpolation
    error where a formula exists.
    """

    knots_x: np.ndarray
    knots_y: np.ndarray
    exact_lift: object = None

    def __post_init__(self):
        x = np.asarray(self.knots_x, dtype=float)
        y = np.asarray(self.knots_y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 4:
            raise ValueError("need at least 4 matching knots")
        if np.any(np.diff(x) <= 0) or x[0] < 0 or x[-1] >= TWO_PI:
            raise ValueError("knot angles must be strictly increasing in [0, 2pi)")
        wrap = np.diff(np.concatenate([y, [y[0] + TWO_PI]]))
        if np.any(wrap <= 0):
            raise ValueError("knot values must be strictly increasing with winding 1")
        object.__setattr__(self, "knots_x", x)
        object.__setattr__(self, "knots_y", y)
        pad = 3
        xx = np.concatenate([x[-pad:] - TWO_PI, x, x[:pad] + TWO_PI])
        yy = np.concatenate([y[-pad:] - TWO_PI, y, y[:pad] + TWO_PI])
        object.__setattr__(self, "_interp", PchipInterpolator(xx, yy))

    @staticmethod
    def identity(n_knots: int = 16) -> "CircleHomeo":
        x = np.linspace(0, TWO_PI, n_knots, endpoint=False)
        return CircleHomeo(x, x.copy(), exact_lift=lambda v: np.asarray(v, float))

    @staticmethod
    def from_lift(F, n_knots: int = 256) -> "CircleHomeo":
        """Sample a lift F (monotone, F(x+2pi)=F(x)+2pi) at uniform knots."""
        x = np.linspace(0, TWO_PI, n_knots, endpoint=False)
        y = np.asarray(F(x), dtype=float).reshape(len(x))
        return CircleHomeo(x, y)

    def lift(self, x):
        """Monotone lift: F(x + 2pi) = F(x) + 2pi."""
        x = np.asarray(x, dtype=float)
        if self.exact_lift is not None:
            out = np.asarray(self.exact_lift(x), dtype=float)
            return out if out.ndim else float(out)
        k = np.floor(x / TWO_PI)
        out = self._interp(x - TWO_PI * k) + TWO_PI * k
        return out if out.ndim else float(out)

    def __call__(self, x):
        out = np.mod(self.lift(x), TWO_PI)
        return out if np.ndim(out) else float(out)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        out = self._interp.derivative()(np.mod(x, TWO_PI))
        return out if out.ndim else float(out)

    def is_identity(self, tol=1e-12) -> bool:
        return bool(np.abs(self.knots_y - self.knots_x).max() < tol)


def mobius_boundary(m: L.MobiusMap, n_knots: int = 256) -> CircleHomeo:
    """The circle map induced by a Mobius transformation on doubled angles."""
    x = np.linspace(0, TWO_PI, n_knots, endpoint=False)
    return CircleHomeo(x, m.apply_angle_lift(x), exact_lift=m.apply_angle_lift)


def step_family(kappa: float, n_knots: int = 256) -> CircleHomeo:
    """Deformation from the identity (kappa=0) to the standard 2-step graph.

    F(x) = x + kappa * sum_k c_k(a) sin(2kx)/k with c_k = I_k(a)/I_0(a),
    the cumulative of a two-spike von Mises density at x = 0 and pi; the
    sharpness a grows as kappa -> 1 and the graph limits onto four lightlike
    segments.  Strictly monotone for every kappa in [0, 1).
    """
    if not 0.0 <= kappa < 1.0:
        raise ValueError("kappa must be in [0, 1)")
    if kappa == 0.0:
        return CircleHomeo.identity(n_knots)
    a = 2.0 * (kappa / (1.0 - kappa)) ** 2
    k_max = max(8, int(np.sqrt(a) * 12) + 8)
    k = np.arange(1, k_max + 1)
    coeff = ive(k, a) / ive(0, a)
    coeff = coeff[coeff > 1e-17]
    k = k[: len(coeff)]

    def F(x):
        x = np.asarray(x, dtype=float)
        return x + kappa * (
            coeff / k * np.sin(2 * np.multiply.outer(x, k))
        ).sum(axis=-1)

    x = np.linspace(0, TWO_PI, n_knots, endpoint=False)
    return CircleHomeo(x, F(x), exact_lift=F)


def bump_family(amplitude: float, n_knots: int = 128) -> CircleHomeo:
    """F(x) = x + A sin x, a smooth monotone bump for |A| < 1."""
    if not abs(amplitude) < 1.0:
        raise ValueError("|amplitude| must be < 1")
    x = np.linspace(0, TWO_PI, n_knots, endpoint=False)
    return CircleHomeo(
        x,
        x + amplitude * np.sin(x),
        exact_lift=lambda v: np.asarray(v, float) + amplitude * np.sin(v),
    )


# ---------------------------------------------------------------------------
# lifted graphs

@dataclass(frozen=True)
class BoundaryCurve:
    """Closed achronal graph in the asymptotic boundary, sampled.

    theta has winding 1; adjacent samples satisfy |dtau| <= |dtheta| + tol.
    quadric holds the null vectors (cos th, sin th, cos ta, sin ta); xi/eta
    are the doubled-angle ruling coordinates.
    """

    theta: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        ta = np.asarray(self.tau, dtype=float)
        if th.ndim != 1 or th.shape != ta.shape or len(th) < 4:
            raise ValueError("need at least 4 samples")
        dth = np.diff(np.concatenate([th, [th[0] + TWO_PI]]))
        if np.any(dth <= 0) or abs(dth.sum() - TWO_PI) > 1e-9:
            raise ValueError("theta must be strictly increasing with winding 1")
        dta = np.diff(np.concatenate([ta, [ta[0]]]))
        if np.any(np.abs(dta) > np.abs(dth) + ACHRONAL_TOL):
            raise ValueError("curve has a timelike pair of adjacent samples")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "tau", ta)

    @property
    def quadric(self):
        return L.null_from_angles(self.theta, self.tau)

    @property
    def xi(self):
        return np.mod(self.theta - self.tau, TWO_PI)

    @property
    def eta(self):
        return np.mod(self.theta + self.tau, TWO_PI)

    def tau_of_theta(self, theta):
        """Linear interpolation of the graph tau(theta), periodic."""
        th = np.concatenate([self.theta, [self.theta[0] + TWO_PI]])
        ta = np.concatenate([self.tau, [self.tau[0]]])
        q = np.mod(np.asarray(theta, dtype=float) - th[0], TWO_PI) + th[0]
        out = np.interp(q, th, ta)
        return out if out.ndim else float(out)

    def resample(self, n: int) -> "BoundaryCurve":
        """Uniform-theta resampling of the graph.

        Monotone-cubic when the result stays achronal (smooth curves),
        falling back to linear interpolation, which always does.
        """
        pad = 3
        th = np.concatenate([
            self.theta[-pad:] - TWO_PI, self.theta, self.theta[:pad] + TWO_PI
        ])
        ta = np.concatenate([self.tau[-pad:], self.tau, self.tau[:pad]])
        q = np.linspace(0, TWO_PI, n, endpoint=False)
        qq = np.mod(q - th[0], TWO_PI) + th[0]
        try:
            return BoundaryCurve(q, PchipInterpolator(th, ta)(qq))
        except ValueError:
            return BoundaryCurve(q, self.tau_of_theta(q))

    def max_lightlike_run(self, tol: float = 1e-9) -> int:
        """Longest run of consecutive cells with |dtau/dtheta| >= 1 - tol.

        A run of two or more flags a genuine lightlike segment (a single
        cell can be an isolated touch of a smooth graph)."""
        dth = np.diff(np.concatenate([self.theta,
                                      [self.theta[0] + TWO_PI]]))
        dta = np.diff(np.concatenate([self.tau, [self.tau[0]]]))
        flag = np.abs(dta) >= (1.0 - tol) * dth
        if flag.all():
            return len(flag)
        best = run = 0
        for f in np.concatenate([flag, flag]):  # cyclic runs
            run = run + 1 if f else 0
            best = max(best, run)
        return min(best, len(flag))

    def is_planar(self, tol=1e-9) -> bool:
        """True when all samples lie on a totally geodesic plane (Mobius data)."""
        q = self.quadric
        _, s, _ = np.linalg.svd(q - q.mean(axis=0))
        return bool(s[-1] < tol * max(1.0, s[0]))

    def transform(self, g: L.Isometry3) -> "BoundaryCurve":
        """Image curve under an isometry, resorted by theta."""
        v = L.apply_isometry_null(g, self.quadric)
        th = np.arctan2(v[:, 1], v[:, 0])
        ta = np.arctan2(v[:, 3], v[:, 2])
        # re-anchor tau continuously along the curve (samples stay achronal)
        order = np.argsort(np.mod(th, TWO_PI))
        th = np.mod(th[order], TWO_PI)
        ta = ta[order]
        jump = np.round(np.diff(ta) / TWO_PI)
        ta[1:] -= TWO_PI * np.cumsum(jump)
        return canonical_curve(th, ta)


def canonical_curve(theta, tau) -> BoundaryCurve:
    """Build a curve on the canonical lift: mean tau in (-pi/2, pi/2].

    The projection of the boundary to the two ruling families is 2-to-1, so
    graphs lift in antipodal pairs (theta, tau) <-> (theta + pi, tau + pi);
    this picks one lift deterministically.
    """
    theta = np.asarray(theta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    tau = tau - TWO_PI * np.round(np.mean(tau) / TWO_PI)
    if abs(np.mean(tau)) > np.pi / 2:
        s = np.sign(np.mean(tau))
        theta = theta + np.pi
        tau = tau - s * np.pi
        k = theta >= TWO_PI
        order = np.concatenate([np.where(k)[0], np.where(~k)[0]])
        theta = np.where(k, theta - TWO_PI, theta)[order]
        tau = tau[order]
    return BoundaryCurve(theta, tau)


def lift_graph(f: CircleHomeo, n_samples: int = 512) -> BoundaryCurve:
    """Lift the graph of a monotone circle map to a nowhere-timelike curve."""
    s = np.linspace(0, TWO_PI, n_samples, endpoint=False)
    F = f.lift(s)
    return canonical_curve((s + F) / 2, (F - s) / 2)


def two_step_curve(n_samples: int = 512) -> BoundaryCurve:
    """The standard 2-step graph: four lightlike segments (sawtooth tau).

    Samples avoid the exact corners (cell midpoints), so projective-chart
    machinery stays finite.  This curve is the boundary of the flat maximal
    surface ("horosphere") and the kappa -> 1 limit of step_family.
    """
    th = (np.arange(n_samples) + 0.5) * TWO_PI / n_samples
    # tent: tau(theta) = dist(theta, pi Z), four lightlike segments joining
    # (0,0), (pi/2, pi/2), (pi, 0), (3pi/2, pi/2)
    tau = np.minimum(np.mod(th, np.pi), np.pi - np.mod(th, np.pi))
    return BoundaryCurve(th, tau)


# ---------------------------------------------------------------------------
# quasi-symmetry modulus

@dataclass(frozen=True)
class QuadrupleSampler:
    """Stratified cr=2 quadruples: Mobius transports of (-1, 0, 1, inf).

    n_angles rotations x n_scales boosts on a symmetric log ladder; optional
    extra random transports from a caller-provided seeded generator.
    """

    n_angles: int = 24
    n_scales: int = 9
    max_log_scale: float = 3.0
    n_random: int = 0
    seed: int = 0

    def maps(self):
        out = []
        for s in np.linspace(-self.max_log_scale, self.max_log_scale, self.n_scales):
            boost = L.MobiusMap(np.diag([np.exp(s / 2), np.exp(-s / 2)]))
            for a in np.linspace(0, np.pi, self.n_angles, endpoint=False):
                out.append(L.MobiusMap.rotation(a).compose(boost))
        if self.n_random:
            rng = np.random.default_rng(self.seed)
            out.extend(L.random_mobius(rng) for _ in range(self.n_random))
        return out


BASE_QUADRUPLE_ANGLES = 2 * np.arctan2(1.0, np.array([-1.0, 0.0, 1.0]))  # cot-coords
BASE_EXTRA = 0.0  # doubled angle of the RP^1 point at infinity


def qs_modulus(f: CircleHomeo, sampler: QuadrupleSampler | None = None) -> float:
    """Sampled quasi-symmetry modulus: sup over cr=2 quadruples of the
    symmetrized log-distortion max(d, 1/d), d = log cr(f(quad)) / log 2.

    Equals 1 for the identity and any Mobius map; finite sampling gives a
    lower bound of the true modulus.
    """
    sampler = sampler or QuadrupleSampler()
    base = np.concatenate([BASE_QUADRUPLE_ANGLES, [BASE_EXTRA]])
    worst = 1.0
    for g in sampler.maps():
        quad = g.apply_angle(base)
        image = f(quad)
        cr = cross_ratio(*[angle_to_rp1(b) for b in image])
        if not np.isfinite(cr) or cr <= 0:
            return np.inf
        d = abs(np.log(cr) / np.log(2.0))
        if d == 0.0:
            return np.inf
        worst = max(worst, d, 1.0 / d)
    return float(worst)
