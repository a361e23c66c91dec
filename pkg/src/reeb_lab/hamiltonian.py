"""Radial Hamiltonian profiles and their action calculus.

A profile is a function h(r): constant c0 <= 0 on (0, 1], strictly convex on
[1, r_max], linear of slope a beyond.  Orbit levels solve h'(r) = T for a
period T; the radial action is A_h(r) = r h'(r) - h(r) and the period-to-
action transform is a_H(T) = A_h(r(T)).  Everything downstream (transfer
maps, energy floors, trace validation, the orbit-system audit constants)
is built from these two functions.

Three closed-form families (quadratic, cubic, exponential) are provided for
exact oracles, plus a monotone-convex spline with piecewise-linear h''.
Scaling k H is handled by explicit k arguments using A_{k h} = k A_h and
a_{k H}(T) = k a_H(T / k).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ActionOutOfRange,
    BadGeometry,
    ConvexityViolation,
    EnergyAboveThreshold,
    JoinDiscontinuity,
    MalformedTrace,
    NotDominated,
    PeriodOutOfRange,
    SlopeMismatch,
    UncertifiedRegion,
)

GRID_POINTS = 4096


@dataclass(frozen=True)
class RadialProfile:
    """Base class; concrete families implement the _piece_* methods on [1, r_max]."""

    slope: float
    r_max: float
    c0: float = 0.0
    h_triple_nonneg_up_to: float = field(default=0.0, compare=False)

    @property
    def admissible(self) -> bool:
        return self.c0 < 0.0

    @property
    def c(self) -> float:
        """Linear-piece offset: h(r) = slope * r - c for r >= r_max; equals max A_h."""
        return self.action(self.r_max)

    # -- piece implementations (x = r - 1 in [0, r_max - 1]) -----------------

    def _piece_h(self, x):
        raise NotImplementedError

    def _piece_dh(self, x):
        raise NotImplementedError

    def _piece_d2h(self, x):
        raise NotImplementedError

    def _piece_d3h(self, x):
        raise NotImplementedError

    def _piece_dh_inv(self, T):
        raise NotImplementedError

    # -- assembled profile ----------------------------------------------------

    def h(self, r):
        r = np.asarray(r, dtype=float)
        w = self.r_max - 1.0
        x = np.clip(r - 1.0, 0.0, w)
        core = self.c0 + self._piece_h(x)
        tail = self._piece_h(w) + self.slope * (r - self.r_max)
        out = np.where(r >= self.r_max, self.c0 + tail, core)
        return out if out.ndim else float(out)

    def dh(self, r):
        r = np.asarray(r, dtype=float)
        w = self.r_max - 1.0
        x = np.clip(r - 1.0, 0.0, w)
        out = np.where(r >= self.r_max, self.slope,
                       np.where(r <= 1.0, 0.0, self._piece_dh(x)))
        return out if out.ndim else float(out)

    def d2h(self, r):
        r = np.asarray(r, dtype=float)
        w = self.r_max - 1.0
        x = np.clip(r - 1.0, 0.0, w)
        inside = (r > 1.0) & (r < self.r_max)
        out = np.where(inside, self._piece_d2h(x), 0.0)
        return out if out.ndim else float(out)

    def d3h(self, r):
        r = np.asarray(r, dtype=float)
        w = self.r_max - 1.0
        x = np.clip(r - 1.0, 0.0, w)
        inside = (r > 1.0) & (r < self.r_max)
        out = np.where(inside, self._piece_d3h(x), 0.0)
        return out if out.ndim else float(out)

    def d2h_shell(self, r):
        """Shell-piece h'' with one-sided boundary values; for bound constants
        that must dominate the supremum over the closed shell."""
        w = self.r_max - 1.0
        x = np.clip(np.asarray(r, dtype=float) - 1.0, 0.0, w)
        out = self._piece_d2h(x)
        return out if np.ndim(out) else float(out)

    def dh_inv(self, T):
        """Level r in [1, r_max] with h'(r) = T; exact for closed forms."""
        T = np.asarray(T, dtype=float)
        if np.any(T < -1e-12) or np.any(T > self.slope * (1 + 1e-12)):
            raise PeriodOutOfRange(
                f"period outside [0, {self.slope}]: {float(np.max(T)):.6g}"
            )
        out = np.clip(self._piece_dh_inv(np.clip(T, 0.0, self.slope)) + 1.0,
                      1.0, self.r_max)
        return out if out.ndim else float(out)

    def action(self, r, k: float = 1.0):
        """Radial action k * A_h(r) = r (k h)'(r) - k h(r); constant beyond r_max."""
        r = np.asarray(r, dtype=float)
        rr = np.minimum(r, self.r_max)
        out = k * (rr * self.dh(rr) - self.h(rr))
        return out if out.ndim else float(out)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticProfile(RadialProfile):
    """h = c0 + a (r-1)^2 / (2 (r_max - 1)) on the shell; h''' = 0."""

    def __post_init__(self):
        object.__setattr__(self, "h_triple_nonneg_up_to", self.r_max)

    @property
    def _w(self):
        return self.r_max - 1.0

    def _piece_h(self, x):
        return self.slope * x * x / (2.0 * self._w)

    def _piece_dh(self, x):
        return self.slope * x / self._w

    def _piece_d2h(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.slope / self._w)

    def _piece_d3h(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def _piece_dh_inv(self, T):
        return np.asarray(T, dtype=float) * self._w / self.slope

    def to_json(self):
        return {"family": "quadratic", "slope": self.slope,
                "r_max": self.r_max, "c0": self.c0}


@dataclass(frozen=True)
class CubicProfile(RadialProfile):
    """h' = (1-theta) a x / w + theta a x^2 / w^2; h''' = 2 theta a / w^2 > 0."""

    theta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ConvexityViolation(1.0, self.theta)
        object.__setattr__(self, "h_triple_nonneg_up_to", self.r_max)

    @property
    def _w(self):
        return self.r_max - 1.0

    def _piece_h(self, x):
        a, w, th = self.slope, self._w, self.theta
        return (1 - th) * a * x ** 2 / (2 * w) + th * a * x ** 3 / (3 * w * w)

    def _piece_dh(self, x):
        a, w, th = self.slope, self._w, self.theta
        return (1 - th) * a * x / w + th * a * x ** 2 / (w * w)

    def _piece_d2h(self, x):
        a, w, th = self.slope, self._w, self.theta
        return (1 - th) * a / w + 2 * th * a * np.asarray(x, dtype=float) / (w * w)

    def _piece_d3h(self, x):
        a, w, th = self.slope, self._w, self.theta
        return np.full_like(np.asarray(x, dtype=float), 2 * th * a / (w * w))

    def _piece_dh_inv(self, T):
        a, w, th = self.slope, self._w, self.theta
        disc = np.sqrt((1 - th) ** 2 + 4 * th * np.asarray(T, dtype=float) / a)
        return w * (disc - (1 - th)) / (2 * th)

    def to_json(self):
        return {"family": "cubic", "slope": self.slope, "r_max": self.r_max,
                "c0": self.c0, "theta": self.theta}


@dataclass(frozen=True)
class ExpProfile(RadialProfile):
    """h' = a (e^{beta x} - 1) / (e^{beta w} - 1); all higher derivatives > 0."""

    beta: float = 2.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ConvexityViolation(1.0, self.beta)
        object.__setattr__(self, "h_triple_nonneg_up_to", self.r_max)

    @property
    def _den(self):
        return math.expm1(self.beta * (self.r_max - 1.0))

    def _piece_h(self, x):
        a, b = self.slope, self.beta
        x = np.asarray(x, dtype=float)
        return a * (np.expm1(b * x) / b - x) / self._den

    def _piece_dh(self, x):
        return self.slope * np.expm1(self.beta * np.asarray(x, dtype=float)) / self._den

    def _piece_d2h(self, x):
        a, b = self.slope, self.beta
        return a * b * np.exp(b * np.asarray(x, dtype=float)) / self._den

    def _piece_d3h(self, x):
        a, b = self.slope, self.beta
        return a * b * b * np.exp(b * np.asarray(x, dtype=float)) / self._den

    def _piece_dh_inv(self, T):
        return np.log1p(np.asarray(T, dtype=float) * self._den / self.slope) / self.beta

    def to_json(self):
        return {"family": "exp", "slope": self.slope, "r_max": self.r_max,
                "c0": self.c0, "beta": self.beta}


@dataclass(frozen=True)
class SplineProfile(RadialProfile):
    """Monotone-convex profile from piecewise-linear h'' knot values >= 0.

    knots[i] is h'' at r = 1 + i * w / (len(knots) - 1); h' and h are exact
    piecewise polynomials.  The slope is whatever the knots integrate to.
    """

    knots: tuple = ()

    def __post_init__(self):
        if len(self.knots) < 2:
            raise ConvexityViolation(1.0, -1.0)
        knots = tuple(float(v) for v in self.knots)
        object.__setattr__(self, "knots", knots)
        w = self.r_max - 1.0
        n = len(knots) - 1
        dx = w / n
        # integrate h'' -> h' and h' -> h at the knot positions
        dh = [0.0]
        for i in range(n):
            dh.append(dh[-1] + 0.5 * (knots[i] + knots[i + 1]) * dx)
        hh = [0.0]
        for i in range(n):
            # exact integral of the quadratic h' over the piece
            v0, v1 = knots[i], knots[i + 1]
            hh.append(hh[-1] + dh[i] * dx + 0.5 * v0 * dx * dx + (v1 - v0) * dx * dx / 6.0)
        object.__setattr__(self, "_dh_knots", tuple(dh))
        object.__setattr__(self, "_h_knots", tuple(hh))
        object.__setattr__(self, "_dx", dx)
        computed = dh[-1]
        if abs(computed - self.slope) > 1e-9 * max(1.0, abs(self.slope)):
            raise SlopeMismatch(
                f"knots integrate to slope {computed:.9g}, profile declares {self.slope:.9g}"
            )
        # certified h''' >= 0 region: maximal nondecreasing run of knots from r = 1
        r0 = self.r_max
        for i in range(n):
            if knots[i + 1] < knots[i] - 1e-15:
                r0 = 1.0 + i * dx
                break
        object.__setattr__(self, "h_triple_nonneg_up_to", r0)

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip((x / self._dx).astype(int), 0, len(self.knots) - 2)
        return i, x - i * self._dx

    def _piece_d2h(self, x):
        i, t = self._locate(x)
        k = np.asarray(self.knots)
        return k[i] + (k[i + 1] - k[i]) * t / self._dx

    def _piece_d3h(self, x):
        i, _ = self._locate(x)
        k = np.asarray(self.knots)
        return (k[i + 1] - k[i]) / self._dx

    def _piece_dh(self, x):
        i, t = self._locate(x)
        k = np.asarray(self.knots)
        dh = np.asarray(self._dh_knots)
        return dh[i] + k[i] * t + (k[i + 1] - k[i]) * t * t / (2 * self._dx)

    def _piece_h(self, x):
        i, t = self._locate(x)
        k = np.asarray(self.knots)
        dh = np.asarray(self._dh_knots)
        hh = np.asarray(self._h_knots)
        return hh[i] + dh[i] * t + 0.5 * k[i] * t * t + (k[i + 1] - k[i]) * t ** 3 / (6 * self._dx)

    def _piece_dh_inv(self, T):
        # bracketed bisection on the monotone h', then one Newton polish
        scalar = np.ndim(T) == 0
        T = np.atleast_1d(np.asarray(T, dtype=float))
        w = self.r_max - 1.0
        out = np.empty_like(T)
        for j, target in enumerate(T):
            lo, hi = 0.0, w
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                if self._piece_dh(mid) < target:
                    lo = mid
                else:
                    hi = mid
            x = 0.5 * (lo + hi)
            d2 = float(self._piece_d2h(x))
            if d2 > 0:
                x = float(np.clip(x - (float(self._piece_dh(x)) - target) / d2, 0.0, w))
            out[j] = x
        return out[0] if scalar else out

    def to_json(self):
        return {"family": "spline", "slope": self.slope, "r_max": self.r_max,
                "c0": self.c0, "knots": list(self.knots)}


_FAMILIES = {
    "quadratic": QuadraticProfile,
    "cubic": CubicProfile,
    "exp": ExpProfile,
    "spline": SplineProfile,
}


def spline_slope(knots: Sequence[float], r_max: float) -> float:
    """Slope a spline profile with these h'' knots will have (trapezoid-exact)."""
    knots = [float(v) for v in knots]
    dx = (r_max - 1.0) / (len(knots) - 1)
    return sum(0.5 * (a + b) * dx for a, b in zip(knots, knots[1:]))


def build_profile(family: str = "quadratic", *, slope: float, r_max: float,
                  c0: float = 0.0, grid: int = GRID_POINTS, **params) -> RadialProfile:
    """Construct and certify a profile.

    All type invariants are checked numerically on a dense grid: h monotone,
    h'' >= 0 with h'' > 0 inside the shell, C^1 joins at r = 1 and r = r_max.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown profile family {family!r}")
    if slope <= 0:
        raise SlopeMismatch(f"slope must be positive, got {slope}")
    if r_max <= 1.0:
        raise BadGeometry(f"r_max must exceed 1, got {r_max}")
    if c0 > 0:
        raise JoinDiscontinuity(f"constant piece must be <= 0, got {c0}")
    profile = _FAMILIES[family](slope=slope, r_max=r_max, c0=c0, **params)
    _certify(profile, grid)
    return profile


def profile_from_json(obj: dict) -> RadialProfile:
    obj = dict(obj)
    family = obj.pop("family")
    slope = obj.pop("slope")
    r_max = obj.pop("r_max")
    c0 = obj.pop("c0", 0.0)
    if family == "spline":
        obj["knots"] = tuple(obj.get("knots", ()))
    return build_profile(family, slope=slope, r_max=r_max, c0=c0, **obj)


def _certify(profile: RadialProfile, grid: int):
    rs = np.linspace(1.0, profile.r_max, grid)
    d2 = profile.d2h(rs[1:-1])
    bad = np.where(d2 < -1e-12 * max(1.0, profile.slope))[0]
    if bad.size:
        i = bad[0] + 1
        raise ConvexityViolation(float(rs[i]), float(d2[bad[0]]))
    if np.any(d2 <= 0):
        i = int(np.argmin(d2)) + 1
        raise ConvexityViolation(float(rs[i]), float(np.min(d2)))
    dh = profile.dh(rs)
    if np.any(np.diff(dh) < -1e-12 * profile.slope):
        raise ConvexityViolation(float(rs[int(np.argmin(np.diff(dh)))]), float(np.min(np.diff(dh))))
    if abs(float(profile.dh(1.0))) > 1e-9 * profile.slope:
        raise JoinDiscontinuity(f"h'(1) = {float(profile.dh(1.0)):.3e} != 0")
    if abs(float(profile.dh(profile.r_max)) - profile.slope) > 1e-9 * profile.slope:
        raise SlopeMismatch(
            f"h'(r_max) = {float(profile.dh(profile.r_max)):.9g} != slope {profile.slope:.9g}"
        )
    if abs(float(profile.h(1.0)) - profile.c0) > 1e-9 * max(1.0, abs(profile.c0)):
        raise JoinDiscontinuity("h(1) does not meet the constant piece")
    gap = float(profile.h(profile.r_max + 1e-9) - profile.h(profile.r_max))
    if abs(gap - profile.slope * 1e-9) > 1e-9:
        raise JoinDiscontinuity("linear piece does not join continuously")


# ---------------------------------------------------------------------------
# action calculus
# ---------------------------------------------------------------------------

def radial_action(profile: RadialProfile, r, k: float = 1.0):
    """k * A_h(r); zero on (0, 1] for semi-admissible profiles."""
    return profile.action(r, k)


def action_from_period(profile: RadialProfile, T: float, k: float = 1.0) -> tuple:
    """(a_{kH}(T), r) where (k h)'(r) = T.  Requires 0 <= T <= k * slope."""
    if T < 0 or T > k * profile.slope * (1 + 1e-12):
        raise PeriodOutOfRange(f"T = {T:.6g} outside [0, {k * profile.slope:.6g}]")
    r = float(profile.dh_inv(min(T / k, profile.slope)))
    return float(profile.action(r, k)), r


def action_inverse(profile: RadialProfile, alpha: float, k: float = 1.0) -> float:
    """Period T with a_{kH}(T) = alpha; bisection + one Newton step (a' = r).

    Normalized for semi-admissible profiles, where a_{kH} maps [0, k slope]
    onto [0, k c].
    """
    if profile.admissible:
        raise ActionOutOfRange(
            "action inversion is normalized for semi-admissible profiles; "
            "shift the profile by its constant first"
        )
    top = k * profile.c
    if alpha < -1e-12 or alpha > top * (1 + 1e-12):
        raise ActionOutOfRange(f"action {alpha:.6g} outside [0, {top:.6g}]")
    alpha = min(max(alpha, 0.0), top)
    lo, hi = 0.0, k * profile.slope
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if action_from_period(profile, mid, k)[0] < alpha:
            lo = mid
        else:
            hi = mid
    T = 0.5 * (lo + hi)
    val, r = action_from_period(profile, T, k)
    if r > 1.0:
        T = min(max(T - (val - alpha) / r, 0.0), k * profile.slope)
    return T


@dataclass(frozen=True)
class DominationCertificate:
    dominated_margin: float      # min over r of H1 - H0 (>= 0 required)
    max_violation: float         # max over T of a_{H1}(T) - a_{H0}(T)
    ok: bool


def compare_action_functions(h0: RadialProfile, h1: RadialProfile,
                             grid: int = 2048, tol: float = 1e-9) -> DominationCertificate:
    """Certify a_{H1} <= a_{H0} on [0, slope(H0)] given H1 >= H0 pointwise."""
    if h1.slope < h0.slope - 1e-12:
        raise NotDominated(f"slope(H1) = {h1.slope} < slope(H0) = {h0.slope}")
    r_hi = max(h0.r_max, h1.r_max) + 1.0
    rs = np.linspace(1e-6, r_hi, grid)
    diff = h1.h(rs) - h0.h(rs)
    margin = float(np.min(diff))
    if margin < -tol * max(1.0, h0.slope):
        raise NotDominated(f"H1 < H0 by {margin:.3e} at r = {float(rs[np.argmin(diff)]):.6g}")
    Ts = np.linspace(0.0, h0.slope, grid)
    viol = max(
        float(action_from_period(h1, T)[0] - action_from_period(h0, T)[0]) for T in Ts
    )
    return DominationCertificate(dominated_margin=margin, max_violation=viol,
                                 ok=viol <= tol * max(1.0, h0.c))


@dataclass(frozen=True)
class TransferValues:
    taus: np.ndarray
    values: np.ndarray
    lower_slack: float    # min over grid of f(tau) - (tau - lam * h(r_max))
    upper_slack: float    # min over grid of tau - f(tau)


def transfer_map(profile: RadialProfile, k: float, lam: float,
                 taus: Sequence[float], tol: float = 1e-9) -> TransferValues:
    """f = a_{(k+lam)H} o a_{kH}^{-1} on the given action grid.

    Asserts the sandwich tau - lam * h(r_max) <= f(tau) <= tau pointwise and
    monotonicity along the grid.
    """
    if k < 1 or lam <= 0:
        raise ValueError("need k >= 1 and lam > 0")
    if profile.admissible:
        raise ActionOutOfRange("the transfer sandwich is stated for semi-admissible profiles")
    taus = np.asarray(list(taus), dtype=float)
    top = k * profile.c
    if np.any(taus < -1e-12) or np.any(taus > top * (1 + 1e-9)):
        raise ActionOutOfRange(f"tau grid escapes [0, {top:.6g}]")
    values = np.empty_like(taus)
    for i, tau in enumerate(np.clip(taus, 0.0, top)):
        T = action_inverse(profile, float(tau), k)
        values[i] = action_from_period(profile, T, k + lam)[0]
    h_top = float(profile.h(profile.r_max))
    upper = float(np.min(taus - values))
    lower = float(np.min(values - (taus - lam * h_top)))
    scale = max(1.0, top)
    if upper < -tol * scale or lower < -tol * scale:
        raise AssertionError(
            f"transfer sandwich violated: upper slack {upper:.3e}, lower slack {lower:.3e}"
        )
    order = np.argsort(taus)
    if np.any(np.diff(values[order]) < -tol * scale):
        raise AssertionError("transfer map is not monotone on the grid")
    return TransferValues(taus=taus, values=values, lower_slack=lower, upper_slack=upper)


def homotopy_action_derivative(profile: RadialProfile, k: float, lam: float,
                               s: float, T: float) -> float:
    """d/ds of a_{F_s}(T) for F_s = (k + s lam) H; equals -lam * h(r(s)).

    Always in [-lam * h(r_max), 0] for semi-admissible profiles.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s = {s} outside [0, 1]")
    if profile.admissible:
        raise PeriodOutOfRange("the derivative identity is normalized for h(1) = 0")
    ks = k + s * lam
    if T < 0 or T > ks * profile.slope * (1 + 1e-12):
        raise PeriodOutOfRange(f"T = {T:.6g} outside the domain of a_F at s = {s}")
    r = float(profile.dh_inv(min(T / ks, profile.slope)))
    return -lam * float(profile.h(r))


def check_action_ratio_monotone(profile: RadialProfile, r0: float,
                                grid: int = GRID_POINTS) -> bool:
    """True iff A_h(r)/r is nondecreasing on [1, r0].

    Requires a certified h''' >= 0 region covering [1, r0]; with that
    hypothesis a False return signals a build error, not a profile property.
    """
    if r0 > profile.h_triple_nonneg_up_to + 1e-12:
        raise UncertifiedRegion(
            f"h''' >= 0 certified only up to {profile.h_triple_nonneg_up_to:.6g} < {r0:.6g}"
        )
    if r0 <= 1.0 or r0 > profile.r_max + 1e-12:
        raise BadGeometry(f"r0 = {r0} outside (1, r_max]")
    rs = np.linspace(1.0, r0, grid)
    ratio = profile.action(rs) / rs
    return bool(np.all(np.diff(ratio) >= -1e-12 * max(1.0, profile.c)))


@dataclass(frozen=True)
class LevelBound:
    """Curried lower-bound evaluator r_minus -> r_minus - defect."""

    defect: float

    def __call__(self, r_minus: float) -> float:
        return r_minus - self.defect


def min_level_bound(profile: RadialProfile, r_plus: float, energy: float,
                    c_prime: float = 1.0, threshold: float = 1.0) -> LevelBound:
    """Lower bound on the minimum level of a low-energy cylinder.

    defect = sqrt(4 c') * r_plus^{3/4} * E^{5/8} / sqrt(A_h(r_plus)); the
    constants c' (pointwise gradient bound) and the energy threshold are
    configuration, not derivable at this level.
    """
    if energy < 0:
        raise BadGeometry("negative energy")
    if energy > threshold:
        raise EnergyAboveThreshold(f"E = {energy:.6g} > threshold {threshold:.6g}")
    if not (1.0 < r_plus <= profile.r_max + 1e-12):
        raise BadGeometry(f"r_plus = {r_plus} outside (1, r_max]")
    A = float(profile.action(r_plus))
    if A <= 0:
        raise BadGeometry(f"A_h(r_plus) = {A:.3e} <= 0")
    defect = math.sqrt(4.0 * c_prime) * r_plus ** 0.75 * energy ** 0.625 / math.sqrt(A)
    return LevelBound(defect=defect)


def crossing_energy_floor(profile: RadialProfile, r_star: float, delta: float,
                          eta: float, tau0: float, c_gronwall: float,
                          c_prime: float) -> float:
    """[eta h'(r_star - delta) e^{-C tau0} / C']^4: the uniform energy floor.

    Strictly positive; rejects geometry with r_star - delta <= 1 where h'
    vanishes and the floor degenerates.
    """
    if min(eta, tau0, c_gronwall, c_prime) <= 0 or delta <= 0:
        raise BadGeometry("all constants must be positive")
    if r_star - delta <= 1.0:
        raise BadGeometry(f"r_star - delta = {r_star - delta:.6g} <= 1")
    if r_star + delta > profile.r_max:
        raise BadGeometry("shell [r_star - delta, r_star + delta] escapes the profile")
    base = eta * float(profile.dh(r_star - delta)) * math.exp(-c_gronwall * tau0) / c_prime
    return base ** 4


# ---------------------------------------------------------------------------
# cylinder traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderTrace:
    """Sampled (s, t) -> r data with declared asymptotic levels."""

    s_grid: np.ndarray
    t_grid: np.ndarray
    r_values: np.ndarray      # shape (len(s_grid), len(t_grid))
    r_plus: float
    r_minus: float

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        t = np.asarray(self.t_grid, dtype=float)
        r = np.asarray(self.r_values, dtype=float)
        if r.shape != (s.size, t.size):
            raise MalformedTrace(f"r grid {r.shape} != ({s.size}, {t.size})")
        if s.size < 3 or t.size < 2:
            raise MalformedTrace("need at least 3 s-samples and 2 t-samples")
        if np.any(np.diff(s) <= 0) or np.any(np.diff(t) <= 0):
            raise MalformedTrace("grids must be strictly increasing")
        if not (np.all(np.isfinite(r)) and np.all(r > 0)):
            raise MalformedTrace("r values must be finite and positive")
        if self.r_plus < self.r_minus:
            raise MalformedTrace("r_plus < r_minus")
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "r_values", r)

    @classmethod
    def from_csv(cls, text: str, r_plus: float, r_minus: float) -> "CylinderTrace":
        rows = list(csv.reader(io.StringIO(text.strip())))
        if rows and rows[0][:3] == ["s", "t", "r"]:
            rows = rows[1:]
        data = {}
        for row in rows:
            if len(row) != 3:
                raise MalformedTrace(f"bad row {row}")
            s, t, r = (float(v) for v in row)
            data.setdefault(s, {})[t] = r
        s_grid = sorted(data)
        t_grid = sorted(data[s_grid[0]])
        try:
            r = np.array([[data[s][t] for t in t_grid] for s in s_grid])
        except KeyError as exc:
            raise MalformedTrace(f"ragged grid: missing {exc}") from exc
        return cls(np.array(s_grid), np.array(t_grid), r, r_plus, r_minus)


@dataclass(frozen=True)
class TraceReport:
    max_principle_ok: bool
    monotonicity_ok: bool          # every slice rises to at least r_minus
    average_inequality_ok: bool    # discrete d/ds of the t-average of r
    time_below_ok: bool            # mu(s, rho) * rho <= r_plus E / A(r_plus)
    details: dict

    @property
    def ok(self) -> bool:
        return (self.max_principle_ok and self.monotonicity_ok
                and self.average_inequality_ok and self.time_below_ok)

    def to_json(self) -> dict:
        return {
            "max_principle_ok": self.max_principle_ok,
            "monotonicity_ok": self.monotonicity_ok,
            "average_inequality_ok": self.average_inequality_ok,
            "time_below_ok": self.time_below_ok,
            "ok": self.ok,
            "details": self.details,
        }


def check_cylinder_trace(trace: CylinderTrace, profile: RadialProfile, k: float,
                         tol: float = 1e-6) -> TraceReport:
    """Validate sampled cylinder data against the level and energy inequalities.

    This is a data validator, not a solver: all derivatives are discrete and
    the tolerance absorbs the finite differencing error of smooth traces.
    """
    s, t, r = trace.s_grid, trace.t_grid, trace.r_values
    span = t[-1] - t[0]
    if abs(span - k) > 1e-9 * max(1.0, k):
        raise MalformedTrace(f"t grid spans {span:.6g}, expected the iteration order {k}")
    slice_max = r.max(axis=1)
    scale = max(1.0, trace.r_plus)
    max_ok = bool(np.all(slice_max <= trace.r_plus + tol * scale))
    mono_ok = bool(np.all(slice_max >= trace.r_minus - tol * scale))

    A_minus = float(profile.action(trace.r_minus))
    avg = np.trapezoid(r, t, axis=1)
    rhs = -k * A_minus + np.trapezoid(profile.action(r), t, axis=1)
    davg = (avg[2:] - avg[:-2]) / (s[2:] - s[:-2])
    avg_ok = bool(np.all(davg <= rhs[1:-1] + tol * max(1.0, k)))

    A_plus = float(profile.action(trace.r_plus))
    energy = k * (A_plus - A_minus)
    budget = trace.r_plus * energy / A_plus if A_plus > 0 else math.inf
    below_ok = True
    worst = 0.0
    for rho in np.linspace(0.0, trace.r_plus - float(r.min()), 17)[1:]:
        level = trace.r_plus - rho
        frac = (r <= level).mean(axis=1)          # fraction of the t-circle below
        mu = frac * k
        excess = float(np.max(mu * rho)) - budget
        worst = max(worst, excess)
        if excess > tol * max(1.0, budget):
            below_ok = False
    return TraceReport(
        max_principle_ok=max_ok,
        monotonicity_ok=mono_ok,
        average_inequality_ok=avg_ok,
        time_below_ok=below_ok,
        details={
            "energy": energy,
            "time_below_worst_excess": worst,
            "max_level": float(slice_max.max()),
            "min_level": float(r.min()),
        },
    )


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionTables:
    r_rows: list     # (r, h, h', h'', A_h)
    t_rows: list     # (T, a_H(T), r(T))
    markers: list    # spectrum values covered by [0, slope], if provided

    def to_csv(self) -> str:
        """One CSV, two row kinds: level rows (r, h, h', h'', A) and period
        rows (T, action, solved level)."""
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(["table", "x", "h", "dh", "d2h", "A", "level"])
        for row in self.r_rows:
            w.writerow(["r", *(f"{v:.12g}" for v in row), ""])
        for T, val, r in self.t_rows:
            w.writerow(["T", f"{T:.12g}", "", "", "", f"{val:.12g}", f"{r:.12g}"])
        return out.getvalue()


def action_tables(profile: RadialProfile, grid: int = 256,
                  spectrum: Optional[Sequence[float]] = None) -> ActionTables:
    rs = np.linspace(1.0, profile.r_max, grid)
    r_rows = [
        (float(r), float(profile.h(r)), float(profile.dh(r)),
         float(profile.d2h(r)), float(profile.action(r)))
        for r in rs
    ]
    Ts = np.linspace(0.0, profile.slope, grid)
    t_rows = []
    for T in Ts:
        val, r = action_from_period(profile, float(T))
        t_rows.append((float(T), val, r))
    markers = [float(v) for v in (spectrum or []) if 0.0 <= v <= profile.slope]
    return ActionTables(r_rows=r_rows, t_rows=t_rows, markers=markers)
