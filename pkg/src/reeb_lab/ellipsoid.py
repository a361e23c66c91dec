"""Closed-form ellipsoid Reeb models.

Normalization: the ellipsoid with weights a_1 <= ... <= a_n has simple closed
orbits gamma_j in the coordinate planes with periods T_j = pi * a_j, and the
linearized return map of gamma_j rotates the i-th transverse plane by
2 pi a_j / a_i.  Every serialized artifact carries this convention tag, since
other normalizations are in circulation.

Iterate indices of gamma_j come out as
mu(gamma_j^k) = (n - 1) + 2 * sum_i floor(k a_j / a_i)  (the i = j term gives 2k);
these closed forms are validated against the sampled-path index oracle in the
test suite rather than asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DegenerateEllipsoid
from .indices import IterationProfile, check_dynamical_convexity, index_triple

CONVENTION = "periods=pi*a_j; return-map angles 2*pi*a_j/a_i"

#: continued-fraction rationality detection: stop when the remainder drops
#: below this, give up when the denominator exceeds the cap.
_CF_REMAINDER = 1e-10
_CF_DENOMINATOR_CAP = 10 ** 6


def detect_rational(x: float, remainder_tol: float = _CF_REMAINDER,
                    max_denominator: int = _CF_DENOMINATOR_CAP):
    """Continued-fraction expansion of x; returns (Fraction, capped_flag).

    The Fraction is None when no expansion with denominator below the cap
    terminates; capped_flag marks that the cap (not termination) stopped us,
    in which case "irrational" is a policy verdict, not a certainty.
    """
    if x <= 0:
        raise ValueError(f"ratio must be positive, got {x}")
    coeffs = []
    y = x
    for _ in range(64):
        a = math.floor(y)
        coeffs.append(a)
        rem = y - a
        frac = _from_cf(coeffs)
        if frac.denominator > max_denominator:
            return None, True
        if rem < remainder_tol * max(1.0, abs(y)):
            return frac, False
        y = 1.0 / rem
    return None, True


def _from_cf(coeffs) -> Fraction:
    value = Fraction(coeffs[-1])
    for a in reversed(coeffs[:-1]):
        value = a + (1 / value if value else Fraction(0))
    return value


@dataclass(frozen=True)
class EllipsoidSpec:
    """Sorted positive weights; ratio rationality decided by continued fractions."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if not w or any(v <= 0 for v in w):
            raise ValueError(f"weights must be positive, got {w}")
        if any(b < a for a, b in zip(w, w[1:])):
            raise ValueError("weights must be sorted ascending")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.weights)

    def ratio_rational(self, j: int, i: int) -> bool:
        """Is a_j / a_i rational under the detection policy? 1-based indices."""
        frac, _capped = detect_rational(self.weights[j - 1] / self.weights[i - 1])
        return frac is not None

    @property
    def irrational(self) -> bool:
        """True iff every off-diagonal ratio is (policy-)irrational."""
        return not any(
            self.ratio_rational(j, i)
            for j in range(1, self.n + 1) for i in range(1, self.n + 1) if i != j
        )

    @property
    def rationality_capped(self) -> bool:
        """True when some ratio exhausted the denominator cap (verdict is soft)."""
        for j in range(self.n):
            for i in range(self.n):
                if i == j:
                    continue
                frac, capped = detect_rational(self.weights[j] / self.weights[i])
                if frac is None and capped:
                    return True
        return False

    def to_json(self) -> dict:
        return {"weights": list(self.weights), "convention": CONVENTION}

    @classmethod
    def from_json(cls, obj: dict) -> "EllipsoidSpec":
        return cls(weights=tuple(obj["weights"]))


def ellipsoid_periods(spec: EllipsoidSpec) -> list:
    return [math.pi * a for a in spec.weights]


def ellipsoid_profile(spec: EllipsoidSpec, j: int) -> IterationProfile:
    """Iteration profile of the j-th simple orbit (1-based).

    The orbit's own plane contributes a loop of index 2 per iteration; each
    transverse plane an elliptic rotation number a_j / a_i.  Rational ratios
    make iterate indices degenerate and are rejected.
    """
    if not 1 <= j <= spec.n:
        raise ValueError(f"orbit index {j} outside 1..{spec.n}")
    angles = []
    for i in range(1, spec.n + 1):
        if i == j:
            continue
        if spec.ratio_rational(j, i):
            raise DegenerateEllipsoid(
                f"ratio a_{j}/a_{i} = {spec.weights[j-1]/spec.weights[i-1]:.9g} is rational"
            )
        angles.append(spec.weights[j - 1] / spec.weights[i - 1])
    return IterationProfile(loop_index=2, elliptic=tuple(angles))


@dataclass(frozen=True)
class SpectrumEntry:
    value: float
    orbit: int      # 1-based orbit id
    multiple: int   # iteration order k


@dataclass(frozen=True)
class ActionSpectrum:
    entries: tuple
    t_max: float

    @property
    def values(self) -> list:
        return [e.value for e in self.entries]

    def to_csv_rows(self) -> list:
        return [(e.value, e.orbit, e.multiple) for e in self.entries]


def action_spectrum(spec: EllipsoidSpec, t_max: float) -> ActionSpectrum:
    """All orbit periods k * T_j in (0, t_max], sorted; ties ordered by (j, k)."""
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    entries = []
    for j, T in enumerate(ellipsoid_periods(spec), start=1):
        k = 1
        while k * T <= t_max:
            entries.append(SpectrumEntry(value=k * T, orbit=j, multiple=k))
            k += 1
    entries.sort(key=lambda e: (e.value, e.orbit, e.multiple))
    return ActionSpectrum(entries=tuple(entries), t_max=t_max)


def slope_valid(spec: EllipsoidSpec, slope: float, band: float = 1e-9) -> bool:
    """True iff the slope avoids the action spectrum within the guard band."""
    if slope <= 0:
        return False
    spectrum = action_spectrum(spec, slope * (1.0 + 2.0 * band) + band)
    return all(abs(slope - v) > band * max(1.0, slope) for v in spectrum.values)


@dataclass(frozen=True)
class ModelOrbit:
    period: float
    profile: IterationProfile
    nondegenerate: bool = True
    hyperbolic: bool = False
    locally_maximal: bool = False


@dataclass(frozen=True)
class PseudoRotationSeed:
    """The finitely many simple orbits of an irrational ellipsoid, packaged."""

    orbits: tuple
    n: int
    convexity: object
    convention: str = CONVENTION

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "convention": self.convention,
            "orbits": [
                {
                    "period": o.period,
                    "profile": o.profile.to_json(),
                    "nondegenerate": o.nondegenerate,
                    "hyperbolic": o.hyperbolic,
                    "locally_maximal": o.locally_maximal,
                }
                for o in self.orbits
            ],
            "convexity": self.convexity.to_json(),
        }


def pseudo_rotation_instance(spec: EllipsoidSpec, k_max: int = 100,
                             locally_maximal: Optional[int] = None) -> PseudoRotationSeed:
    """Package the n simple orbits with profiles and the convexity report.

    Ellipsoids are dynamically convex; the report is asserted to pass.  Mark
    one orbit (1-based) locally maximal to seed a pseudo-rotation audit.
    """
    if not spec.irrational:
        raise DegenerateEllipsoid("some weight ratio is rational")
    n = spec.n
    periods = ellipsoid_periods(spec)
    orbits = []
    for j in range(1, n + 1):
        orbits.append(ModelOrbit(
            period=periods[j - 1],
            profile=ellipsoid_profile(spec, j),
            nondegenerate=True,
            locally_maximal=(locally_maximal == j),
        ))
    report = check_dynamical_convexity([(o.profile, k_max) for o in orbits], n)
    if not report.ok:
        raise AssertionError(f"ellipsoid failed dynamical convexity: {report.witnesses[:3]}")
    return PseudoRotationSeed(orbits=tuple(orbits), n=n, convexity=report)


def mean_index(spec: EllipsoidSpec, j: int) -> float:
    """2 * sum_i a_j / a_i; matches the profile's mean index exactly."""
    return 2.0 * sum(spec.weights[j - 1] / a for a in spec.weights)


def orbit_index(spec: EllipsoidSpec, j: int, k: int) -> int:
    """Closed-form mu(gamma_j^k) = n - 1 + 2 sum_i floor(k a_j / a_i)."""
    return index_triple(ellipsoid_profile(spec, j), k).mu_minus
