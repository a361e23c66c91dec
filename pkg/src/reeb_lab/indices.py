"""Conley-Zehnder index calculus.

Two routes to the same integers live here.  ``cz_index_sampled`` computes the
index of a sampled path in Sp(2m) from the winding of the polar-rotation
angle, plane by plane.  ``index_triple`` evaluates the exact iterate formulas
for a block profile: each elliptic angle rho contributes 2*floor(k rho) + 1
(splitting into 2*k*rho +/- 1 when k rho is an integer), hyperbolic blocks
contribute k*h, loops contribute k*loop_index to every term, and a totally
degenerate factor contributes its iteration-stable block counts to the upper
and lower indices only.

Normalization: the flow of a small positive definite quadratic form on R^{2m}
has index m.  All indices are exact integers; the mean index is the only real
quantity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateEndpoint,
    DimensionMismatch,
    PathNotSplittable,
    SamplingTooCoarse,
)
from .symplectic import WilliamsonInvariants, standard_form

#: floats within this distance of an integer are treated as hitting it;
#: rotation numbers given as Fraction are tested exactly instead.
INTEGER_BAND = 1e-9


def _is_integer(x, band: float = INTEGER_BAND):
    """Return (hit, nearest_int) under the guard-band policy."""
    if isinstance(x, Fraction):
        return x.denominator == 1, int(x) if x.denominator == 1 else int(math.floor(x))
    n = round(float(x))
    return abs(float(x) - n) <= band, int(n)


@dataclass(frozen=True)
class IterationProfile:
    """Block decomposition of the end behavior of a symplectic path.

    elliptic entries are rotation numbers in full turns (Fraction for exact
    arithmetic, float otherwise); hyperbolic entries are the integer indices
    of the primitive path; loop_index is the even index of the loop factor;
    degenerate is the invariant data of a totally degenerate factor.
    """

    loop_index: int = 0
    elliptic: tuple = ()
    hyperbolic: tuple = ()
    degenerate: Optional[WilliamsonInvariants] = None

    def __post_init__(self):
        if self.loop_index % 2 != 0:
            raise ValueError(f"loop index must be even, got {self.loop_index}")
        object.__setattr__(self, "elliptic", tuple(self.elliptic))
        object.__setattr__(self, "hyperbolic", tuple(int(h) for h in self.hyperbolic))

    @property
    def dim_half(self) -> int:
        deg = self.degenerate.m if self.degenerate is not None else 0
        return len(self.elliptic) + len(self.hyperbolic) + deg

    def mean_index(self, k: int = 1) -> float:
        rho_sum = sum(float(r) for r in self.elliptic)
        return k * (self.loop_index + 2.0 * rho_sum + sum(self.hyperbolic))

    def nu_a(self, k: int = 1) -> int:
        """Half the algebraic multiplicity of eigenvalue 1 of the k-th iterate."""
        hits = sum(1 for rho in self.elliptic if _is_integer(_times(rho, k))[0])
        deg = self.degenerate.m if self.degenerate is not None else 0
        return hits + deg

    def is_degenerate(self, k: int = 1) -> bool:
        return self.nu_a(k) > 0

    def b_correction(self) -> int:
        """b_plus - b_minus of any iterate (stable under positive scaling)."""
        if self.degenerate is None:
            return 0
        return self.degenerate.b_plus - self.degenerate.b_minus

    def to_json(self) -> dict:
        def enc(r):
            return str(r) if isinstance(r, Fraction) else float(r)
        return {
            "loop_index": self.loop_index,
            "elliptic": [enc(r) for r in self.elliptic],
            "hyperbolic": list(self.hyperbolic),
            "degenerate": self.degenerate.to_json() if self.degenerate else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "IterationProfile":
        def dec(r):
            return Fraction(r) if isinstance(r, str) else float(r)
        deg = obj.get("degenerate")
        return cls(
            loop_index=int(obj.get("loop_index", 0)),
            elliptic=tuple(dec(r) for r in obj.get("elliptic", [])),
            hyperbolic=tuple(int(h) for h in obj.get("hyperbolic", [])),
            degenerate=WilliamsonInvariants.from_json(deg) if deg else None,
        )


def _times(rho, k: int):
    return rho * k if isinstance(rho, Fraction) else float(rho) * k


@dataclass(frozen=True)
class IndexTriple:
    mu_minus: int
    mu_plus: int
    mu_hat: float

    def __iter__(self):
        return iter((self.mu_minus, self.mu_plus, self.mu_hat))


def index_triple(profile: IterationProfile, k: int) -> IndexTriple:
    """Exact (mu_minus, mu_plus, mu_hat) of the k-th iterate of a profile."""
    if k < 1:
        raise ValueError(f"iteration order must be >= 1, got {k}")
    lo = hi = k * profile.loop_index
    for rho in profile.elliptic:
        t = _times(rho, k)
        hit, n = _is_integer(t)
        if hit:
            hi += 2 * n + 1
            lo += 2 * n - 1
        else:
            v = 2 * int(math.floor(t)) + 1
            hi += v
            lo += v
    for h in profile.hyperbolic:
        lo += k * h
        hi += k * h
    if profile.degenerate is not None:
        d = profile.degenerate
        hi += d.b0 + d.b_plus + d.nu0
        lo -= d.b0 + d.b_minus + d.nu0
    return IndexTriple(mu_minus=lo, mu_plus=hi, mu_hat=profile.mean_index(k))


def support_interval(profile: IterationProfile, k: int, n: int) -> tuple:
    """Degree range [mu_minus, mu_plus + 1] of a closed orbit's local homology.

    Profiles on the contact side have half-dimension n - 1; the interval is
    guaranteed inside [mu_hat - n + 1, mu_hat + n].
    """
    if profile.dim_half != n - 1:
        raise DimensionMismatch(
            f"profile half-dimension {profile.dim_half} != n - 1 = {n - 1}"
        )
    t = index_triple(profile, k)
    lo, hi = t.mu_minus, t.mu_plus + 1
    if lo < t.mu_hat - n + 1 - 1e-9 or hi > t.mu_hat + n + 1e-9:
        raise AssertionError(
            f"support [{lo}, {hi}] escapes [mu_hat - n + 1, mu_hat + n] at k={k}"
        )
    return (lo, hi)


@dataclass(frozen=True)
class ConvexityReport:
    ok: bool
    witnesses: tuple            # (orbit position, k, mu_minus) violating mu_- >= n+1
    weak_ok: bool               # mu_- >= max(3, 2 + nu_a) for every listed iterate
    weak_witnesses: tuple
    min_mu_minus: Optional[int]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "witnesses": [list(w) for w in self.witnesses],
            "weak_ok": self.weak_ok,
            "weak_witnesses": [list(w) for w in self.weak_witnesses],
            "min_mu_minus": self.min_mu_minus,
        }


def check_dynamical_convexity(orbits: Sequence[tuple], n: int) -> ConvexityReport:
    """Check mu_-(x^k) >= n + 1 for every (profile, k_max) pair given.

    Also evaluates the weaker threshold mu_- >= max(3, 2 + nu_a) per iterate,
    reported separately.
    """
    witnesses = []
    weak_witnesses = []
    min_mu = None
    for pos, (profile, k_max) in enumerate(orbits):
        for k in range(1, int(k_max) + 1):
            mu_minus = index_triple(profile, k).mu_minus
            if min_mu is None or mu_minus < min_mu:
                min_mu = mu_minus
            if mu_minus < n + 1:
                witnesses.append((pos, k, mu_minus))
            if mu_minus < max(3, 2 + profile.nu_a(k)):
                weak_witnesses.append((pos, k, mu_minus))
    return ConvexityReport(
        ok=not witnesses,
        witnesses=tuple(witnesses),
        weak_ok=not weak_witnesses,
        weak_witnesses=tuple(weak_witnesses),
        min_mu_minus=min_mu,
    )


# ---------------------------------------------------------------------------
# sampled paths
# ---------------------------------------------------------------------------

def _polar_angle(B: np.ndarray) -> float:
    # rotation part of the polar decomposition of a 2x2 matrix with det > 0
    return math.atan2(B[1, 0] - B[0, 1], B[0, 0] + B[1, 1])


def _plane_winding(samples: np.ndarray) -> float:
    """Accumulated polar angle along a sampled path of 2x2 blocks, in turns."""
    angles = [_polar_angle(B) for B in samples]
    total = 0.0
    for a, b in zip(angles, angles[1:]):
        step = (b - a + math.pi) % (2.0 * math.pi) - math.pi
        if abs(step) >= math.pi / 2.0:
            raise SamplingTooCoarse(
                f"polar angle jumps by {step:.3f} rad between samples; refine the path"
            )
        total += step
    return total / (2.0 * math.pi)


def _block_index(samples: np.ndarray, tol: float) -> int:
    """Index of a nondegenerate sampled path in Sp(2)."""
    end = samples[-1]
    det_end = float(np.linalg.det(end))
    if det_end <= 0:
        raise PathNotSplittable(f"block endpoint has det {det_end:.3e}")
    samples = samples / np.sqrt(np.abs(np.linalg.det(samples)))[:, None, None]
    tr = float(np.trace(samples[-1]))
    if abs(2.0 - tr) <= tol:
        raise DegenerateEndpoint(f"endpoint has eigenvalue 1 (trace {tr:.12g})")
    delta = _plane_winding(samples)
    if abs(tr) < 2.0:
        return 2 * int(math.floor(delta)) + 1
    return int(round(2.0 * delta))


def _split_planes(path: np.ndarray, tol: float) -> list:
    """Decompose a sampled path into invariant symplectic coordinate planes.

    Tries the identity pairing (q_i, p_i) first, then a constant symplectic
    change of basis built from the eigenplanes of a well-separated sample.
    Returns a list of (n_samples, 2, 2) arrays, one per plane; raises
    PathNotSplittable when no common splitting is found.
    """
    m = path.shape[1] // 2
    if m == 1:
        return [path]

    for V in _candidate_bases(path, tol):
        B = V[0] @ path @ V[1] if isinstance(V, tuple) else path
        blocks, coupling = _extract_blocks(B, m)
        if coupling <= max(tol, 1e-8) * max(1.0, float(np.abs(B).max())):
            return blocks
    raise PathNotSplittable(
        "path does not preserve a common splitting into symplectic 2-planes"
    )


def _extract_blocks(B: np.ndarray, m: int):
    idx_pairs = [np.array([i, m + i]) for i in range(m)]
    blocks = [B[:, pair][:, :, pair] for pair in idx_pairs]
    mask = np.ones((2 * m, 2 * m), dtype=bool)
    for pair in idx_pairs:
        mask[np.ix_(pair, pair)] = False
    coupling = float(np.abs(B[:, mask]).max())
    return blocks, coupling


def _candidate_bases(path: np.ndarray, tol: float):
    yield None  # identity pairing as given
    m = path.shape[1] // 2
    J = standard_form(m)
    # scan samples from the end for one with well-separated eigenvalue pairs
    for idx in range(path.shape[0] - 1, 0, -max(1, path.shape[0] // 8)):
        M = path[idx]
        try:
            planes = _eigenplanes(M, J, tol)
        except PathNotSplittable:
            continue
        V = np.column_stack([p[0] for p in planes] + [p[1] for p in planes])
        if abs(np.linalg.det(V)) < 1e-10:
            continue
        yield (np.linalg.inv(V), V)


def _eigenplanes(M: np.ndarray, J: np.ndarray, tol: float) -> list:
    m = M.shape[0] // 2
    vals, vecs = np.linalg.eig(M)
    order = np.argsort(-np.abs(vals.imag) - np.abs(vals.real))
    used = np.zeros(len(vals), dtype=bool)
    planes = []
    for i in order:
        if used[i]:
            continue
        lam, v = vals[i], vecs[:, i]
        if abs(lam.imag) > 1e-10:
            if lam.imag < 0:
                continue  # handled via its conjugate
            used[i] = True
            for j in range(len(vals)):
                if not used[j] and abs(vals[j] - np.conj(lam)) < 1e-8:
                    used[j] = True
                    break
            xi, eta = v.real, v.imag
        else:
            used[i] = True
            target = 1.0 / lam.real
            best, best_d = -1, np.inf
            for j in range(len(vals)):
                if used[j] or abs(vals[j].imag) > 1e-10:
                    continue
                d = abs(vals[j].real - target)
                if d < best_d:
                    best, best_d = j, d
            if best < 0 or best_d > 1e-6 * max(1.0, abs(target)):
                raise PathNotSplittable("real eigenvalue lacks a reciprocal partner")
            used[best] = True
            xi, eta = v.real, vecs[:, best].real
        w = float(xi @ J @ eta)
        if abs(w) < 1e-10:
            raise PathNotSplittable("eigenplane is degenerate for the form")
        planes.append((xi, eta / w))
    if len(planes) != m:
        raise PathNotSplittable(f"found {len(planes)} planes for half-dimension {m}")
    return planes


def cz_index_sampled(path, tol: float = 1e-9) -> int:
    """Conley-Zehnder index of a sampled path starting at the identity.

    The path must decompose into invariant symplectic 2-planes (directly in
    the given coordinates or after one constant symplectic change of basis);
    each plane is handled by tracking the winding of its polar-rotation
    angle.  Consecutive samples may not be more than a quarter turn apart
    and the endpoint may not have eigenvalue 1 within tol.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 3 or path.shape[1] != path.shape[2]:
        raise DimensionMismatch(f"expected (n_samples, 2m, 2m), got {path.shape}")
    if path.shape[1] % 2 != 0:
        raise DimensionMismatch("odd matrix dimension")
    if path.shape[0] < 2:
        raise SamplingTooCoarse("need at least two samples")
    if float(np.abs(path[0] - np.eye(path.shape[1])).max()) > 1e-9:
        raise ValueError("path must start at the identity")
    return sum(_block_index(b, tol) for b in _split_planes(path, tol))


def rotation_path(rho: float, n_samples: int = 0) -> np.ndarray:
    """Sampled path t -> rotation by 2*pi*rho*t on [0, 1]."""
    if n_samples <= 0:
        n_samples = max(64, int(16 * abs(rho) * 2 * math.pi) + 1)
    ts = np.linspace(0.0, 1.0, n_samples + 1)
    out = np.empty((n_samples + 1, 2, 2))
    for i, t in enumerate(ts):
        a = 2.0 * math.pi * rho * t
        out[i] = [[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]]
    return out


def stretch_path(lam: float, n_samples: int = 64) -> np.ndarray:
    """Sampled path t -> diag(lam^t, lam^-t), a hyperbolic block with index 0."""
    ts = np.linspace(0.0, 1.0, n_samples + 1)
    out = np.empty((n_samples + 1, 2, 2))
    for i, t in enumerate(ts):
        out[i] = [[lam ** t, 0.0], [0.0, lam ** (-t)]]
    return out


def profile_table(profile: IterationProfile, k_max: int) -> list:
    """Rows (k, mu_minus, mu_plus, mu_hat) for k = 1..k_max."""
    rows = []
    for k in range(1, k_max + 1):
        t = index_triple(profile, k)
        rows.append((k, t.mu_minus, t.mu_plus, t.mu_hat))
    return rows


def dump_profile(profile: IterationProfile) -> str:
    return json.dumps(profile.to_json())


def load_profile(text: str) -> IterationProfile:
    return IterationProfile.from_json(json.loads(text))
