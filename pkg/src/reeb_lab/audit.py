"""Mechanized exclusion bookkeeping for orbit systems.

Given finitely many closed orbits (a distinguished one plus companions), a
radial Hamiltonian and the recurrence solutions for their profiles, this
module certifies, pair by pair, why no short arrow can reach the protected
generator of the distinguished orbit's k-th iterate:

* same-pair      -- the two generators of one orbit are never joined;
* index-gap      -- the degree distance to the companion's support is >= 2;
* short-action-gap    -- the action gap is below the crossing-energy floor
                         sigma, so any arrow would be too cheap to exist;
* diverging-action-gap -- the action gap admits the lower bound
                          c1 c2 (j delta - eta), growing along solutions.

Everything is evaluated in normalized units where the distinguished period
equals its mean index (periods are rescaled internally; raw and normalized
quantities are both reported).  A pair that fits no reason raises
NotExcluded with its full numeric context; the audit then fails.

Modes: "hyperbolic" protects the upper generator and allows degenerate
companions meeting mu_- >= max(3, 2 + nu_a); "hyperbolic_lower" is the
variant protecting the lower generator under mu_- >= 3 + nu_a;
"pseudo_rotation" requires nondegenerate, dynamically convex data and picks
the protected generator per the sign of mean(z^k) - d.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AuditFailed,
    BadGeometry,
    HypothesisFailed,
    JOutOfRange,
    NotExcluded,
    ShellMarginNotFound,
)
from .hamiltonian import RadialProfile, profile_from_json
from .indices import IterationProfile, index_triple, support_interval
from .recurrence import (
    RecurrenceQuery,
    RecurrenceSolution,
    recurrence_search,
    verify_recurrence,
)

MODES = ("hyperbolic", "hyperbolic_lower", "pseudo_rotation")

CASE_SAME = "same-orbit"
CASE_ALIGNED = "aligned-iterate"
CASE_NEAR = "near-iterate"
CASE_FAR = "far-iterate"

_RESONANCE_TOL = 1e-9


def worker_count() -> int:
    raw = os.environ.get("REEB_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SystemOrbit:
    period: float
    profile: IterationProfile
    hyperbolic: bool = False
    locally_maximal: bool = False

    def to_json(self) -> dict:
        return {"period": self.period, "profile": self.profile.to_json(),
                "hyperbolic": self.hyperbolic,
                "locally_maximal": self.locally_maximal}

    @classmethod
    def from_json(cls, obj: dict) -> "SystemOrbit":
        return cls(period=float(obj["period"]),
                   profile=IterationProfile.from_json(obj["profile"]),
                   hyperbolic=bool(obj.get("hyperbolic", False)),
                   locally_maximal=bool(obj.get("locally_maximal", False)))


@dataclass(frozen=True)
class DerivedConstants:
    r_star: float          # level of the distinguished orbit, normalized units
    C1: float              # 2 * d(h')^{-1}/dT at the distinguished period
    C2: float              # max of |A_h'| = r h'' over [1, r_max]
    c1: float              # min of |d(h')^{-1}/dT| over [0, slope]
    c2: float              # min of |A_h'| over the margin shell
    xi: float              # shell margin: all orbit levels in [1+xi, r_max-xi]
    C: float               # C1 * C2 (normalized units, T0 = mean(z))
    C_raw: float           # the same constant computed on raw periods
    levels: tuple          # asymptotic aligned levels per companion orbit

    def to_json(self) -> dict:
        return {"r_star": self.r_star, "C1": self.C1, "C2": self.C2,
                "c1": self.c1, "c2": self.c2, "xi": self.xi,
                "C": self.C, "C_raw": self.C_raw, "levels": list(self.levels)}


@dataclass(frozen=True)
class OrbitSystem:
    orbits: tuple
    hamiltonian: RadialProfile
    n: int
    sigma: float
    eta: float
    ell0: int
    cbar: float
    mode: str = "hyperbolic"
    b_level: Optional[float] = None
    grid: int = 4096

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.orbits:
            raise ValueError("need at least one orbit")
        if self.n < 2:
            raise BadGeometry(f"ambient half-dimension n = {self.n} < 2")
        if self.hamiltonian.admissible:
            raise BadGeometry("the audit is normalized for semi-admissible profiles")
        for pos, o in enumerate(self.orbits):
            if o.profile.dim_half != self.n - 1:
                raise BadGeometry(
                    f"orbit {pos}: profile half-dimension {o.profile.dim_half} != n-1"
                )
            if o.profile.mean_index(1) <= 0:
                raise HypothesisFailed(f"orbit {pos} has nonpositive mean index")
            if o.period <= 0:
                raise BadGeometry(f"orbit {pos} has nonpositive period")
        if min(self.sigma, self.cbar) <= 0:
            raise BadGeometry("sigma and cbar must be positive")
        if not 0.0 < self.eta < 0.5:
            raise BadGeometry(f"eta = {self.eta} outside (0, 1/2)")

        z = self.orbits[0]
        mean_z = z.profile.mean_index(1)
        if self.mode in ("hyperbolic", "hyperbolic_lower"):
            if not z.hyperbolic or z.profile.elliptic or z.profile.degenerate:
                raise HypothesisFailed(
                    "the distinguished orbit must be hyperbolic (integer indices)"
                )
            if index_triple(z.profile, 1).mu_minus < 3:
                raise HypothesisFailed("the distinguished orbit needs index >= 3")
            floor_needed = (self.n + 3) / min(
                o.profile.mean_index(1) for o in self.orbits[1:]
            ) if len(self.orbits) > 1 else 0.0
            if self.ell0 <= floor_needed:
                raise HypothesisFailed(
                    f"ell0 = {self.ell0} <= (n+3)/min mean = {floor_needed:.6g}"
                )
            for pos, o in enumerate(self.orbits):
                for ell in range(1, self.ell0 + 1):
                    t = index_triple(o.profile, ell)
                    need = 3 + o.profile.nu_a(ell) if self.mode == "hyperbolic_lower" \
                        else max(3, 2 + o.profile.nu_a(ell))
                    if t.mu_minus < need:
                        raise HypothesisFailed(
                            f"orbit {pos} iterate {ell}: mu_- = {t.mu_minus} < {need}"
                        )
        else:
            if not z.locally_maximal:
                raise HypothesisFailed(
                    "pseudo-rotation mode: the first orbit must be marked locally maximal"
                )
            for pos, o in enumerate(self.orbits):
                if o.profile.degenerate is not None:
                    raise HypothesisFailed(f"orbit {pos} is degenerate")
                for ell in range(1, self.ell0 + 1):
                    if o.profile.is_degenerate(ell):
                        raise HypothesisFailed(f"orbit {pos} iterate {ell} degenerate")
                    if index_triple(o.profile, ell).mu_minus < self.n + 1:
                        raise HypothesisFailed(
                            f"orbit {pos} iterate {ell} breaks dynamical convexity"
                        )
            if self.ell0 != self.n + 1:
                raise BadGeometry(f"pseudo-rotation mode fixes ell0 = n + 1 = {self.n + 1}")

        # normalization: rescale periods so the distinguished one equals its mean index
        scale = mean_z / z.period
        norm = tuple(o.period * scale for o in self.orbits)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "norm_periods", norm)

        a = self.hamiltonian.slope
        for label, periods in (("raw", [o.period for o in self.orbits]),
                               ("normalized", list(norm))):
            if max(periods) >= a:
                raise BadGeometry(f"slope {a} does not exceed the {label} periods")
            for pos, (o, T) in enumerate(zip(self.orbits, periods)):
                if mean_z * T / o.profile.mean_index(1) >= a:
                    raise BadGeometry(
                        f"slope too small for orbit {pos} ({label} resonant level)"
                    )

        object.__setattr__(self, "derived", _derive_constants(self))
        if self.derived.C * self.eta >= self.sigma:
            raise BadGeometry(
                f"C * eta = {self.derived.C * self.eta:.6g} >= sigma = {self.sigma:.6g}"
            )
        A_star = float(self.hamiltonian.action(self.derived.r_star))
        b = self.b_level if self.b_level is not None else 0.5 * (A_star + a)
        if not A_star < b < a:
            raise BadGeometry(
                f"vanishing level b = {b:.6g} outside ({A_star:.6g}, {a:.6g})"
            )
        object.__setattr__(self, "b", b)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "orbits": [o.to_json() for o in self.orbits],
            "hamiltonian": self.hamiltonian.to_json(),
            "n": self.n,
            "constants": {"sigma": self.sigma, "eta": self.eta, "ell0": self.ell0,
                          "cbar": self.cbar, "b": self.b_level},
            "mode": self.mode,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OrbitSystem":
        consts = obj.get("constants", {})
        return cls(
            orbits=tuple(SystemOrbit.from_json(o) for o in obj["orbits"]),
            hamiltonian=profile_from_json(obj["hamiltonian"]),
            n=int(obj["n"]),
            sigma=float(consts["sigma"]),
            eta=float(consts["eta"]),
            ell0=int(consts["ell0"]),
            cbar=float(consts["cbar"]),
            mode=obj.get("mode", "hyperbolic"),
            b_level=consts.get("b"),
        )


def _derive_constants(system: OrbitSystem) -> DerivedConstants:
    H = system.hamiltonian
    a = H.slope
    z = system.orbits[0]
    mean_z = z.profile.mean_index(1)
    T0 = system.norm_periods[0]            # equals mean_z by construction

    rs = np.linspace(1.0, H.r_max, system.grid)
    d2 = H.d2h_shell(rs)
    ah_prime = rs * d2
    C2 = float(np.max(np.abs(ah_prime)))
    d2_max = float(np.max(d2))
    if d2_max <= 0:
        raise ShellMarginNotFound("h'' vanishes on the whole shell")
    c1 = 1.0 / d2_max

    r_star = float(H.dh_inv(T0))
    d2_star = float(H.d2h_shell(r_star))
    if d2_star <= 0:
        raise ShellMarginNotFound(f"h''(r_star) = {d2_star:.3e} <= 0")
    C1 = 2.0 / d2_star

    levels = []
    for o, Tn in zip(system.orbits[1:], system.norm_periods[1:]):
        arg = mean_z * Tn / o.profile.mean_index(1)
        if arg >= a:
            raise ShellMarginNotFound(f"aligned level argument {arg:.6g} >= slope")
        levels.append(float(H.dh_inv(arg)))
    pts = [r_star, *levels]
    xi_max = min(min(p - 1.0 for p in pts), min(H.r_max - p for p in pts))
    if xi_max <= 0:
        raise ShellMarginNotFound(
            f"orbit levels {pts} touch the shell boundary [1, {H.r_max}]"
        )
    xi = 0.5 * xi_max
    shell = np.linspace(1.0 + xi, H.r_max - xi, system.grid)
    c2 = float(np.min(shell * H.d2h_shell(shell)))
    if c2 <= 0:
        raise ShellMarginNotFound(f"|A'| minimum {c2:.3e} <= 0 on the margin shell")

    r_star_raw = float(H.dh_inv(z.period)) if z.period < a else r_star
    d2_raw = float(H.d2h_shell(r_star_raw))
    C1_raw = 2.0 / d2_raw if d2_raw > 0 else math.inf
    return DerivedConstants(
        r_star=r_star, C1=C1, C2=C2, c1=c1, c2=c2, xi=xi,
        C=C1 * C2,
        C_raw=C1_raw * C2 * z.period / mean_z,
        levels=tuple(levels),
    )


def resonance_classify(system: OrbitSystem, i: int):
    """('resonant', None) or ('nonresonant', delta) for companion i >= 1.

    delta is the normalized period defect |T'_i - mean(x_i)|; the raw defect
    is delta / scale.
    """
    if i < 1 or i >= len(system.orbits):
        raise JOutOfRange(f"companion index {i} outside 1..{len(system.orbits) - 1}")
    z = system.orbits[0]
    x = system.orbits[i]
    mean_z = z.profile.mean_index(1)
    mean_x = x.profile.mean_index(1)
    lhs = x.period * mean_z
    rhs = z.period * mean_x
    if abs(lhs - rhs) <= _RESONANCE_TOL * max(1.0, abs(rhs)):
        return ("resonant", None)
    delta = abs(system.norm_periods[i] - mean_x)
    return ("nonresonant", delta)


def j_range(system: OrbitSystem, solution: RecurrenceSolution, i: int) -> int:
    """Largest admissible iterate j of companion i at Hamiltonian order k."""
    k = solution.k[0]
    return int(math.floor(k * system.hamiltonian.slope / system.norm_periods[i]))


def case_classify(system: OrbitSystem, solution: RecurrenceSolution,
                  i: int, j: int) -> str:
    if not 0 <= i < len(system.orbits):
        raise JOutOfRange(f"orbit index {i} out of range")
    top = j_range(system, solution, i)
    if not 1 <= j <= top:
        raise JOutOfRange(f"j = {j} outside [1, {top}] for orbit {i}")
    if i == 0:
        return CASE_SAME
    l = j - solution.k[i]
    if l == 0:
        return CASE_ALIGNED
    if abs(l) > system.ell0:
        return CASE_FAR
    return CASE_NEAR


@dataclass(frozen=True)
class ExclusionReason:
    kind: str           # same-pair | index-gap | short-action-gap | diverging-action-gap
    case: str
    i: int
    j: int
    numbers: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "case": self.case, "i": self.i, "j": self.j,
                "numbers": self.numbers}


def _interval_gap(p: int, lo: int, hi: int) -> int:
    if p < lo:
        return lo - p
    if p > hi:
        return p - hi
    return 0


def _protected_degree(system: OrbitSystem, solution: RecurrenceSolution) -> tuple:
    """(degree, which) of the protected generator of the distinguished iterate."""
    z = system.orbits[0]
    k = solution.k[0]
    t = index_triple(z.profile, k)
    if system.mode == "hyperbolic":
        return t.mu_minus + 1, "upper"
    if system.mode == "hyperbolic_lower":
        return t.mu_minus, "lower"
    mean_k = z.profile.mean_index(k)
    if solution.d <= mean_k:
        return t.mu_minus, "lower"
    return t.mu_minus + 1, "upper"


def exclusion_certificate(system: OrbitSystem, solution: RecurrenceSolution,
                          i: int, j: int) -> ExclusionReason:
    """Certify that the (i, j)-orbit cannot reach the protected generator.

    Raises NotExcluded with the full numeric context when no reason applies;
    that failure is the audit's most informative output.
    """
    case = case_classify(system, solution, i, j)
    k = solution.k[0]
    d = solution.d
    protected, which = _protected_degree(system, solution)

    if case == CASE_SAME and j == k:
        return ExclusionReason(
            kind="same-pair", case=case, i=i, j=j,
            numbers={"degrees": [protected - 1, protected + 1], "which": which})

    if case == CASE_SAME:
        # other iterates of the distinguished orbit: pure index arithmetic
        lo, hi = support_interval(system.orbits[0].profile, j, system.n)
        gap = _interval_gap(protected, lo, hi)
        if gap < 2:
            raise NotExcluded(
                f"iterate {j} of the distinguished orbit sits {gap} from "
                f"the protected degree",
                {"i": i, "j": j, "support": [lo, hi], "protected": protected})
        return ExclusionReason(kind="index-gap", case=case, i=i, j=j,
                               numbers={"support": [lo, hi], "protected": protected,
                                        "gap": gap, "which": which})

    if case == CASE_ALIGNED:
        return _aligned_certificate(system, solution, i, j)

    # near / far: degree distance to the companion support
    profile = system.orbits[i].profile
    lo, hi = support_interval(profile, j, system.n)
    gap = _interval_gap(protected, lo, hi)
    if gap < 2:
        raise NotExcluded(
            f"support of orbit {i} iterate {j} is {gap} from the protected degree",
            {"i": i, "j": j, "support": [lo, hi], "protected": protected,
             "case": case, "d": d})
    numbers = {"support": [lo, hi], "protected": protected, "gap": gap,
               "which": which, "l": j - solution.k[i]}
    if case == CASE_NEAR:
        # consistency with the recurrence inclusions
        ell = abs(j - solution.k[i])
        base = index_triple(profile, ell)
        if j > solution.k[i]:
            numbers["recurrence_floor"] = d + base.mu_minus
        else:
            numbers["recurrence_ceiling"] = d - base.mu_minus + profile.nu_a(ell)
    return ExclusionReason(kind="index-gap", case=case, i=i, j=j, numbers=numbers)


def _aligned_certificate(system: OrbitSystem, solution: RecurrenceSolution,
                         i: int, j: int) -> ExclusionReason:
    H = system.hamiltonian
    k = solution.k[0]
    dc = system.derived
    kind, delta = resonance_classify(system, i)
    r_level = float(H.dh_inv(j * system.norm_periods[i] / k))
    gap = k * abs(float(H.action(r_level)) - float(H.action(dc.r_star)))
    numbers = {
        "r_level": r_level, "r_star": dc.r_star, "action_gap": gap,
        "sigma": system.sigma, "resonance": kind,
    }
    if gap < system.sigma:
        if kind == "resonant":
            numbers["apriori_bound"] = dc.C * system.eta
            numbers["apriori_ok"] = bool(gap <= dc.C * system.eta + 1e-9)
        return ExclusionReason(kind="short-action-gap", case=CASE_ALIGNED,
                               i=i, j=j, numbers=numbers)
    if kind == "resonant":
        raise NotExcluded(
            f"resonant companion {i} at j = {j} has action gap {gap:.6g} >= "
            f"sigma = {system.sigma:.6g}",
            numbers)
    bound = dc.c1 * dc.c2 * (j * delta - system.eta)
    in_shell = 1.0 + dc.xi <= r_level <= H.r_max - dc.xi
    numbers.update({
        "delta": delta, "lower_bound": bound,
        "bound_valid": bool(gap >= bound - 1e-9 * max(1.0, bound)),
        "level_in_shell": bool(in_shell),
    })
    if bound <= 0 or not numbers["bound_valid"]:
        raise NotExcluded(
            f"diverging bound {bound:.6g} not usable for companion {i} at j = {j}",
            numbers)
    return ExclusionReason(kind="diverging-action-gap", case=CASE_ALIGNED,
                           i=i, j=j, numbers=numbers)


# ---------------------------------------------------------------------------
# the audit driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolutionAudit:
    d: int
    k: tuple
    counts: dict                   # kind -> number of pairs
    min_index_gap: Optional[int]
    min_diverging_gap: Optional[float]
    aligned: tuple                 # explicit certificates for aligned pairs
    near: tuple                    # explicit certificates for near pairs
    protected: dict                # degree and which generator
    w_vertex_gap_ok: bool
    contradiction: dict            # vanishing-window bookkeeping
    total_pairs: int

    def to_json(self) -> dict:
        return {
            "d": self.d, "k": list(self.k), "counts": self.counts,
            "min_index_gap": self.min_index_gap,
            "min_diverging_gap": self.min_diverging_gap,
            "aligned": [c.to_json() for c in self.aligned],
            "near": [c.to_json() for c in self.near],
            "protected": self.protected,
            "w_vertex_gap_ok": self.w_vertex_gap_ok,
            "contradiction": self.contradiction,
            "total_pairs": self.total_pairs,
        }


@dataclass(frozen=True)
class AuditReport:
    mode: str
    n: int
    constants: dict
    normalization: dict
    solutions: tuple               # SolutionAudit per recurrence solution
    diverging_trend_ok: bool
    certified_pairs: int
    total_pairs: int

    @property
    def ok(self) -> bool:
        return self.certified_pairs == self.total_pairs

    def to_json(self) -> dict:
        return {
            "mode": self.mode, "n": self.n, "constants": self.constants,
            "normalization": self.normalization,
            "solutions": [s.to_json() for s in self.solutions],
            "diverging_trend_ok": self.diverging_trend_ok,
            "certified_pairs": self.certified_pairs,
            "total_pairs": self.total_pairs,
            "ok": self.ok,
        }

    def text_summary(self) -> str:
        lines = [
            f"audit mode={self.mode} n={self.n}: "
            f"{self.certified_pairs}/{self.total_pairs} pairs certified",
            f"constants: {json.dumps(self.constants, sort_keys=True)}",
        ]
        for s in self.solutions:
            div = ("-" if s.min_diverging_gap is None
                   else f"{s.min_diverging_gap:.4g}")
            lines.append(
                f"  d={s.d} k={list(s.k)} pairs={s.total_pairs} "
                f"counts={s.counts} min_div_gap={div} "
                f"contradiction_ready={s.contradiction['ready']}"
            )
        lines.append(f"diverging trend nondecreasing: {self.diverging_trend_ok}")
        return "\n".join(lines)


def audit(system: OrbitSystem, solutions: Optional[Sequence[RecurrenceSolution]] = None,
          count: int = 3, k_bound: int = 10 ** 6) -> AuditReport:
    """Run the full exclusion sweep over recurrence solutions.

    Searches for solutions when none are supplied.  Raises AuditFailed on the
    first NotExcluded pair (the report up to that point is attached).
    """
    profiles = [o.profile for o in system.orbits]
    if solutions is None:
        result = recurrence_search(RecurrenceQuery(
            profiles=tuple(profiles), eta=system.eta, ell0=system.ell0,
            n_divisor=1, k_bound=k_bound, count=count))
        solutions = list(result.solutions)
        if not solutions:
            raise AuditFailed("no recurrence solutions below the horizon")
    else:
        for s in solutions:
            cert = verify_recurrence(profiles, s.d, s.k, s.eta, s.ell0)
            if not cert.ok:
                raise AuditFailed(f"supplied solution d={s.d} fails verification")

    workers = min(worker_count(), len(solutions))
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                audits = list(pool.map(lambda s: _audit_solution(system, s), solutions))
        else:
            audits = [_audit_solution(system, s) for s in solutions]
    except NotExcluded as exc:
        raise AuditFailed(f"audit failed: {exc}", first_failure=exc) from exc

    gaps = [a.min_diverging_gap for a in audits if a.min_diverging_gap is not None]
    trend_ok = all(b >= a - 1e-9 for a, b in zip(gaps, gaps[1:]))
    report = AuditReport(
        mode=system.mode, n=system.n,
        constants={"sigma": system.sigma, "eta": system.eta, "ell0": system.ell0,
                   "cbar": system.cbar, "b": system.b,
                   **system.derived.to_json()},
        normalization={"scale": system.scale,
                       "periods_raw": [o.period for o in system.orbits],
                       "periods_normalized": list(system.norm_periods)},
        solutions=tuple(audits),
        diverging_trend_ok=trend_ok,
        certified_pairs=sum(a.total_pairs for a in audits),
        total_pairs=sum(a.total_pairs for a in audits),
    )
    return report


def _audit_solution(system: OrbitSystem, solution: RecurrenceSolution) -> SolutionAudit:
    counts = {"same-pair": 0, "index-gap": 0, "short-action-gap": 0,
              "diverging-action-gap": 0}
    min_gap = None
    min_div = None
    aligned = []
    near = []
    total = 0
    for i in range(len(system.orbits)):
        top = j_range(system, solution, i)
        for j in range(1, top + 1):
            reason = exclusion_certificate(system, solution, i, j)
            total += 1
            counts[reason.kind] += 1
            if reason.kind == "index-gap":
                g = reason.numbers["gap"]
                min_gap = g if min_gap is None else min(min_gap, g)
                if reason.case == CASE_NEAR:
                    near.append(reason)
            elif reason.kind == "diverging-action-gap":
                b = reason.numbers["lower_bound"]
                min_div = b if min_div is None else min(min_div, b)
                aligned.append(reason)
            elif reason.kind == "short-action-gap":
                aligned.append(reason)

    protected, which = _protected_degree(system, solution)
    # the domain vertex carries degrees up to n; demand distance >= 2 from it
    w_ok = protected - system.n >= 2
    A = solution.k[0] * float(system.hamiltonian.action(system.derived.r_star))
    margin = system.b - float(system.hamiltonian.action(system.derived.r_star))
    k_threshold = math.ceil(2.0 * system.cbar / margin) if margin > 0 else None
    contradiction = {
        "action": A,
        "window": [A - 2 * system.cbar, A + 2 * system.cbar],
        "level_budget": solution.k[0] * system.b,
        "ready": bool(A + 2 * system.cbar <= solution.k[0] * system.b),
        "k_threshold": k_threshold,
    }
    return SolutionAudit(
        d=solution.d, k=solution.k, counts=counts,
        min_index_gap=min_gap, min_diverging_gap=min_div,
        aligned=tuple(aligned), near=tuple(near),
        protected={"degree": protected, "which": which},
        w_vertex_gap_ok=w_ok,
        contradiction=contradiction,
        total_pairs=total,
    )
