"""Search and exact verification of simultaneous index recurrences.

Given profiles Phi_0..Phi_q with positive mean index, the target is integer
pairs (d, k_i) with

  R1:  |mean(Phi_i^{k_i}) - d| < eta                       for every i,
  R2:  mu_pm(Phi_i^{k_i + l}) = d + mu_pm(Phi_i^l),        1 <= l <= l0,
  R3:  mu_+(Phi_i^{k_i - l}) = d - mu_-(Phi_i^l) + (b_+ - b_-)(Phi_i^l),

with d and all k_i divisible by a given N.  The searcher scans k_0 in
multiples of N (numpy-vectorized prefilters, exact verification on the
survivors), proposes d as the nearest multiple of N to k_0 * mean(Phi_0),
and locates the companion k_i in the unique window R1 allows.  An empty
result therefore certifies that no solution exists below the horizon; a
soft flag marks horizons exhausted before the requested solution count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import HypothesisFailed, IterateUnderflow
from .indices import IterationProfile, index_triple

_CHUNK = 1 << 16


@dataclass(frozen=True)
class RecurrenceQuery:
    profiles: tuple
    eta: float
    ell0: int
    n_divisor: int = 1
    k_bound: int = 10 ** 6
    count: int = 3

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles:
            raise ValueError("need at least one profile")
        for i, p in enumerate(self.profiles):
            if p.mean_index(1) <= 0:
                raise HypothesisFailed(
                    f"profile {i} has mean index {p.mean_index(1):.6g} <= 0"
                )
        if self.eta <= 0 or self.ell0 < 1 or self.n_divisor < 1 or self.count < 1:
            raise ValueError("eta > 0, ell0 >= 1, divisor >= 1, count >= 1 required")

    def to_json(self) -> dict:
        return {
            "profiles": [p.to_json() for p in self.profiles],
            "eta": self.eta, "ell0": self.ell0, "n_divisor": self.n_divisor,
            "k_bound": self.k_bound, "count": self.count,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RecurrenceQuery":
        return cls(
            profiles=tuple(IterationProfile.from_json(p) for p in obj["profiles"]),
            eta=float(obj["eta"]), ell0=int(obj["ell0"]),
            n_divisor=int(obj.get("n_divisor", 1)),
            k_bound=int(obj.get("k_bound", 10 ** 6)),
            count=int(obj.get("count", 3)),
        )


@dataclass(frozen=True)
class ConditionRecord:
    name: str
    ok: bool
    detail: dict

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


@dataclass(frozen=True)
class Certificate:
    ok: bool
    records: tuple      # ConditionRecord per profile and condition

    def to_json(self) -> dict:
        return {"ok": self.ok, "records": [r.to_json() for r in self.records]}


@dataclass(frozen=True)
class RecurrenceSolution:
    d: int
    k: tuple
    eta: float
    ell0: int
    certificate: Certificate = field(compare=False)

    def to_json(self) -> dict:
        return {"d": self.d, "k": list(self.k), "eta": self.eta, "ell0": self.ell0,
                "certificate": self.certificate.to_json()}


def verify_recurrence(profiles: Sequence[IterationProfile], d: int,
                      ks: Sequence[int], eta: float, ell0: int) -> Certificate:
    """Exact per-condition verification; every computed value is recorded."""
    profiles = list(profiles)
    ks = [int(k) for k in ks]
    if len(ks) != len(profiles):
        raise ValueError(f"{len(ks)} iteration orders for {len(profiles)} profiles")
    records = []
    ok = True
    for i, (p, k) in enumerate(zip(profiles, ks)):
        if k - ell0 < 1:
            raise IterateUnderflow(f"profile {i}: k = {k} <= ell0 = {ell0}")
        mean_k = p.mean_index(k)
        r1 = abs(mean_k - d) < eta
        records.append(ConditionRecord(
            name=f"R1[{i}]", ok=r1,
            detail={"mean": mean_k, "d": d, "gap": abs(mean_k - d)}))
        ok &= r1
        for ell in range(1, ell0 + 1):
            up = index_triple(p, k + ell)
            base = index_triple(p, ell)
            r2 = (up.mu_minus == d + base.mu_minus) and (up.mu_plus == d + base.mu_plus)
            records.append(ConditionRecord(
                name=f"R2[{i},{ell}]", ok=r2,
                detail={"mu_minus": up.mu_minus, "mu_plus": up.mu_plus,
                        "expected_minus": d + base.mu_minus,
                        "expected_plus": d + base.mu_plus}))
            ok &= r2
            down = index_triple(p, k - ell)
            # b_+ - b_- of the ell-th iterate: elliptic blocks hitting an
            # integer contribute zero planes only, and a degenerate factor's
            # counts are stable under positive scaling of its form.
            corr = p.b_correction()
            want = d - base.mu_minus + corr
            r3 = down.mu_plus == want
            records.append(ConditionRecord(
                name=f"R3[{i},{ell}]", ok=r3,
                detail={"mu_plus": down.mu_plus, "expected": want, "b_corr": corr}))
            ok &= r3
            # consequences: the nu_a bound always, exact symmetry when nondegenerate
            bound = d - base.mu_minus + p.nu_a(ell)
            r3b = down.mu_plus <= bound
            records.append(ConditionRecord(
                name=f"R3-bound[{i},{ell}]", ok=r3b,
                detail={"mu_plus": down.mu_plus, "bound": bound}))
            ok &= r3b
            if not p.is_degenerate(ell) and not p.is_degenerate(k - ell):
                sym = down.mu_plus == d - base.mu_plus
                records.append(ConditionRecord(
                    name=f"R3-nondeg[{i},{ell}]", ok=sym,
                    detail={"mu": down.mu_plus, "expected": d - base.mu_plus}))
                ok &= sym
    return Certificate(ok=ok, records=tuple(records))


@dataclass(frozen=True)
class SearchResult:
    solutions: tuple
    horizon_exhausted: bool
    scanned_up_to: int

    def to_json(self) -> dict:
        return {"solutions": [s.to_json() for s in self.solutions],
                "horizon_exhausted": self.horizon_exhausted,
                "scanned_up_to": self.scanned_up_to}


def recurrence_search(query: RecurrenceQuery, on_solution=None) -> SearchResult:
    """Scan k_0 <= k_bound for solutions; deterministic, exhaustive order.

    Solutions are emitted with strictly increasing d, companions chosen as
    the smallest passing candidate.  on_solution, when given, is called with
    each solution as found (the CLI uses this to stream).
    """
    p0 = query.profiles[0]
    mean0 = p0.mean_index(1)
    N = query.n_divisor
    eta = query.eta
    found = []
    last_d = 0
    k0 = N * max(1, (query.ell0 + N) // N)  # k0 - ell0 >= 1 required
    while k0 <= query.k_bound and len(found) < query.count:
        hi = min(query.k_bound, k0 + _CHUNK * N - N)
        k0s = np.arange(k0, hi + N, N, dtype=np.int64)
        means = k0s * mean0
        ds = np.rint(means / N).astype(np.int64) * N
        mask = (np.abs(means - ds) < eta) & (ds > last_d)
        # companion feasibility prefilter: for each other profile there must
        # be a multiple of N within the R1 window around d / mean_i; only
        # sound when the window is narrower than the divisor spacing
        for p in query.profiles[1:]:
            mi = p.mean_index(1)
            if eta >= N * mi:
                continue
            approx = ds / (N * mi)
            cand_lo = np.floor(approx).astype(np.int64) * N
            cand_hi = cand_lo + N
            ok_i = (np.abs(cand_lo * mi - ds) < eta) | (np.abs(cand_hi * mi - ds) < eta)
            mask &= ok_i
        for k0_val, d_val in zip(k0s[mask], ds[mask]):
            if d_val <= last_d:
                continue
            sol = _assemble(query, int(k0_val), int(d_val))
            if sol is not None:
                found.append(sol)
                last_d = sol.d
                if on_solution is not None:
                    on_solution(sol)
                if len(found) >= query.count:
                    break
        k0 = hi + N
    return SearchResult(
        solutions=tuple(found),
        horizon_exhausted=len(found) < query.count,
        scanned_up_to=min(query.k_bound, k0 - N),
    )


def _assemble(query: RecurrenceQuery, k0: int, d: int) -> Optional[RecurrenceSolution]:
    N, eta, ell0 = query.n_divisor, query.eta, query.ell0
    ks = [k0]
    for p in query.profiles[1:]:
        mi = p.mean_index(1)
        lo = int(np.floor((d - eta) / (N * mi))) * N
        hi = int(np.ceil((d + eta) / (N * mi))) * N
        picked = None
        for k in range(max(N, lo), hi + N, N):
            if k - ell0 < 1 or abs(k * mi - d) >= eta:
                continue
            if _profile_passes(p, d, k, eta, ell0):
                picked = k   # smallest passing candidate wins
                break
        if picked is None:
            return None
        ks.append(picked)
    if k0 - ell0 < 1 or not _profile_passes(query.profiles[0], d, k0, eta, ell0):
        return None
    cert = verify_recurrence(query.profiles, d, ks, eta, ell0)
    if not cert.ok:
        return None
    return RecurrenceSolution(d=d, k=tuple(ks), eta=eta, ell0=ell0, certificate=cert)


def _profile_passes(p: IterationProfile, d: int, k: int, eta: float, ell0: int) -> bool:
    if abs(p.mean_index(k) - d) >= eta:
        return False
    for ell in range(1, ell0 + 1):
        up = index_triple(p, k + ell)
        base = index_triple(p, ell)
        if up.mu_minus != d + base.mu_minus or up.mu_plus != d + base.mu_plus:
            return False
        down = index_triple(p, k - ell)
        if down.mu_plus != d - base.mu_minus + p.b_correction():
            return False
    return True


@dataclass(frozen=True)
class GapReport:
    ok: bool
    rows: tuple      # (profile index, ell, mu_plus, bound d - 2)

    def to_json(self) -> dict:
        return {"ok": self.ok, "rows": [list(r) for r in self.rows]}


def convexity_gap_check(profiles: Sequence[IterationProfile],
                        solution: RecurrenceSolution, m: int) -> GapReport:
    """Check mu_+(Phi_i^{k_i - l}) <= d - 2 for 1 <= l <= ell0.

    Requires the convexity hypothesis mu_-(Phi_i) >= m + 2 on every profile.
    """
    for i, p in enumerate(profiles):
        mu_minus = index_triple(p, 1).mu_minus
        if mu_minus < m + 2:
            raise HypothesisFailed(
                f"profile {i} has mu_- = {mu_minus} < m + 2 = {m + 2}"
            )
    rows = []
    ok = True
    for i, (p, k) in enumerate(zip(profiles, solution.k)):
        for ell in range(1, solution.ell0 + 1):
            mu_plus = index_triple(p, k - ell).mu_plus
            good = mu_plus <= solution.d - 2
            rows.append((i, ell, mu_plus, solution.d - 2))
            ok &= good
    return GapReport(ok=ok, rows=tuple(rows))
