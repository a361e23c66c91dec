"""Symplectic linear algebra: validation, spectrum classification and the
normal-form invariants of unipotent symplectic maps.

Conventions
-----------
Coordinates are split, ``z = (q_1..q_m, p_1..p_m)``.  The symplectic form is
``omega(u, v) = u^T J v`` with ``J = [[0, I], [-I, 0]]``.  The time-t flow of a
quadratic Hamiltonian ``H(z) = z^T S z / 2`` is ``exp(t * JHAT @ S)`` where
``JHAT = -J``; with this sign a positive definite form generates a
counterclockwise rotation in every (q_i, p_i) plane, which is what fixes the
index normalization used in :mod:`reeb_lab.indices`.

A unipotent ``A`` (all eigenvalues 1) equals ``exp(K)`` for a nilpotent
``K = JHAT @ S`` with ``S`` symmetric.  The symmetric form decomposes
symplectically into zero planes, odd chain pairs and signed even chains; the
counts (nu0, b0, b_plus, b_minus) are complete invariants and are what
:func:`williamson_invariants` extracts.  Zero planes and the d = 1 odd chain
are the same object; they are counted under nu0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BorderlineSpectrum,
    NotSymplectic,
    NotUnipotent,
    OddDimension,
    UnresolvedNormalForm,
)

DEFAULT_TOL = 1e-9

# Anything within tol * _SNAP_RATIO of the unit circle is treated as exactly
# on it (floored by plain floating-point noise), so classifications survive
# perturbations well inside tol.  The annulus between that band and tol is
# reported as ambiguous instead of being classified.
_SNAP_RATIO = 1e-2
_MACHINE_BAND = 1e-12


def standard_form(m: int) -> np.ndarray:
    """Matrix of the symplectic form in split coordinates."""
    J = np.zeros((2 * m, 2 * m))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    return J


def flow_rotation(m: int) -> np.ndarray:
    """JHAT = -J; the flow of z^T S z / 2 is exp(t * JHAT @ S)."""
    return -standard_form(m)


def quadratic_flow(S: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Time-t flow map of the quadratic Hamiltonian with Hessian S."""
    S = np.asarray(S, dtype=float)
    m = S.shape[0] // 2
    K = flow_rotation(m) @ S
    return _expm(K * t)


def _expm(K: np.ndarray) -> np.ndarray:
    # Scaling-and-squaring with a Taylor core; avoids a scipy dependency.
    n = int(np.ceil(max(0.0, np.log2(max(1e-300, np.linalg.norm(K, 2))))) + 4)
    A = K / (2.0 ** n)
    out = np.eye(K.shape[0])
    term = np.eye(K.shape[0])
    for j in range(1, 24):
        term = term @ A / j
        out = out + term
    for _ in range(n):
        out = out @ out
    return out


def rotation2(theta: float) -> np.ndarray:
    """Counterclockwise rotation; flow of the positive definite form at theta > 0."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def hyperbolic2(lam: float) -> np.ndarray:
    return np.diag([lam, 1.0 / lam])


def direct_sum(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Assemble 2x2 symplectic blocks into split coordinates.

    Block i acts on the plane (q_i, p_i), i.e. rows/columns (i, m+i).
    """
    m = len(blocks)
    M = np.eye(2 * m)
    for i, B in enumerate(blocks):
        idx = np.array([i, m + i])
        M[np.ix_(idx, idx)] = B
    return M


def random_symplectic(rng: np.random.Generator, m: int, scale: float = 0.7) -> np.ndarray:
    """exp(JHAT S) for a random symmetric S; always symplectic."""
    B = rng.normal(size=(2 * m, 2 * m)) * scale
    S = (B + B.T) / 2.0
    return quadratic_flow(S)


@dataclass(frozen=True)
class SymplecticMatrix:
    """A validated element of Sp(2m)."""

    dim_half: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2 * self.dim_half

    def to_json(self) -> list:
        return [[float(x) for x in row] for row in self.entries]


def validate_symplectic(M: np.ndarray, tol: float = DEFAULT_TOL) -> SymplecticMatrix:
    """Check M^T J M = J (and det M = 1) within tol and wrap the matrix.

    Raises OddDimension for non-square or odd-dimensional input and
    NotSymplectic with the max-norm residual otherwise.
    """
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise OddDimension(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] % 2 != 0:
        raise OddDimension(f"dimension {M.shape[0]} is odd")
    m = M.shape[0] // 2
    J = standard_form(m)
    scale = max(1.0, float(np.abs(M).max())) ** 2
    residual = float(np.abs(M.T @ J @ M - J).max())
    if residual > tol * scale:
        raise NotSymplectic(residual, tol * scale)
    det_err = abs(np.linalg.det(M) - 1.0)
    if det_err > max(tol * scale, 1e-6):
        raise NotSymplectic(det_err, tol * scale)
    return SymplecticMatrix(dim_half=m, entries=M)


# ---------------------------------------------------------------------------
# spectrum classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralBlock:
    kind: str                 # "elliptic" | "hyperbolic" | "unipotent" | "other"
    eigenvalues: tuple        # representative eigenvalues, one per pair/quadruple
    multiplicity: int         # real dimension accounted for by this block


@dataclass(frozen=True)
class SpectralClassification:
    blocks: tuple
    nu_a: int                 # half the algebraic multiplicity of eigenvalue 1

    @property
    def kinds(self) -> tuple:
        return tuple(b.kind for b in self.blocks)


def _rank(A: np.ndarray, tol_scale: float) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0:
        return 0
    cutoff = max(tol_scale, s[0] * 1e-12, 1e-300)
    return int(np.sum(s > cutoff))


def _eig1_algebraic_multiplicity(M: np.ndarray, tol: float) -> int:
    """Algebraic multiplicity of eigenvalue 1 via rank of (M - I)^dim.

    Rank deficiency is far more robust than clustering eigenvalues: a Jordan
    block of size s perturbs its eigenvalues by eps**(1/s).
    """
    n = M.shape[0]
    N = M - np.eye(n)
    P = np.eye(n)
    norm = max(1.0, float(np.abs(N).max()))
    for _ in range(n):
        P = P @ (N / norm)
    return n - _rank(P, tol)


def spectral_classification(M: SymplecticMatrix, tol: float = DEFAULT_TOL) -> SpectralClassification:
    """Group the spectrum into elliptic / hyperbolic / unipotent / other blocks.

    Eigenvalues within the machine band of the unit circle are snapped onto
    it; eigenvalues inside the annulus (machine band, tol] are refused with
    BorderlineSpectrum rather than guessed.
    """
    A = M.entries
    scale = max(1.0, float(np.abs(A).max()))
    band = max(_MACHINE_BAND * scale * A.shape[0], tol * _SNAP_RATIO * scale)
    eigs = np.linalg.eigvals(A)

    alg1 = _eig1_algebraic_multiplicity(A, tol * scale)
    if alg1 % 2 != 0:
        raise UnresolvedNormalForm(f"odd algebraic multiplicity {alg1} at eigenvalue 1")
    nu_a = alg1 // 2

    blocks = []
    if alg1:
        blocks.append(SpectralBlock("unipotent", (1.0,), alg1))

    # Work through the remaining spectrum, removing one pair/quadruple at a time.
    remaining = [lam for lam in eigs if abs(lam - 1.0) > _cluster_radius(A, alg1, band)]
    if len(remaining) != A.shape[0] - alg1:
        raise UnresolvedNormalForm(
            f"eigenvalue-1 cluster size {A.shape[0] - len(remaining)} disagrees "
            f"with algebraic multiplicity {alg1}"
        )
    remaining.sort(key=lambda z: (-abs(z), np.angle(z)))
    used = [False] * len(remaining)

    def _claim_closest(target: complex, skip: set) -> int:
        best, best_d = -1, np.inf
        for idx, lam in enumerate(remaining):
            if used[idx] or idx in skip:
                continue
            d = abs(lam - target)
            if d < best_d:
                best, best_d = idx, d
        return best

    for i, lam in enumerate(remaining):
        if used[i]:
            continue
        used[i] = True
        r = abs(lam)
        off = abs(r - 1.0)
        if off <= band:
            # on the unit circle: elliptic pair (includes -1)
            j = _claim_closest(np.conj(lam) if abs(lam.imag) > band else lam, {i})
            if j < 0:
                raise UnresolvedNormalForm("unpaired unit-circle eigenvalue")
            used[j] = True
            blocks.append(SpectralBlock("elliptic", (complex(lam),), 2))
        elif off <= tol * scale:
            raise BorderlineSpectrum(
                f"|lambda| - 1 = {r - 1.0:.3e} for lambda = {lam:.6g}: "
                f"inside the ambiguity band (tol {tol:.1e})"
            )
        elif abs(lam.imag) <= band * max(1.0, r):
            # real, off circle: hyperbolic pair (lam, 1/lam)
            j = _claim_closest(1.0 / lam.real, {i})
            if j < 0:
                raise UnresolvedNormalForm(f"eigenvalue {lam:.6g} lacks its 1/lambda partner")
            used[j] = True
            blocks.append(SpectralBlock("hyperbolic", (float(lam.real),), 2))
        else:
            # loxodromic quadruple lam, conj, 1/lam, 1/conj
            partners = []
            for target in (np.conj(lam), 1.0 / lam, 1.0 / np.conj(lam)):
                j = _claim_closest(target, set(partners) | {i})
                if j < 0:
                    raise UnresolvedNormalForm(f"incomplete quadruple at {lam:.6g}")
                partners.append(j)
            for j in partners:
                used[j] = True
            blocks.append(SpectralBlock("other", (complex(lam),), 4))

    return SpectralClassification(blocks=tuple(blocks), nu_a=nu_a)


def _cluster_radius(A: np.ndarray, alg1: int, band: float) -> float:
    # Eigenvalues of a Jordan-type cluster at 1 scatter like eps**(1/s); use
    # the algebraic multiplicity to size the exclusion radius.
    if alg1 == 0:
        return band
    s = max(1, alg1)
    return max(band, (1e-13) ** (1.0 / s) * max(1.0, float(np.abs(A).max())))


# ---------------------------------------------------------------------------
# unipotent invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WilliamsonInvariants:
    """Block counts of a unipotent symplectic map.

    nu0 counts zero planes (including d = 1 odd chains, which coincide with
    them), b0 the odd chain pairs of length >= 3, b_plus/b_minus the signed
    even chains.  nu_g is the geometric and 2*nu_a the algebraic multiplicity
    of eigenvalue 1; m is the half-dimension of the block.
    """

    nu0: int
    b0: int
    b_plus: int
    b_minus: int
    nu_g: int
    nu_a: int
    m: int

    def __post_init__(self):
        if self.nu_g != 2 * (self.b0 + self.nu0) + self.b_plus + self.b_minus:
            raise UnresolvedNormalForm(
                f"nu_g = {self.nu_g} != 2(b0 + nu0) + b+ + b- "
                f"= {2 * (self.b0 + self.nu0) + self.b_plus + self.b_minus}"
            )
        if not (self.nu_g / 2 <= self.nu_a <= self.m):
            raise UnresolvedNormalForm(f"nu_a = {self.nu_a} outside [nu_g/2, m]")
        if self.nu_a < self.nu0 + self.b0 + self.b_plus + self.b_minus:
            raise UnresolvedNormalForm("nu_a < nu0 + b0 + b+ + b-")

    def to_json(self) -> dict:
        return {
            "nu0": self.nu0, "b0": self.b0,
            "b_plus": self.b_plus, "b_minus": self.b_minus,
            "nu_g": self.nu_g, "nu_a": self.nu_a, "m": self.m,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "WilliamsonInvariants":
        return cls(nu0=int(obj["nu0"]), b0=int(obj["b0"]),
                   b_plus=int(obj["b_plus"]), b_minus=int(obj["b_minus"]),
                   nu_g=int(obj["nu_g"]), nu_a=int(obj["nu_a"]), m=int(obj["m"]))

    @classmethod
    def from_counts(cls, nu0: int = 0, b0: int = 0, b_plus: int = 0,
                    b_minus: int = 0, m: int | None = None) -> "WilliamsonInvariants":
        """Build invariants from block counts alone (nu_a = m, totally degenerate).

        Without an explicit m, chains are assumed minimal: d = 3 for odd
        chains, d = 1 for signed even chains.
        """
        if m is None:
            m = nu0 + 3 * b0 + b_plus + b_minus
        nu_g = 2 * (b0 + nu0) + b_plus + b_minus
        return cls(nu0=nu0, b0=b0, b_plus=b_plus, b_minus=b_minus,
                   nu_g=nu_g, nu_a=m, m=m)


def nilpotent_log(A: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """log(A) for unipotent A via the finite series in N = A - I.

    Exact (up to rounding) because N is nilpotent; no branch issues.
    """
    n = A.shape[0]
    N = A - np.eye(n)
    # nilpotency check: N^n must vanish up to rounding of the power products
    nm = max(1.0, float(np.linalg.norm(N, 2)))
    P = N.copy()
    for _ in range(n - 1):
        P = P @ N
    if float(np.abs(P).max()) > tol * nm ** n * n:
        raise NotUnipotent(f"(A - I)^{n} has max entry {float(np.abs(P).max()):.3e}")
    K = np.zeros_like(N)
    term = np.eye(n)
    for j in range(1, n + 1):
        term = term @ N
        if float(np.abs(term).max()) == 0.0:
            break
        K += ((-1) ** (j + 1)) * term / j
    return K


def williamson_invariants(A: SymplecticMatrix, tol: float = DEFAULT_TOL) -> WilliamsonInvariants:
    """Normal-form counts (nu0, b0, b_plus, b_minus) of a unipotent map.

    The Jordan partition of K = log(A) fixes everything except the signs of
    the even chains: size-1 blocks come two per zero plane, odd blocks >= 3
    pair up into b0 chains, and each even block of size 2d carries a sign
    read off from the quadratic form on its chain top, Q(K^{d-1} v).
    """
    M = A.entries
    n = A.dim
    m = A.dim_half
    scale = max(1.0, float(np.abs(M).max()))

    K = nilpotent_log(M, tol)
    S = -flow_rotation(m) @ K          # K = JHAT S  =>  S = JHAT^-1 K = -JHAT K
    sym_err = float(np.abs(S - S.T).max())
    s_scale = max(1.0, float(np.abs(S).max()))
    if sym_err > max(tol * s_scale, 1e-9 * s_scale):
        raise UnresolvedNormalForm(f"generator form not symmetric: residual {sym_err:.3e}")
    S = (S + S.T) / 2.0

    rank_tol = max(tol, 1e-11) * max(s_scale, 1.0) * n

    # rank sequence of K^j and Jordan multiplicities
    powers = [np.eye(n), K]
    while len(powers) <= n:
        powers.append(powers[-1] @ K)
    ranks = [_rank(P, rank_tol) for P in powers]          # ranks[j] = rank K^j
    mult = {}
    for s in range(1, n + 1):
        c = ranks[s - 1] - 2 * ranks[s] + ranks[s + 1] if s + 1 <= n else ranks[s - 1] - 2 * ranks[s]
        if c < 0:
            raise UnresolvedNormalForm(f"inconsistent rank sequence at power {s}")
        if c:
            mult[s] = c
    if sum(s * c for s, c in mult.items()) != n:
        raise UnresolvedNormalForm(f"Jordan sizes {mult} do not fill dimension {n}")

    if mult.get(1, 0) % 2 != 0:
        raise UnresolvedNormalForm("odd number of size-1 blocks")
    nu0 = mult.get(1, 0) // 2
    b0 = 0
    for s, c in mult.items():
        if s >= 3 and s % 2 == 1:
            if c % 2 != 0:
                raise UnresolvedNormalForm(f"odd multiplicity {c} of odd Jordan size {s}")
            b0 += c // 2

    b_plus = b_minus = 0
    for s, c in sorted(mult.items()):
        if s % 2 != 0:
            continue
        d = s // 2
        tops = _chain_tops(K, powers, s, c, rank_tol)
        Kd = powers[d - 1]
        W = Kd @ tops                                     # K^{d-1} on the tops
        beta = W.T @ S @ W
        beta = (beta + beta.T) / 2.0
        vals = np.linalg.eigvalsh(beta)
        zero_cut = max(rank_tol, float(np.abs(vals).max()) * 1e-9) if vals.size else rank_tol
        pos = int(np.sum(vals > zero_cut))
        neg = int(np.sum(vals < -zero_cut))
        if pos + neg != c:
            raise UnresolvedNormalForm(
                f"sign form on even chains of size {s} is degenerate: spectrum {vals}"
            )
        b_plus += pos
        b_minus += neg

    nu_g = n - ranks[1]
    return WilliamsonInvariants(nu0=nu0, b0=b0, b_plus=b_plus, b_minus=b_minus,
                                nu_g=nu_g, nu_a=m, m=m)


def _null_basis(A: np.ndarray, tol: float) -> np.ndarray:
    u, s, vH = np.linalg.svd(A)
    cutoff = max(tol, (s[0] if s.size else 0.0) * 1e-12)
    rank = int(np.sum(s > cutoff))
    return vH[rank:].T.conj()


def _orth_basis(A: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the column span, rank-truncated (qr is not)."""
    if A.shape[1] == 0:
        return A
    u, s, _vH = np.linalg.svd(A, full_matrices=False)
    cutoff = max(tol, (s[0] if s.size else 0.0) * 1e-12)
    return u[:, s > cutoff]


def _chain_tops(K, powers, s, count, tol) -> np.ndarray:
    """Representatives of the Jordan chains of size exactly s.

    Returns a (n, count) matrix spanning ker K^s transverse to
    ker K^{s-1} + K ker K^{s+1}.
    """
    n = K.shape[0]
    U = _null_basis(powers[s], tol)
    low_parts = [_null_basis(powers[s - 1], tol)]
    if s + 1 <= n:
        nxt = _null_basis(powers[s + 1], tol)
        if nxt.shape[1]:
            low_parts.append(K @ nxt)
    L = np.hstack([p for p in low_parts if p.shape[1]]) if low_parts else np.zeros((n, 0))
    if L.shape[1]:
        Q = _orth_basis(L, tol)
        resid = U - Q @ (Q.T @ U)
    else:
        resid = U
    uu, ss, _ = np.linalg.svd(resid, full_matrices=False)
    if ss.size < count or ss[count - 1] < tol:
        raise UnresolvedNormalForm(
            f"could not isolate {count} chain tops of size {s} (singular values {ss[:count]})"
        )
    return uu[:, :count]
