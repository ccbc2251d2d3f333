"""Triad arithmetic and orbit-pair incidence counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import LatticeIndex, Mode, enumerate_lattice, in_truncation


def triad_count(k: Sequence[int], N: int) -> int:
    """Ordered pairs ``(p, q)`` of nonzero cube modes with ``p + q = k``."""
    if not in_truncation(k, N, "cube"):
        raise ValueError(f"{tuple(k)} is not a nonzero mode of the N={N} cube")
    prod = 1
    for x in k:
        prod *= 2 * N + 1 - abs(int(x))
    return prod - 2


def admissible_sources(index: LatticeIndex, k: Sequence[int]) -> np.ndarray:
    """Positions of all ``p`` with ``k - p`` in the lattice."""
    q = np.asarray(k, dtype=np.int64)[None, :] - index.modes
    return np.flatnonzero(index.positions(q) >= 0)


def triad_count_bruteforce(k: Sequence[int], index: LatticeIndex) -> int:
    """Exhaustive pair count; works for either truncation."""
    if tuple(k) not in index:
        raise ValueError(f"{tuple(k)} is not in the lattice")
    count = 0
    for p in index.mode_tuples:
        q = (k[0] - p[0], k[1] - p[1], k[2] - p[2])
        if in_truncation(q, index.N, index.truncation):
            count += 1
    return count


def triad_counts(index: LatticeIndex) -> np.ndarray:
    """``T(k)`` for every mode, by direct enumeration (vectorised)."""
    out = np.empty(index.n_modes, dtype=np.int64)
    for i, k in enumerate(index.modes):
        out[i] = np.count_nonzero(index.positions(k[None, :] - index.modes) >= 0)
    return out


def gamma_matrix(index: LatticeIndex) -> np.ndarray:
    """Orbit-pair triad counts ``Gamma[a, b]``.

    Uses one representative per target orbit: ``Gamma[a, b] = |Omega_a| * m_b`` where
    ``m_b`` counts the admissible sources of the representative lying in orbit ``b``.
    """
    n = index.n_orb
    gamma = np.zeros((n, n), dtype=np.int64)
    for a, orb in enumerate(index.orbits):
        src = admissible_sources(index, orb.rep)
        m = np.bincount(index.mode_orbit[src], minlength=n)
        gamma[a] = orb.size * m
    return gamma


def gamma_matrix_bruteforce(index: LatticeIndex) -> np.ndarray:
    """Same counts from the full double loop over target and source modes."""
    n = index.n_orb
    gamma = np.zeros((n, n), dtype=np.int64)
    for i in range(index.n_modes):
        src = admissible_sources(index, index.modes[i])
        np.add.at(gamma[index.mode_orbit[i]], index.mode_orbit[src], 1)
    return gamma


@dataclass(frozen=True)
class IncidenceResult:
    value: float
    orbit: int
    rep: Mode
    size: int


def _row_sqrt_sums(gamma: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    terms = np.sqrt(gamma.astype(np.float64))
    if weights is not None:
        terms = terms * weights[None, :]
    # math.fsum per row keeps the sums correctly rounded
    return np.array([math.fsum(row) for row in terms])


def _argmax_result(index: LatticeIndex, rows: np.ndarray) -> IncidenceResult:
    a = int(np.argmax(rows))
    orb = index.orbits[a]
    return IncidenceResult(float(rows[a]), a, orb.rep, orb.size)


def incidence_sum(gamma: np.ndarray, index: LatticeIndex | None = None) -> IncidenceResult:
    """``max_a sum_b sqrt(Gamma[a, b])`` with the maximising orbit."""
    rows = _row_sqrt_sums(gamma)
    if index is None:
        a = int(np.argmax(rows))
        return IncidenceResult(float(rows[a]), a, None, None)
    return _argmax_result(index, rows)


def weighted_incidence(gamma: np.ndarray, index: LatticeIndex) -> IncidenceResult:
    """``max_a sum_b sqrt(Gamma[a, b]) / |k_b|``."""
    if gamma.shape[0] == 0:
        return IncidenceResult(0.0, -1, None, None)
    rows = _row_sqrt_sums(gamma, 1.0 / np.sqrt(index.orbit_k2.astype(np.float64)))
    return _argmax_result(index, rows)


def incidence_row(N: int, truncation: str = "cube") -> dict:
    """S(N), I_w and their maximisers for one truncation level."""
    index = enumerate_lattice(N, truncation)
    gamma = gamma_matrix(index)
    s = incidence_sum(gamma, index)
    iw = weighted_incidence(gamma, index)
    return {
        "N": N,
        "truncation": truncation,
        "S": s.value,
        "S_over_N3": s.value / N ** 3,
        "S_argmax_rep": list(s.rep),
        "S_argmax_size": s.size,
        "I_w": iw.value,
        "I_w_over_N2": iw.value / N ** 2,
        "I_w_argmax_rep": list(iw.rep),
    }


def r2(n: int) -> int:
    """Ordered representations ``n = a^2 + b^2`` via ``4 (d_1(n) - d_3(n))``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 1
    d1 = d3 = 0
    i = 1
    while i * i <= n:
        if n % i == 0:
            for d in {i, n // i}:
                if d % 4 == 1:
                    d1 += 1
                elif d % 4 == 3:
                    d3 += 1
        i += 1
    return 4 * (d1 - d3)


def r2_bruteforce(n: int) -> int:
    if n < 0:
        raise ValueError("n must be nonnegative")
    m = math.isqrt(n)
    count = 0
    for a in range(-m, m + 1):
        b2 = n - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            count += 1 if b == 0 else 2
    return count


def r2_average(X: int) -> float:
    """``(1/X) sum_{1 <= n <= X} r2(n)``, which tends to pi."""
    return sum(r2(n) for n in range(1, X + 1)) / X
