"""Truncated Fourier lattice, the octahedral group O_h and its orbits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Mode = tuple[int, int, int]

TRUNCATIONS = ("cube", "sphere")


@dataclass(frozen=True)
class GroupElement:
    """Signed permutation acting by ``result[i] = signs[i] * k[perm[i]]``.

    ``perm`` uses 0-based coordinate indices.
    """

    perm: tuple[int, int, int]
    signs: tuple[int, int, int]

    def __post_init__(self):
        if sorted(self.perm) != [0, 1, 2]:
            raise ValueError(f"perm must be a permutation of (0, 1, 2), got {self.perm}")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"signs must be +-1, got {self.signs}")

    @property
    def matrix(self) -> np.ndarray:
        g = np.zeros((3, 3), dtype=np.int64)
        for i in range(3):
            g[i, self.perm[i]] = self.signs[i]
        return g

    def compose(self, other: "GroupElement") -> "GroupElement":
        """Return ``self o other`` (apply ``other`` first)."""
        perm = tuple(other.perm[self.perm[i]] for i in range(3))
        signs = tuple(self.signs[i] * other.signs[self.perm[i]] for i in range(3))
        return GroupElement(perm, signs)

    def inverse(self) -> "GroupElement":
        perm = [0, 0, 0]
        signs = [1, 1, 1]
        for i in range(3):
            perm[self.perm[i]] = i
            signs[self.perm[i]] = self.signs[i]
        return GroupElement(tuple(perm), tuple(signs))

    def is_identity(self) -> bool:
        return self.perm == (0, 1, 2) and self.signs == (1, 1, 1)


IDENTITY = GroupElement((0, 1, 2), (1, 1, 1))


def octahedral_group() -> list[GroupElement]:
    """All 48 signed permutations of three coordinates, in a fixed order."""
    return [
        GroupElement(tuple(p), tuple(s))
        for p in itertools.permutations(range(3))
        for s in itertools.product((1, -1), repeat=3)
    ]


def apply_group(g: GroupElement, k: Sequence[int]) -> Mode:
    return (g.signs[0] * k[g.perm[0]], g.signs[1] * k[g.perm[1]], g.signs[2] * k[g.perm[2]])


def canonical_rep(k: Sequence[int]) -> Mode:
    """Orbit representative: absolute values sorted descending, e.g. (-1, 3, -2) -> (3, 2, 1)."""
    a, b, c = sorted((abs(int(x)) for x in k), reverse=True)
    return (a, b, c)


def in_truncation(k: Sequence[int], N: int, truncation: str = "cube") -> bool:
    if k[0] == 0 and k[1] == 0 and k[2] == 0:
        return False
    if truncation == "cube":
        return max(abs(k[0]), abs(k[1]), abs(k[2])) <= N
    return k[0] * k[0] + k[1] * k[1] + k[2] * k[2] <= N * N


@dataclass(frozen=True)
class Orbit:
    rep: Mode
    members: tuple[Mode, ...]
    shell_r: int

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.shell_r))


@dataclass(frozen=True, eq=False)
class LatticeIndex:
    """Modes of the truncated lattice with orbit and shell bookkeeping.

    Modes are ordered lexicographically; orbits are ordered by ``(shell_r, rep)``.
    Build instances with :func:`enumerate_lattice`.
    """

    N: int
    truncation: str
    modes: np.ndarray  # (n_modes, 3) int64
    orbits: tuple[Orbit, ...]
    mode_orbit: np.ndarray  # (n_modes,) orbit index of each mode
    _lookup: np.ndarray = field(repr=False)  # dense (4N+1)^3 table, -1 outside the lattice

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def n_orb(self) -> int:
        return len(self.orbits)

    @property
    def n_sh(self) -> int:
        return len(self.shells)

    @cached_property
    def k2(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.modes, self.modes)

    @cached_property
    def shells(self) -> dict[int, list[Mode]]:
        out: dict[int, list[Mode]] = {}
        for k, r in zip(self.mode_tuples, self.k2.tolist()):
            out.setdefault(r, []).append(k)
        return dict(sorted(out.items()))

    @cached_property
    def mode_tuples(self) -> list[Mode]:
        return [tuple(k) for k in self.modes.tolist()]

    @cached_property
    def orbit_sizes_array(self) -> np.ndarray:
        return np.array([o.size for o in self.orbits], dtype=np.int64)

    @cached_property
    def orbit_k2(self) -> np.ndarray:
        return np.array([o.shell_r for o in self.orbits], dtype=np.int64)

    @cached_property
    def neg_index(self) -> np.ndarray:
        """Position of ``-k`` for each mode."""
        return self.positions(-self.modes)

    @cached_property
    def half_mask(self) -> np.ndarray:
        """True where the first nonzero coordinate is positive."""
        m = self.modes
        first = np.where(m[:, 0] != 0, m[:, 0], np.where(m[:, 1] != 0, m[:, 1], m[:, 2]))
        return first > 0

    def positions(self, ks: np.ndarray) -> np.ndarray:
        """Vectorised mode -> position lookup; -1 for wavevectors outside the lattice."""
        ks = np.asarray(ks, dtype=np.int64)
        span = 2 * self.N
        inside = np.all(np.abs(ks) <= span, axis=-1)
        side = 2 * span + 1
        flat = np.where(inside, ((ks[..., 0] + span) * side + ks[..., 1] + span) * side + ks[..., 2] + span, 0)
        return np.where(inside, self._lookup[flat], -1)

    def position(self, k: Sequence[int]) -> int:
        pos = int(self.positions(np.asarray(k)[None, :])[0])
        if pos < 0:
            raise KeyError(f"{tuple(k)} is not in the lattice")
        return pos

    def __contains__(self, k) -> bool:
        return int(self.positions(np.asarray(k)[None, :])[0]) >= 0

    def orbit_of(self, k: Sequence[int]) -> int:
        return int(self.mode_orbit[self.position(k)])

    def orbit_index(self, rep: Sequence[int]) -> int:
        return self.orbit_of(canonical_rep(rep))

    @cached_property
    def orbit_members(self) -> list[np.ndarray]:
        """Mode positions belonging to each orbit."""
        order = np.argsort(self.mode_orbit, kind="stable")
        bounds = np.searchsorted(self.mode_orbit[order], np.arange(self.n_orb + 1))
        return [order[bounds[a]:bounds[a + 1]] for a in range(self.n_orb)]


def enumerate_lattice(N: int, truncation: str = "cube") -> LatticeIndex:
    """Enumerate the nonzero modes with ``|k|_inf <= N`` (cube) or ``|k| <= N`` (sphere)."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N}")
    if truncation not in TRUNCATIONS:
        raise ValueError(f"truncation must be one of {TRUNCATIONS}, got {truncation!r}")
    N = int(N)
    r = np.arange(-N, N + 1)
    grid = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    if truncation == "cube":
        keep = np.any(grid != 0, axis=1)
    else:
        k2 = np.einsum("ij,ij->i", grid, grid)
        keep = (k2 > 0) & (k2 <= N * N)
    modes = grid[keep].astype(np.int64)  # meshgrid with 'ij' is already lexicographic

    reps = -np.sort(-np.abs(modes), axis=1)
    k2 = np.einsum("ij,ij->i", modes, modes)
    uniq, inverse = np.unique(np.column_stack([k2, reps]), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    # np.unique sorts rows lexicographically, giving (shell_r, rep) order
    orbits = []
    members_by_orbit: list[list[Mode]] = [[] for _ in range(len(uniq))]
    for pos, a in enumerate(inverse.tolist()):
        members_by_orbit[a].append(tuple(modes[pos].tolist()))
    for row, members in zip(uniq.tolist(), members_by_orbit):
        orbits.append(Orbit(rep=tuple(row[1:]), members=tuple(members), shell_r=row[0]))

    span = 2 * N
    side = 2 * span + 1
    lookup = np.full(side ** 3, -1, dtype=np.int64)
    flat = ((modes[:, 0] + span) * side + modes[:, 1] + span) * side + modes[:, 2] + span
    lookup[flat] = np.arange(len(modes))
    return LatticeIndex(
        N=N,
        truncation=truncation,
        modes=modes,
        orbits=tuple(orbits),
        mode_orbit=inverse.astype(np.int64),
        _lookup=lookup,
    )


def orbit_sizes(index: LatticeIndex) -> list[int]:
    return [o.size for o in index.orbits]


def burnside_orbit_count(index: LatticeIndex, r: int) -> int:
    """Number of O_h orbits in shell ``r`` from the averaged fixed-point count."""
    if r not in index.shells:
        raise ValueError(f"shell radius {r} is not represented at N={index.N} ({index.truncation})")
    shell = np.array(index.shells[r], dtype=np.int64)
    fixed = 0
    for g in octahedral_group():
        image = shell[:, list(g.perm)] * np.array(g.signs)
        fixed += int(np.all(image == shell, axis=1).sum())
    count, rem = divmod(fixed, 48)
    if rem:
        raise ArithmeticError(f"fixed-point total {fixed} is not divisible by 48")
    return count


def burnside_total(index: LatticeIndex) -> int:
    return sum(burnside_orbit_count(index, r) for r in index.shells)


def orbit_table(index: LatticeIndex) -> list[dict]:
    return [
        {"orbit": a, "rep": list(o.rep), "size": o.size, "r": o.shell_r}
        for a, o in enumerate(index.orbits)
    ]


def transform_modes(g: GroupElement, modes: Iterable[Sequence[int]]) -> np.ndarray:
    m = np.asarray(list(modes) if not isinstance(modes, np.ndarray) else modes, dtype=np.int64)
    return m[:, list(g.perm)] * np.array(g.signs)
