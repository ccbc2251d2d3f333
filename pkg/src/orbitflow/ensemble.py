"""Random divergence-free velocity fields on the truncated lattice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import GroupElement, LatticeIndex

ENSEMBLES = ("isotropic", "kolmogorov", "sobolev")
NORMALIZATIONS = ("energy", "enstrophy")

# Offset applied to sample_id when a draw has zero energy.
_REDRAW_OFFSET = 2 ** 32


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str = "isotropic"
    seed: int = 0
    s: float | None = None
    M: float = 1.0
    normalize: str = "energy"

    def __post_init__(self):
        if self.kind not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.kind!r}; expected one of {ENSEMBLES}")
        if self.normalize not in NORMALIZATIONS:
            raise ValueError(f"normalize must be one of {NORMALIZATIONS}, got {self.normalize!r}")
        if self.kind == "sobolev":
            if self.s is None or not self.s > 1.5:
                raise ValueError(f"sobolev ensemble needs s > 3/2, got s={self.s}")
            if not self.M > 0:
                raise ValueError("sobolev ensemble needs M > 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(eq=False)
class VelocityField:
    """Fourier coefficients ``coeffs[i]`` of the mode ``index.modes[i]``."""

    index: LatticeIndex
    coeffs: np.ndarray  # (n_modes, 3) complex128

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.index.n_modes, 3):
            raise ValueError(
                f"coeffs must have shape ({self.index.n_modes}, 3), got {self.coeffs.shape}"
            )

    def __getitem__(self, k: Sequence[int]) -> np.ndarray:
        return self.coeffs[self.index.position(k)]

    def copy(self) -> "VelocityField":
        return VelocityField(self.index, self.coeffs.copy())

    def reality_defect(self) -> float:
        """``max_k |u_{-k} - conj(u_k)|``."""
        u = self.coeffs
        return float(np.max(np.abs(u[self.index.neg_index] - np.conj(u)), initial=0.0))

    def divergence_defect(self) -> float:
        """``max_k |k . u_k| / (|k| |u_k|)`` over modes with nonzero amplitude."""
        u = self.coeffs
        div = np.abs(np.einsum("ij,ij->i", self.index.modes, u))
        amp = np.sqrt(self.index.k2) * np.linalg.norm(u, axis=1)
        nz = amp > 0
        return float(np.max(div[nz] / amp[nz], initial=0.0))

    def check(self, tol: float = 1e-12) -> None:
        rd, dd = self.reality_defect(), self.divergence_defect()
        scale = max(float(np.max(np.abs(self.coeffs), initial=0.0)), 1.0)
        if rd > tol * scale or dd > tol:
            raise ValueError(f"field violates constraints: reality {rd:.3e}, divergence {dd:.3e}")


def leray_project(k: Sequence[float], v: Sequence[complex]) -> np.ndarray:
    """Apply ``P(k) = I - k k^T / |k|^2``."""
    k = np.asarray(k, dtype=np.float64)
    k2 = float(k @ k)
    if k2 == 0:
        raise ValueError("Leray projector is undefined at k = 0")
    v = np.asarray(v)
    return v - k * (k @ v) / k2


def leray_project_all(modes: np.ndarray, v: np.ndarray) -> np.ndarray:
    k = modes.astype(np.float64)
    k2 = np.einsum("ij,ij->i", k, k)
    return v - k * (np.einsum("ij,ij->i", k, v) / k2)[:, None]


def _generator(seed: int, sample_id: int) -> np.random.Generator:
    # Philox is counter-based: each (seed, sample_id) pair gets its own key.
    key = np.random.SeedSequence([int(seed), int(sample_id)]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _mirror(index: LatticeIndex, half: np.ndarray) -> np.ndarray:
    """Fill a full coefficient array from the independent half."""
    mask = index.half_mask
    u = np.zeros((index.n_modes, 3), dtype=np.complex128)
    u[mask] = half[mask]
    neg = index.neg_index[mask]
    u[neg] = np.conj(half[mask])
    return u


def _draw(spec: EnsembleSpec, index: LatticeIndex, sample_id: int) -> np.ndarray:
    rng = _generator(spec.seed, sample_id)
    n = index.n_modes
    # One draw per (mode position, component) in fixed order, independent or not,
    # so a mode's variates depend only on its position.
    z = (rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))) / np.sqrt(2.0)
    knorm = np.sqrt(index.k2.astype(np.float64))
    if spec.kind == "sobolev":
        tangent = leray_project_all(index.modes, rng.standard_normal((n, 3)))
        tangent /= np.linalg.norm(tangent, axis=1)[:, None]
        phase = np.exp(2j * np.pi * rng.random(n))
        amp = spec.M * knorm ** (-spec.s)
        half = (amp * phase)[:, None] * tangent
    else:
        if spec.kind == "kolmogorov":
            z = z * (knorm ** (-11.0 / 6.0))[:, None]
        half = leray_project_all(index.modes, z)
    return _mirror(index, half)


def sample_field(spec: EnsembleSpec, index: LatticeIndex, sample_id: int = 0) -> VelocityField:
    """Draw one field; deterministic in ``(spec.seed, sample_id)``.

    Isotropic and Kolmogorov fields are scaled so that ``(1/2) sum |u_k|^2 = 1``
    (``normalize="energy"``) or ``(1/2) sum |k|^2 |u_k|^2 = 1`` (``normalize="enstrophy"``,
    the scaling used for the golden Monte Carlo tables). Sobolev fields keep the exact
    envelope ``|u_k| = M |k|^-s``.
    """
    sid = int(sample_id)
    weight = 1.0 if spec.normalize == "energy" else index.k2[:, None]
    while True:
        u = _draw(spec, index, sid)
        if spec.kind == "sobolev":
            return VelocityField(index, u)
        e = 0.5 * float(np.sum(weight * np.abs(u) ** 2))
        if e > 0:
            return VelocityField(index, u / np.sqrt(e))
        sid += _REDRAW_OFFSET


def energy(u: VelocityField) -> float:
    return 0.5 * float(np.sum(np.abs(u.coeffs) ** 2))


def enstrophy(u: VelocityField) -> float:
    return 0.5 * float(np.sum(u.index.k2 * np.sum(np.abs(u.coeffs) ** 2, axis=1)))


def orbit_enstrophy(u: VelocityField) -> np.ndarray:
    """Orbit-averaged enstrophy ``Z_a``; ``sum_a |Omega_a| Z_a`` is the total enstrophy."""
    ix = u.index
    dens = ix.k2 * np.sum(np.abs(u.coeffs) ** 2, axis=1)
    total = np.bincount(ix.mode_orbit, weights=dens, minlength=ix.n_orb)
    return total / (2.0 * ix.orbit_sizes_array)


def transform_field(u: VelocityField, g: GroupElement) -> VelocityField:
    """The rotated field ``u'_{g k} = G u_k``."""
    ix = u.index
    G = g.matrix.astype(np.float64)
    target = ix.positions(ix.modes @ G.T)
    out = np.empty_like(u.coeffs)
    out[target] = u.coeffs @ G.T
    return VelocityField(ix, out)


def single_mode_field(index: LatticeIndex, k: Sequence[int], v: Sequence[complex]) -> VelocityField:
    """Field supported on ``{k, -k}`` with ``u_k = P(k) v``."""
    u = np.zeros((index.n_modes, 3), dtype=np.complex128)
    vk = leray_project(k, np.asarray(v, dtype=np.complex128))
    u[index.position(k)] = vk
    u[index.position([-x for x in k])] = np.conj(vk)
    return VelocityField(index, u)
