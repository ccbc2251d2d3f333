"""Orbit-level enstrophy transfer matrices and their spectral diagnostics."""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .ensemble import VelocityField
from .lattice import LatticeIndex

JACOBI_TOL = 1e-14
SYMMETRY_TOL = 1e-10

# "gradient": the triad term -i P(k)[q (u_p . u_q)] exactly as written in the model.
# "convective": -i P(k)[(q . u_p) u_q], the Fourier form of (u . grad) u.
NONLINEARITIES = {"gradient": 0, "convective": 1}


def _form(nonlinearity: str) -> int:
    try:
        return NONLINEARITIES[nonlinearity]
    except KeyError:
        raise ValueError(
            f"nonlinearity must be one of {tuple(NONLINEARITIES)}, got {nonlinearity!r}"
        ) from None


class TriadTable:
    """Admissible ``(p, q = k - p)`` pairs for every target mode, in CSR layout.

    Built once per lattice and reused by every field evaluation.
    """

    def __init__(self, index: LatticeIndex):
        self.index = index
        counts = np.empty(index.n_modes, dtype=np.int64)
        p_parts, q_parts = [], []
        for i, k in enumerate(index.modes):
            qpos = index.positions(k[None, :] - index.modes)
            ok = np.flatnonzero(qpos >= 0)
            counts[i] = len(ok)
            p_parts.append(ok.astype(np.int32))
            q_parts.append(qpos[ok].astype(np.int32))
        self.offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.p_idx = np.concatenate(p_parts) if p_parts else np.zeros(0, np.int32)
        self.q_idx = np.concatenate(q_parts) if q_parts else np.zeros(0, np.int32)
        self.modes_f = index.modes.astype(np.float64)
        self.k2_f = index.k2.astype(np.float64)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def __len__(self) -> int:
        return len(self.p_idx)


_TABLES: "weakref.WeakKeyDictionary[LatticeIndex, TriadTable]" = weakref.WeakKeyDictionary()


def triad_table(index: LatticeIndex) -> TriadTable:
    table = _TABLES.get(index)
    if table is None:
        table = _TABLES[index] = TriadTable(index)
    return table


@dataclass(frozen=True)
class TransferMatrices:
    S: np.ndarray
    A: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class StretchDiagnostics:
    rho_v: float
    rho_abs_v: float
    inf_norm_v: float
    nu_c_star: float

    def as_dict(self) -> dict:
        return {
            "rho_v": self.rho_v,
            "rho_abs_v": self.rho_abs_v,
            "inf_norm_v": self.inf_norm_v,
            "nu_c_star": self.nu_c_star,
        }


def nonlinear_terms_array(coeffs: np.ndarray, index: LatticeIndex, nonlinearity: str = "gradient") -> np.ndarray:
    t = triad_table(index)
    return _kernels.nonlinear_term(
        coeffs, t.modes_f, t.k2_f, t.offsets, t.p_idx, t.q_idx, _form(nonlinearity)
    )


def nonlinear_terms(u: VelocityField, nonlinearity: str = "gradient") -> np.ndarray:
    """``N_k`` for every mode, shape ``(n_modes, 3)``."""
    return nonlinear_terms_array(u.coeffs, u.index, nonlinearity)


def nonlinear_term(u: VelocityField, k: Sequence[int], nonlinearity: str = "gradient") -> np.ndarray:
    """``N_k`` for a single target mode by direct summation over its triads."""
    form = _form(nonlinearity)
    ix = u.index
    i = ix.position(k)
    t = triad_table(ix)
    sl = slice(t.offsets[i], t.offsets[i + 1])
    up, uq = u.coeffs[t.p_idx[sl]], u.coeffs[t.q_idx[sl]]
    qv = t.modes_f[t.q_idx[sl]]
    if form == 0:
        w = qv.T @ np.sum(up * uq, axis=1)
    else:
        w = uq.T @ np.sum(qv * up, axis=1)
    kv = t.modes_f[i]
    return -1j * (w - kv * (kv @ w) / t.k2_f[i])


def raw_transfer(u: VelocityField, nonlinearity: str = "gradient") -> np.ndarray:
    """Orbit-pair transfer ``S[a, b]``.

    ``S[a, b] = (1/|Omega_a|) sum_{k in a} sum_{p in b, k-p in lattice}
    |k|^2 Re(conj(u_k) . N_{k,p})``.
    """
    ix = u.index
    t = triad_table(ix)
    return _kernels.transfer_matrix(
        u.coeffs, t.modes_f, t.k2_f, t.offsets, t.p_idx, t.q_idx,
        ix.mode_orbit, ix.orbit_sizes_array.astype(np.float64), ix.n_orb, _form(nonlinearity),
    )


def enstrophy_production(u: VelocityField, nonlinearity: str = "gradient") -> float:
    """``sum_k |k|^2 Re(conj(u_k) . N_k)``."""
    nl = nonlinear_terms(u, nonlinearity)
    return float(np.sum(u.index.k2 * np.real(np.sum(np.conj(u.coeffs) * nl, axis=1))))


def energy_transfer(u: VelocityField, nonlinearity: str = "gradient") -> float:
    """``sum_k Re(conj(u_k) . N_k)``, which vanishes for both nonlinearities."""
    nl = nonlinear_terms(u, nonlinearity)
    return float(np.sum(np.real(np.conj(u.coeffs) * nl)))


def split_transfer(S: np.ndarray) -> TransferMatrices:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"transfer matrix must be square, got shape {S.shape}")
    ST = S.T
    A = (S - ST) / 2
    V = (S + ST) / 2
    return TransferMatrices(S=S, A=A, V=V)


def symmetric_eigenvalues(V: np.ndarray, method: str = "jacobi") -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError(f"matrix must be square, got shape {V.shape}")
    norm = np.linalg.norm(V)
    if norm > 0 and np.linalg.norm(V - V.T) > SYMMETRY_TOL * norm:
        raise ValueError("matrix is not symmetric to within 1e-10 relative Frobenius norm")
    if V.shape[0] == 0:
        return np.zeros(0)
    if method == "jacobi":
        eig, _ = _kernels.jacobi_eigenvalues(0.5 * (V + V.T), JACOBI_TOL, 100)
        return np.sort(eig)
    if method == "lapack":
        return np.linalg.eigvalsh(V)
    raise ValueError(f"unknown eigensolver {method!r}")


def spectral_radius(V: np.ndarray, method: str = "jacobi") -> float:
    """Largest absolute eigenvalue of a real symmetric matrix."""
    eig = symmetric_eigenvalues(V, method)
    return float(np.max(np.abs(eig), initial=0.0))


def inf_norm(V: np.ndarray) -> float:
    """Maximum absolute row sum."""
    return float(np.max(np.sum(np.abs(V), axis=1), initial=0.0))


def diagnostics_from_v(V: np.ndarray, N: int, method: str = "jacobi") -> StretchDiagnostics:
    rho = spectral_radius(V, method)
    return StretchDiagnostics(
        rho_v=rho,
        rho_abs_v=spectral_radius(np.abs(V), method),
        inf_norm_v=inf_norm(V),
        nu_c_star=rho / N ** 2,
    )


def stretch_diagnostics(
    u: VelocityField, method: str = "jacobi", nonlinearity: str = "gradient"
) -> StretchDiagnostics:
    V = split_transfer(raw_transfer(u, nonlinearity)).V
    return diagnostics_from_v(V, u.index.N, method)
