"""Dephasing dynamics: Lindblad equation with number-operator jump operators.

    d rho/dt = -i[H, rho] + Gamma sum_j (n_j rho n_j - 1/2 {n_j^2, rho})

Small sectors build the vectorized Liouvillian and apply its exponential
(``expm_multiply`` on its sparse pattern); larger ones integrate the
right-hand side directly.  Because every ``n_j`` is
diagonal in the Fock basis the dissipator acts elementwise:
``-Gamma/2 sum_j (n_j(a) - n_j(b))^2 rho_ab``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import expm_multiply

from .errors import BudgetError, NumericalError
from .fock_space import FockBasis

__all__ = [
    "DENSE_MAX_DIM",
    "vectorize",
    "devectorize",
    "dephasing_rates",
    "build_liouvillian",
    "lindblad_rhs",
    "evolve_density",
    "pure_density",
    "trace_distance",
    "DephasingPoint",
    "dephasing_sweep",
]

DENSE_MAX_DIM = 60


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacking: ``v[k*D + j] = rho[j, k]``."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.flatten(order="F")


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    D = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or D * D != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((D, D), order="F")


def dephasing_rates(basis: FockBasis) -> np.ndarray:
    """``C[a, b] = -1/2 sum_j (n_j(a) - n_j(b))^2``; the dissipator is ``Gamma * C * rho``."""
    occ = basis.occupations.astype(float)
    diff = occ[:, None, :] - occ[None, :, :]
    return -0.5 * (diff**2).sum(axis=-1)


def build_liouvillian(H: np.ndarray, gamma: float, basis: FockBasis, max_dim: int = DENSE_MAX_DIM) -> np.ndarray:
    """Dense superoperator acting on column-stacked density matrices.

    ``-i(1 x H - H^T x 1) + Gamma sum_j [n_j^T x n_j - 1/2 (1 x n_j^2) - 1/2 ((n_j^2)^T x 1)]``

    Raises
    ------
    BudgetError
        ``D > max_dim``; use the matrix-free path of :func:`evolve_density`.
    """
    D = basis.dim
    H = np.asarray(H)
    if H.shape != (D, D):
        raise ValueError(f"H has shape {H.shape}, basis dimension is {D}")
    if D > max_dim:
        raise BudgetError(f"dense Liouvillian needs D <= {max_dim}, got D={D}; use the matrix-free path")
    if gamma < 0:
        raise ValueError(f"dephasing rate must be non-negative, got {gamma}")
    eye = np.eye(D)
    Lv = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    if gamma:
        diss = np.zeros((D * D, D * D))
        for j in range(basis.sites):
            n = np.diag(basis.occupations[:, j].astype(float))
            n2 = n @ n
            diss += np.kron(n.T, n) - 0.5 * np.kron(eye, n2) - 0.5 * np.kron(n2.T, eye)
        Lv = Lv + gamma * diss
    return Lv


def lindblad_rhs(H: np.ndarray, gamma: float, basis: FockBasis):
    """Return ``f(rho) -> d rho/dt`` applied directly to matrices."""
    H = np.asarray(H)
    C = gamma * dephasing_rates(basis)

    def rhs(rho):
        return -1j * (H @ rho - rho @ H) + C * rho

    return rhs


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def evolve_density(H: np.ndarray, gamma: float, rho0: np.ndarray, t: float, basis: FockBasis,
                   method: str = "auto", rtol: float = 1e-8, atol: float = 1e-10) -> np.ndarray:
    """Density matrix at time ``t`` under the dephasing master equation.

    Parameters
    ----------
    H : ndarray, shape (D, D)
    gamma : float
        Dephasing rate, ``>= 0``.
    rho0 : ndarray, shape (D, D)
    t : float
    basis : FockBasis
    method : {"auto", "dense", "matrix-free"}
        ``auto`` picks the Liouvillian exponential for ``D <= 60``.
    rtol, atol : float
        Integrator tolerances for the matrix-free path.

    Raises
    ------
    NumericalError
        The adaptive integrator fails (step-size underflow).
    """
    if gamma < 0:
        raise ValueError(f"dephasing rate must be non-negative, got {gamma}")
    rho0 = np.asarray(rho0, dtype=complex)
    D = basis.dim
    if rho0.shape != (D, D):
        raise ValueError(f"rho0 has shape {rho0.shape}, basis dimension is {D}")
    if method == "auto":
        method = "dense" if D <= DENSE_MAX_DIM else "matrix-free"
    if t == 0:
        return rho0.copy()
    if method == "dense":
        Lv = csr_matrix(build_liouvillian(H, gamma, basis))
        rho = devectorize(expm_multiply(Lv * t, vectorize(rho0)))
    elif method == "matrix-free":
        rhs = lindblad_rhs(H, gamma, basis)
        sol = solve_ivp(lambda _, y: rhs(y.reshape(D, D)).ravel(), (0.0, t), rho0.ravel(),
                        method="DOP853", rtol=rtol, atol=atol)
        if sol.status != 0:
            raise NumericalError(f"master-equation integration failed: {sol.message}")
        rho = sol.y[:, -1].reshape(D, D)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (rho + rho.conj().T) / 2


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    delta = np.asarray(rho) - np.asarray(sigma)
    return float(0.5 * np.abs(np.linalg.eigvalsh((delta + delta.conj().T) / 2)).sum())


@dataclass(frozen=True)
class DephasingPoint:
    gamma: float
    probability: float
    relative_variation: float


def dephasing_sweep(config, gammas, method: str = "auto") -> list[DephasingPoint]:
    """Arrival probability ``P_{L..L}(t*)`` against dephasing rate.

    ``t*`` comes from the closed (``Gamma = 0``) run of ``config`` and is
    kept fixed; every point is compared with that baseline.
    """
    from .protocols import run_transfer

    gammas = [float(g) for g in gammas]
    if any(g < 0 for g in gammas):
        raise ValueError("dephasing rates must be non-negative")
    report = run_transfer(config)
    basis = config.basis()
    H = config.hamiltonian()
    rho0 = pure_density(basis.bound_state(1))
    target = basis.bound_index(config.L)
    baseline = report.P_last
    out = []
    for g in gammas:
        if g == 0:
            p = baseline
        else:
            rho = evolve_density(H, g, rho0, report.t_star, basis, method=method)
            p = float(rho[target, target].real)
        out.append(DephasingPoint(g, p, abs(p - baseline) / baseline))
    return out
