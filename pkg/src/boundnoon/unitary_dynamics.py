"""Pure-state evolution by Hermitian eigendecomposition, occupation readout, transfer times."""
from __future__ import annotations

from collections import Counter
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BracketError
from .fock_space import FockBasis

__all__ = [
    "Spectrum",
    "evolve",
    "joint_probability",
    "transfer_time",
    "probability_series",
    "default_window",
]

HERMITIAN_RTOL = 1e-12


def _as_matrix(H) -> np.ndarray:
    if hasattr(H, "matrix"):
        return np.asarray(H.matrix())
    return np.asarray(H)


class Spectrum:
    """Cached eigendecomposition ``H = V diag(E) V^dag`` of a Hermitian matrix.

    Accepts a dense matrix or anything with a ``matrix()`` method (e.g. an
    ``EffectiveChain``).  Read-only after construction.
    """

    def __init__(self, H, rtol: float = HERMITIAN_RTOL):
        H = _as_matrix(H)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got shape {H.shape}")
        scale = max(np.abs(H).max(), 1.0)
        if np.abs(H - H.conj().T).max() > rtol * scale:
            raise ValueError("Hamiltonian is not Hermitian within tolerance")
        self.energies, self.vectors = np.linalg.eigh(H)
        self.energies.setflags(write=False)
        self.vectors.setflags(write=False)
        self.dim = H.shape[0]

    def amplitudes(self, psi0, times, rows=None) -> np.ndarray:
        """Amplitudes of ``exp(-iHt) psi0`` at every time, shape ``(len(rows), nt)``."""
        psi0 = np.asarray(psi0, dtype=complex)
        if psi0.shape != (self.dim,):
            raise ValueError(f"state has shape {psi0.shape}, expected ({self.dim},)")
        times = np.atleast_1d(np.asarray(times, dtype=float))
        coeffs = self.vectors.conj().T @ psi0
        V = self.vectors if rows is None else self.vectors[np.atleast_1d(rows)]
        phases = np.exp(-1j * np.outer(self.energies, times))
        return V @ (phases * coeffs[:, None])

    def evolve(self, psi0, t: float) -> np.ndarray:
        return self.amplitudes(psi0, [t])[:, 0]

    def propagator(self, t: float) -> np.ndarray:
        V = self.vectors
        return (V * np.exp(-1j * self.energies * t)) @ V.conj().T


def evolve(H, psi0, t: float) -> np.ndarray:
    """``exp(-iHt) psi0`` for a Hamiltonian or a precomputed :class:`Spectrum`."""
    spec = H if isinstance(H, Spectrum) else Spectrum(H)
    if t == 0:
        return np.array(psi0, dtype=complex)
    return spec.evolve(psi0, t)


def joint_probability(psi, basis: FockBasis, sites: Sequence[int]) -> float:
    """Probability of finding the particles on the multiset ``sites`` (1-based).

    Equals ``|<0| a_i a_j ... |psi>|^2`` divided by the product of the
    factorials of the repeated labels, i.e. the squared amplitude of the
    normalized Fock state with that occupation pattern.
    """
    if len(sites) != basis.particles:
        raise ValueError(f"expected {basis.particles} site labels, got {len(sites)}")
    occ = [0] * basis.sites
    for s in sites:
        if not 1 <= s <= basis.sites:
            raise IndexError(f"site {s} outside 1..{basis.sites}")
        occ[s - 1] += 1
    return float(abs(psi[basis.index_of(occ)]) ** 2)


def pattern_probabilities(psi, basis: FockBasis) -> dict[tuple[int, ...], float]:
    """All joint probabilities keyed by sorted site multisets."""
    out = {}
    for i, s in enumerate(basis.states):
        key = tuple(sorted(Counter({j + 1: n for j, n in enumerate(s) if n}).elements()))
        out[key] = float(abs(psi[i]) ** 2)
    return out


def probability_series(spec: Spectrum, psi0, rows, times) -> np.ndarray:
    """Summed probability of the basis states ``rows`` along ``times``."""
    amps = spec.amplitudes(psi0, times, rows=rows)
    return (np.abs(amps) ** 2).sum(axis=0)


def default_window(L: int, J_eff: float) -> tuple[float, float]:
    return 0.0, 2.0 * L / J_eff


def transfer_time(H, psi0, target, window, steps: int = 2000) -> tuple[float, float]:
    """Time of the global maximum of a target probability inside ``window``.

    Parameters
    ----------
    H : ndarray, EffectiveChain or Spectrum
    psi0 : ndarray
    target : sequence of int or callable
        Basis indices whose probabilities are summed, or a function mapping
        the full amplitude array ``(D, nt)`` to probabilities ``(nt,)``.
    window : (float, float)
    steps : int
        Number of scan intervals; the best scan point is refined by a
        bounded scalar search within one step on either side.

    Returns
    -------
    t_star, value : float
        Earliest maximum on ties.
    """
    t0, t1 = float(window[0]), float(window[1])
    if not t1 > t0 or not np.isfinite(t1):
        raise BracketError(f"empty or unbounded time window [{t0}, {t1}]")
    spec = H if isinstance(H, Spectrum) else Spectrum(H)
    prob = _probability_fn(spec, psi0, target)
    ts = np.linspace(t0, t1, steps + 1)
    ps = prob(ts)
    k = int(np.argmax(ps))
    dt = ts[1] - ts[0]
    lo, hi = max(t0, ts[k] - dt), min(t1, ts[k] + dt)
    res = minimize_scalar(lambda t: -prob(np.array([t]))[0], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * max(t1, 1.0)})
    if -res.fun > ps[k]:
        return float(res.x), float(-res.fun)
    return float(ts[k]), float(ps[k])


def _probability_fn(spec: Spectrum, psi0, target) -> Callable[[np.ndarray], np.ndarray]:
    if callable(target):
        return lambda ts: np.asarray(target(spec.amplitudes(psi0, ts)))
    rows = np.atleast_1d(np.asarray(target, dtype=int))
    return lambda ts: probability_series(spec, psi0, rows, ts)
