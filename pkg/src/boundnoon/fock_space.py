"""Fixed-particle-number Fock basis and the sector operators built on it.

Sites are labelled ``1..L`` throughout the public API, bonds ``1..L-1``
(bond ``j`` joins sites ``j`` and ``j+1``).  States are ordered by
lexicographically *decreasing* occupation vectors, so ``|M,0,...,0>`` has
index 0 and ``|0,...,0,M>`` has index ``D-1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

__all__ = [
    "FockBasis",
    "enumerate_basis",
    "sector_dimension",
    "number_operator",
    "total_number_operator",
    "hop_operator",
    "mirror_permutation",
]


def sector_dimension(L: int, M: int) -> int:
    """Closed-form size of the ``M``-boson sector on ``L`` sites."""
    return comb(M + L - 1, M)


def _compositions(M: int, L: int):
    # descending lexicographic order: first site takes the most particles first
    if L == 1:
        yield (M,)
        return
    for n in range(M, -1, -1):
        for rest in _compositions(M - n, L - 1):
            yield (n,) + rest


@dataclass(frozen=True)
class FockBasis:
    """Ordered occupation-number basis of one ``(L, M)`` sector.

    Attributes
    ----------
    sites, particles : int
        Chain length ``L`` and particle number ``M``.
    states : tuple of tuple of int
        Occupation vectors in basis order.
    occupations : ndarray, shape (D, L)
        The same states as an integer array (read-only).
    """

    sites: int
    particles: int
    states: tuple[tuple[int, ...], ...]
    occupations: np.ndarray = field(repr=False, compare=False)
    _index: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def index_of(self, state) -> int:
        """Basis index of an occupation vector; ``KeyError`` if not in the sector."""
        return self._index[tuple(int(n) for n in state)]

    def bound_index(self, j: int) -> int:
        """Index of the bound state ``|{M}, j>`` (all particles on site ``j``)."""
        self._check_site(j)
        occ = [0] * self.sites
        occ[j - 1] = self.particles
        return self._index[tuple(occ)]

    def bound_indices(self) -> np.ndarray:
        """Indices of ``|{M}, 1>, ..., |{M}, L>`` in site order."""
        return np.array([self.bound_index(j) for j in range(1, self.sites + 1)])

    def state_vector(self, state) -> np.ndarray:
        """Normalized complex basis vector for an occupation pattern."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index_of(state)] = 1.0
        return psi

    def bound_state(self, j: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.bound_index(j)] = 1.0
        return psi

    def _check_site(self, j: int) -> None:
        if not 1 <= j <= self.sites:
            raise IndexError(f"site {j} outside 1..{self.sites}")


def enumerate_basis(L: int, M: int) -> FockBasis:
    """Enumerate every occupation vector of ``M`` bosons on ``L`` sites.

    Raises
    ------
    ValueError
        If ``L < 1`` or ``M < 0``.
    """
    if L < 1:
        raise ValueError(f"need at least one site, got L={L}")
    if M < 0:
        raise ValueError(f"particle number must be non-negative, got M={M}")
    states = tuple(_compositions(M, L))
    occ = np.array(states, dtype=np.int64).reshape(len(states), L)
    occ.setflags(write=False)
    index = {s: i for i, s in enumerate(states)}
    return FockBasis(L, M, states, occ, index)


def number_operator(basis: FockBasis, j: int) -> np.ndarray:
    """Diagonal matrix of ``n_j`` in the sector."""
    basis._check_site(j)
    return np.diag(basis.occupations[:, j - 1].astype(float))


def total_number_operator(basis: FockBasis) -> np.ndarray:
    return np.diag(basis.occupations.sum(axis=1).astype(float))


def hop_operator(basis: FockBasis, j: int) -> np.ndarray:
    """Matrix of ``a_j a_{j+1}^dag + a_j^dag a_{j+1}`` on bond ``j``.

    Matrix elements carry the bosonic factor ``sqrt(n_j (n_{j+1} + 1))``.
    """
    L = basis.sites
    if not 1 <= j <= L - 1:
        raise IndexError(f"bond {j} outside 1..{L - 1}")
    D = basis.dim
    op = np.zeros((D, D))
    occ = basis.occupations
    src = np.nonzero(occ[:, j - 1] > 0)[0]
    for i in src:
        n = occ[i]
        target = list(n)
        target[j - 1] -= 1
        target[j] += 1
        k = basis.index_of(target)
        amp = np.sqrt(n[j - 1] * (n[j] + 1))
        op[k, i] += amp
        op[i, k] += amp
    return op


def mirror_permutation(basis: FockBasis) -> np.ndarray:
    """Permutation matrix of the site reversal ``j -> L + 1 - j``."""
    D = basis.dim
    P = np.zeros((D, D))
    for i, s in enumerate(basis.states):
        P[basis.index_of(s[::-1]), i] = 1.0
    return P
