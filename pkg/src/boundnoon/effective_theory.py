"""Strong-coupling reduction of a sector Hamiltonian to the bound-particle subspace.

The sector is split into the bound states ``|{M}, j>`` (block ``p``) and the
rest (block ``q``).  The effective Hamiltonian is ``H_p - V W`` where ``W``
solves the Sylvester equation ``H_q W - W H_p = V^dag``.  ``W`` is obtained
from the Dyson series in the interaction part, which is diagonal in the
Fock basis, so every term is an elementwise division; the Kronecker-form
operator ``G`` is never built.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, RegimeError
from .fock_space import FockBasis, enumerate_basis
from .lattice_model import LatticeParams, build_hamiltonian

__all__ = [
    "BlockSplit",
    "DysonSolution",
    "EffectiveChain",
    "split_blocks",
    "interaction_energies",
    "solve_sylvester_dyson",
    "effective_hamiltonian",
    "effective_matrix",
    "closed_form_effective",
    "degenerate_pt_oracle",
    "reduce_to_chain",
]

TRIDIAGONAL_TOL = 1e-3


@dataclass(frozen=True)
class BlockSplit:
    """``H`` partitioned into bound (``p``) and unbound (``q``) blocks.

    ``V`` has shape ``(L, D-L)``; ``p_indices[j-1]`` is the basis index of
    ``|{M}, j>``.
    """

    basis: FockBasis
    p_indices: np.ndarray
    q_indices: np.ndarray
    H_p: np.ndarray
    H_q: np.ndarray
    V: np.ndarray

    def reassemble(self) -> np.ndarray:
        D = self.basis.dim
        H = np.zeros((D, D), dtype=np.result_type(self.H_p, self.V))
        p, q = self.p_indices, self.q_indices
        H[np.ix_(p, p)] = self.H_p
        H[np.ix_(q, q)] = self.H_q
        H[np.ix_(p, q)] = self.V
        H[np.ix_(q, p)] = self.V.conj().T
        return H


@dataclass(frozen=True)
class DysonSolution:
    W: np.ndarray
    order: int
    residual: float


@dataclass(frozen=True)
class EffectiveChain:
    """Tridiagonal single-walker Hamiltonian: on-site ``B_eff`` and bonds ``J_eff``."""

    onsite: np.ndarray
    hopping: np.ndarray
    discarded: float = 0.0
    raw: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        B = np.asarray(self.onsite, dtype=float)
        J = np.asarray(self.hopping, dtype=float)
        if J.shape != (max(len(B) - 1, 0),):
            raise ValueError(f"{len(B)} sites need {len(B) - 1} bonds, got {J.shape}")
        object.__setattr__(self, "onsite", B)
        object.__setattr__(self, "hopping", J)

    @property
    def L(self) -> int:
        return len(self.onsite)

    def matrix(self) -> np.ndarray:
        return np.diag(self.onsite) + np.diag(self.hopping, 1) + np.diag(self.hopping, -1)

    def shifted(self, offset: float | None = None) -> "EffectiveChain":
        """Same chain with a constant removed (default: the central site's energy)."""
        if offset is None:
            offset = self.onsite[self.L // 2]
        return EffectiveChain(self.onsite - offset, self.hopping, self.discarded)

    def is_mirror_symmetric(self, atol: float = 1e-12) -> bool:
        return np.allclose(self.onsite, self.onsite[::-1], atol=atol) and np.allclose(
            self.hopping, self.hopping[::-1], atol=atol
        )


def split_blocks(H: np.ndarray, basis: FockBasis) -> BlockSplit:
    """Partition ``H`` by the bound-state projector."""
    if H.shape != (basis.dim, basis.dim):
        raise ValueError(f"H has shape {H.shape}, basis dimension is {basis.dim}")
    p = basis.bound_indices()
    if basis.particles <= 1:
        # every state is a "bound" state when there is at most one particle
        p = np.arange(basis.dim) if basis.particles == 1 else p
    mask = np.ones(basis.dim, dtype=bool)
    mask[p] = False
    q = np.nonzero(mask)[0]
    return BlockSplit(basis, p, q, H[np.ix_(p, p)], H[np.ix_(q, q)], H[np.ix_(p, q)])


def interaction_energies(basis: FockBasis, U) -> np.ndarray:
    """Diagonal of ``sum_j U_j/2 n_j(n_j-1)`` over the basis (``U`` scalar or per site)."""
    occ = basis.occupations.astype(float)
    U = np.broadcast_to(np.asarray(U, dtype=float), (basis.sites,))
    return (occ * (occ - 1)) @ (U / 2)


def solve_sylvester_dyson(blocks: BlockSplit, U_scale, order: int | None = None) -> DysonSolution:
    """Truncated Dyson-series solution of ``H_q W - W H_p = V^dag``.

    Parameters
    ----------
    blocks : BlockSplit
    U_scale : float or array_like
        On-site interaction (scalar or one value per site) defining the
        large, diagonal part of the Hamiltonian.
    order : int, optional
        Highest power of the small-part correction kept; default ``M - 1``.

    Raises
    ------
    ValueError
        Negative order.
    NumericalError
        A large-part energy difference vanishes (mis-specified split).
    """
    M = blocks.basis.particles
    if order is None:
        order = max(M - 1, 0)
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    E = interaction_energies(blocks.basis, U_scale)
    Ep, Eq = E[blocks.p_indices], E[blocks.q_indices]
    Vd = blocks.V.conj().T
    if Vd.size == 0:
        return DysonSolution(np.zeros_like(Vd), order, 0.0)
    gap = Eq[:, None] - Ep[None, :]
    if np.any(np.abs(gap) < 1e-14 * max(np.abs(E).max(), 1.0)):
        raise NumericalError("large-part energy difference is singular; check the block split and U")
    Hq_small = blocks.H_q - np.diag(Eq)
    Hp_small = blocks.H_p - np.diag(Ep)
    term = Vd / gap
    W = term.copy()
    for _ in range(order):
        term = -(Hq_small @ term - term @ Hp_small) / gap
        W = W + term
    residual = float(np.linalg.norm(blocks.H_q @ W - W @ blocks.H_p - Vd, 2))
    return DysonSolution(W, order, residual)


def effective_matrix(blocks: BlockSplit, solution: DysonSolution, symmetrize: bool = True) -> np.ndarray:
    """Dense ``L x L`` matrix ``H_p - V W`` (Hermitian part if ``symmetrize``)."""
    A = blocks.H_p - blocks.V @ solution.W
    if symmetrize:
        A = (A + A.conj().T) / 2
    return A


def effective_hamiltonian(blocks: BlockSplit, solution: DysonSolution, tol: float = TRIDIAGONAL_TOL,
                          subtract_bulk: bool = False) -> EffectiveChain:
    """Tridiagonal effective chain from a Dyson solution.

    Elements beyond the first off-diagonal are dropped; their largest
    magnitude is kept in ``EffectiveChain.discarded``.

    Raises
    ------
    RegimeError
        A dropped element exceeds ``tol * max|J_eff|``.
    """
    A = effective_matrix(blocks, solution).real
    L = A.shape[0]
    B = np.diag(A).copy()
    J = np.diag(A, 1).copy()
    far = np.triu(A, 2)
    discarded = float(np.abs(far).max()) if L > 2 else 0.0
    threshold = tol * (np.abs(J).max() if J.size else 0.0)
    if discarded > threshold + 1e-13 * max(np.abs(B).max(), 1.0):
        raise RegimeError(
            f"longer-range effective couplings ({discarded:.3e}) exceed {tol:g} x max|J_eff|; "
            "U/J is too small for a tridiagonal model"
        )
    chain = EffectiveChain(B, J, discarded, raw=A)
    return chain.shifted() if subtract_bulk else chain


def reduce_to_chain(params: LatticeParams, M: int, order: int | None = None, onsite: str = "n(n-1)",
                    tol: float = TRIDIAGONAL_TOL) -> EffectiveChain:
    """Build the sector Hamiltonian for ``params`` and reduce it to an effective chain."""
    params.require_strong_coupling()
    basis = enumerate_basis(params.L, M)
    H = build_hamiltonian(basis, params, onsite=onsite)
    blocks = split_blocks(H, basis)
    sol = solve_sylvester_dyson(blocks, np.array(params.interactions), order)
    return effective_hamiltonian(blocks, sol, tol=tol)


def closed_form_effective(M: int, params: LatticeParams, onsite: str = "n(n-1)") -> EffectiveChain:
    """Leading-order analytic chain for ``M`` in (2, 3) and uniform ``U``.

    Hoppings are ``J_j^2/2U`` (M=2) and ``3 J_j^3/16U^2`` (M=3); on-site
    energies are the interaction energy, the virtual-hop shifts from both
    neighbouring bonds and ``-M mu_j``.  Signs of the hoppings are reported
    as positive magnitudes (the sign is a gauge choice on a chain).
    """
    if M not in (2, 3):
        raise ValueError(f"closed form only available for M in (2, 3), got M={M}")
    U = np.array(params.interactions)
    if not np.allclose(U, U[0]) or U[0] <= 0:
        raise ValueError("closed forms need a uniform, positive interaction")
    U = float(U[0])
    J = np.abs(np.array(params.hoppings))
    mu = np.array(params.potentials)
    Jpad2 = np.concatenate(([0.0], J**2, [0.0]))
    neighbours = Jpad2[:-1] + Jpad2[1:]
    if M == 2:
        hop = J**2 / (2 * U)
        shift = neighbours / (2 * U)
    else:
        hop = 3 * J**3 / (16 * U**2)
        shift = 3 * neighbours / (8 * U)
    base = U * M * (M - 1) / 2 + (U * M if onsite == "n(n+1)" else 0.0)
    return EffectiveChain(base + shift - M * mu, hop)


def degenerate_pt_oracle(blocks: BlockSplit, rtol: float = 1e-12) -> np.ndarray:
    """Second-order degenerate perturbation theory on the bound subspace.

    ``<phi|H_p|phi'> + sum_m <phi|V|m><m|V|phi'> / (E0 - E_m)`` with the
    intermediate energies ``E_m`` taken from the diagonal of ``H_q``.

    Raises
    ------
    ValueError
        ``H_p`` is not a multiple of the identity.
    """
    Hp = blocks.H_p
    E0 = Hp[0, 0].real if Hp.size else 0.0
    scale = max(abs(E0), 1.0)
    if np.abs(Hp - E0 * np.eye(Hp.shape[0])).max() > rtol * scale:
        raise ValueError("bound-state block is not degenerate; perturbation theory oracle not applicable")
    Em = np.diag(blocks.H_q).real
    denom = E0 - Em
    if np.any(np.abs(denom) < rtol * scale):
        raise ValueError("intermediate state degenerate with the bound subspace")
    return Hp + (blocks.V / denom[None, :]) @ blocks.V.conj().T
