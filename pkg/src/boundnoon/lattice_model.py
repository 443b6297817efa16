"""Site-dependent Bose-Hubbard chain and the impurity / engineering schemes.

The Hamiltonian on a fixed-``M`` sector is::

    H = -sum_j J_j/2 (a_j a_{j+1}^dag + h.c.) + sum_j U_j/2 n_j(n_j - 1) - sum_j mu_j n_j

Impurity fields are specified as ``mu_j = -beta``, so a positive ``beta``
raises the energy of site ``j`` by ``beta * n_j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .fock_space import FockBasis, hop_operator

__all__ = [
    "LatticeParams",
    "SchemeDescriptor",
    "uniform_params",
    "build_hamiltonian",
    "edge_unlock_field",
    "minimal_engineering_fields",
    "splitting_field_asymptotic",
    "even_chain_scheme",
    "apply_scheme",
    "apply_schemes",
    "edge_unlocked",
    "minimal_engineered",
    "split_impurity",
    "even_chain",
    "composite",
    "uniform",
    "effective_hopping_scale",
    "optimal_end_coupling",
]

ONSITE_CONVENTIONS = ("n(n-1)", "n(n+1)")


@dataclass(frozen=True)
class LatticeParams:
    """Per-bond hoppings and per-site interactions / potentials (all energies)."""

    hoppings: tuple[float, ...]
    interactions: tuple[float, ...]
    potentials: tuple[float, ...]

    def __post_init__(self):
        L = len(self.interactions)
        if L < 1:
            raise ValueError("a chain needs at least one site")
        if len(self.potentials) != L or len(self.hoppings) != L - 1:
            raise ValueError(
                f"inconsistent lengths: {len(self.hoppings)} hoppings, "
                f"{L} interactions, {len(self.potentials)} potentials"
            )
        for name in ("hoppings", "interactions", "potentials"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))

    @property
    def L(self) -> int:
        return len(self.interactions)

    def is_palindromic(self, tol: float = 0.0) -> bool:
        return all(
            np.allclose(v, v[::-1], rtol=0, atol=tol)
            for v in (np.array(self.hoppings), np.array(self.interactions), np.array(self.potentials))
        )

    def require_strong_coupling(self) -> None:
        if min(self.interactions) <= 0:
            raise ValueError("effective-theory reduction needs U_j > 0 on every site")


def uniform_params(L: int, J: float = 1.0, U: float = 0.0, mu: float = 0.0) -> LatticeParams:
    return LatticeParams((J,) * (L - 1), (U,) * L, (mu,) * L)


def build_hamiltonian(basis: FockBasis, params: LatticeParams, onsite: str = "n(n-1)") -> np.ndarray:
    """Dense sector matrix of the Bose-Hubbard Hamiltonian.

    Parameters
    ----------
    basis : FockBasis
    params : LatticeParams
        Must describe the same number of sites as ``basis``.
    onsite : {"n(n-1)", "n(n+1)"}
        Interaction convention.  The two differ by ``U_j n_j``, a constant
        ``U M`` in a fixed sector when ``U`` is uniform.

    Returns
    -------
    ndarray, shape (D, D)
        Real symmetric matrix.
    """
    if params.L != basis.sites:
        raise ValueError(f"params describe L={params.L} sites, basis has {basis.sites}")
    if onsite not in ONSITE_CONVENTIONS:
        raise ValueError(f"unknown onsite convention {onsite!r}; use one of {ONSITE_CONVENTIONS}")
    occ = basis.occupations.astype(float)
    U = np.array(params.interactions)
    mu = np.array(params.potentials)
    shift = -1.0 if onsite == "n(n-1)" else 1.0
    diag = (occ * (occ + shift)) @ (U / 2) - occ @ mu
    H = np.diag(diag)
    for j, J in enumerate(params.hoppings, start=1):
        if J != 0.0:
            H -= 0.5 * J * hop_operator(basis, j)
    return H


# --- closed-form fields -------------------------------------------------------

def _check_M(M: int) -> None:
    if M not in (2, 3):
        raise ValueError(f"closed form only available for M in (2, 3), got M={M}")


def _check_U(U: float) -> None:
    if U <= 0:
        raise ValueError(f"interaction must be positive, got U={U}")


def edge_unlock_field(M: int, J: float, U: float) -> float:
    """Boundary field that equalizes edge and bulk effective energies."""
    _check_M(M)
    _check_U(U)
    return J**2 / (4 * U) if M == 2 else J**2 / (8 * U)


def minimal_engineering_fields(M: int, J: float, J0: float, U: float, variant: str = "printed") -> tuple[float, float]:
    """Compensating fields ``(beta_1, beta_2)`` for end couplings ``J0``.

    ``variant="printed"`` returns the published expressions verbatim; for
    ``M=2`` these do not reduce to :func:`edge_unlock_field` at ``J0 = J``.
    ``variant="derived"`` returns the second-order values that equalize the
    effective on-site energies: ``(2J^2 - J0^2)/c`` and ``(J^2 - J0^2)/c``
    with ``c = 4U`` (M=2) or ``c = 8U`` (M=3).  For M=3 both variants agree.
    """
    _check_M(M)
    _check_U(U)
    if variant not in ("printed", "derived"):
        raise ValueError(f"unknown variant {variant!r}")
    if M == 3 or variant == "derived":
        denom = 4 * U if M == 2 else 8 * U
        return (2 * J**2 - J0**2) / denom, (J**2 - J0**2) / denom
    return (J0**2 - 2 * J**2) / (2 * U), (J0**2 - J**2) / (2 * U)


def splitting_field_asymptotic(M: int, J: float, U: float) -> float:
    """Mid-chain field giving a balanced split for long chains."""
    _check_M(M)
    _check_U(U)
    return J**2 / (2 * U) if M == 2 else J**3 / (8 * U**2)


def even_chain_scheme(J: float, U: float, corrected: bool = False) -> tuple[float, float, float]:
    """``(J_mid, beta_1, beta_2)`` for splitting on an even-length M=2 chain.

    The published fields are linear in ``J``, unlike every other field in
    this model; ``corrected=True`` returns the ``J^2`` forms instead.
    """
    _check_U(U)
    J_mid = J * np.sqrt(np.sqrt(2.0) - 1.0)
    p = 2 if corrected else 1
    return J_mid, J**p / (4 * U), J**p * (2 - np.sqrt(2.0)) / (4 * U)


def effective_hopping_scale(M: int, J: float, U: float) -> float:
    """Leading-order bound-particle hopping ``|J_eff|`` of a uniform chain.

    ``M=1`` returns the bare matrix element ``J/2``.
    """
    if M == 1:
        return abs(J) / 2
    _check_M(M)
    _check_U(U)
    return J**2 / (2 * U) if M == 2 else 3 * abs(J) ** 3 / (16 * U**2)


# --- schemes ------------------------------------------------------------------

SCHEME_KINDS = ("uniform", "edge_unlocked", "minimal_engineered", "split_impurity", "even_chain", "composite")


@dataclass(frozen=True)
class SchemeDescriptor:
    """A named modification of a parameter set.

    Field contributions (``mu_j -= beta``) are additive; bond couplings are
    replaced.  ``composite`` holds an ordered tuple of sub-schemes.
    """

    kind: str
    parameters: Mapping[str, float] = field(default_factory=dict)
    parts: tuple["SchemeDescriptor", ...] = ()

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        object.__setattr__(self, "parameters", dict(self.parameters))

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.parameters.items())), self.parts))

    def flatten(self) -> tuple["SchemeDescriptor", ...]:
        if self.kind == "composite":
            return tuple(s for p in self.parts for s in p.flatten())
        return (self,)


def uniform() -> SchemeDescriptor:
    return SchemeDescriptor("uniform")


def edge_unlocked(beta_prime: float) -> SchemeDescriptor:
    return SchemeDescriptor("edge_unlocked", {"beta_prime": beta_prime})


def minimal_engineered(J0: float, beta1: float, beta2: float) -> SchemeDescriptor:
    return SchemeDescriptor("minimal_engineered", {"J0": J0, "beta1": beta1, "beta2": beta2})


def split_impurity(beta: float, site: int | None = None) -> SchemeDescriptor:
    """Mid-chain impurity; ``site`` defaults to ``L//2 + 1`` when applied."""
    params = {"beta": beta}
    if site is not None:
        params["site"] = site
    return SchemeDescriptor("split_impurity", params)


def even_chain(J_mid: float, beta1: float, beta2: float) -> SchemeDescriptor:
    return SchemeDescriptor("even_chain", {"J_mid": J_mid, "beta1": beta1, "beta2": beta2})


def composite(*schemes: SchemeDescriptor) -> SchemeDescriptor:
    return SchemeDescriptor("composite", {}, tuple(schemes))


def _contributions(scheme: SchemeDescriptor, L: int):
    """Yield ``("mu", site, delta)`` and ``("J", bond, value)`` entries (1-based)."""
    p = scheme.parameters
    k = scheme.kind
    if k == "uniform":
        return
    if k == "edge_unlocked":
        yield ("mu", 1, -p["beta_prime"])
        yield ("mu", L, -p["beta_prime"])
    elif k == "minimal_engineered":
        if L < 4:
            raise ValueError(f"minimal engineering needs L >= 4, got L={L}")
        yield ("J", 1, p["J0"])
        yield ("J", L - 1, p["J0"])
        for j in (1, L):
            yield ("mu", j, -p["beta1"])
        for j in (2, L - 1):
            yield ("mu", j, -p["beta2"])
    elif k == "split_impurity":
        site = int(p.get("site", L // 2 + 1))
        yield ("mu", site, -p["beta"])
    elif k == "even_chain":
        if L % 2 or L < 4:
            raise ValueError(f"even-chain scheme needs an even L >= 4, got L={L}")
        yield ("J", L // 2, p["J_mid"])
        for j in (1, L):
            yield ("mu", j, -p["beta1"])
        # compensation sits on the two sites touching the weakened middle bond
        for j in (L // 2, L // 2 + 1):
            yield ("mu", j, -p["beta2"])
    elif k == "composite":
        for part in scheme.parts:
            yield from _contributions(part, L)


def apply_scheme(params: LatticeParams, scheme: SchemeDescriptor) -> LatticeParams:
    """Return a new parameter set with ``scheme`` applied; ``params`` is untouched.

    Raises
    ------
    IndexError
        A site or bond index falls outside the chain.
    ValueError
        Two parts of the scheme replace the same bond with different values.
    """
    L = params.L
    mu = list(params.potentials)
    J = list(params.hoppings)
    replaced: dict[int, float] = {}
    for what, idx, value in _contributions(scheme, L):
        if what == "mu":
            if not 1 <= idx <= L:
                raise IndexError(f"site {idx} outside 1..{L}")
            mu[idx - 1] += value
        else:
            if not 1 <= idx <= L - 1:
                raise IndexError(f"bond {idx} outside 1..{L - 1}")
            if idx in replaced and replaced[idx] != value:
                raise ValueError(f"conflicting replacements for bond {idx}: {replaced[idx]} vs {value}")
            replaced[idx] = value
            J[idx - 1] = value
    return replace(params, hoppings=tuple(J), potentials=tuple(mu))


def apply_schemes(params: LatticeParams, schemes) -> LatticeParams:
    return apply_scheme(params, composite(*schemes))


def optimal_end_coupling(L: int, bounds=(1e-3, 1.5), grid: int = 60) -> tuple[float, float]:
    """Best end-bond ratio ``J0_eff / J_eff`` for single-particle transfer.

    Maximizes the arrival probability ``P_L(t*)`` of a uniform ``L``-site
    tight-binding chain whose first and last bonds are scaled by the ratio.
    The arrival time is searched in ``[0, L / J_eff]`` so that the result
    is the ballistic optimum rather than a slow weak-coupling revival.

    Returns
    -------
    ratio, fidelity : float
    """
    from .unitary_dynamics import Spectrum, transfer_time

    if L < 4:
        raise ValueError(f"minimal engineering needs L >= 4, got L={L}")

    def fidelity(r):
        H = np.diag(np.ones(L - 1), 1)
        H[0, 1] = H[L - 2, L - 1] = r
        H = H + H.T
        psi0 = np.zeros(L, dtype=complex)
        psi0[0] = 1.0
        _, p = transfer_time(Spectrum(H), psi0, [L - 1], (0.0, float(L)))
        return p

    from .optimize import maximize_on_interval

    r, p = maximize_on_interval(fidelity, bounds[0], bounds[1], grid=grid)
    return r, p
