"""End-to-end experiments on bound-particle chains.

Every protocol starts from the bound state ``|{M}, 1>`` and uses the
transfer time ``t*`` of the chain *without* a splitting impurity, so a
split run and its unsplit reference share the same clock.  Phases are
imprinted as ``exp(+i n_L phi)``, which is what timed evolution under the
diagonal phase Hamiltonian ``H' = sum_j U n_j(n_j-1) - beta_L n_L``
produces for ``phi = beta_L t'``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError
from .fock_space import FockBasis, enumerate_basis, hop_operator
from .lattice_model import (
    LatticeParams,
    SchemeDescriptor,
    apply_schemes,
    build_hamiltonian,
    edge_unlock_field,
    edge_unlocked,
    effective_hopping_scale,
    split_impurity,
    uniform_params,
)
from .optimize import first_root, maximize_on_interval
from .unitary_dynamics import Spectrum, transfer_time

__all__ = [
    "ExperimentConfig",
    "TransferReport",
    "EdgeFieldResult",
    "SplitFieldResult",
    "SplitReport",
    "FringeScan",
    "FisherReport",
    "run_transfer",
    "optimize_edge_field",
    "optimize_split_field",
    "fit_split_alpha",
    "run_noon",
    "split_state",
    "ideal_splitter_probabilities",
    "mach_zehnder_fringes",
    "quench_detection",
    "free_splitter",
    "ideal_mach_zehnder",
    "ideal_quench_printed",
    "ideal_quench_hom",
    "fisher_information",
    "fisher_from_state",
    "fisher_finite_difference",
    "local_extrema",
]


@lru_cache(maxsize=64)
def _basis(L: int, M: int) -> FockBasis:
    return enumerate_basis(L, M)


@dataclass(frozen=True)
class ExperimentConfig:
    """Chain, particle number and scheme stack of one experiment.

    ``t_max`` overrides the default scan window ``[0, 2L/J_eff]``;
    ``scan_steps`` is the number of scan intervals.
    """

    L: int
    M: int
    U: float
    J: float = 1.0
    schemes: tuple[SchemeDescriptor, ...] = ()
    gamma: float = 0.0
    t_max: float | None = None
    scan_steps: int = 2000
    onsite: str = "n(n-1)"

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(s for sc in self.schemes for s in sc.flatten()))
        if self.L < 2:
            raise ConfigError(f"L must be >= 2, got {self.L}")
        if self.M not in (1, 2, 3):
            raise ConfigError(f"M must be one of 1, 2, 3, got {self.M}")
        if self.U < 0:
            raise ConfigError(f"U must be >= 0, got {self.U}")
        if self.M > 1 and self.U == 0 and self.t_max is None:
            raise ConfigError("U = 0 with M > 1 needs an explicit t_max (no bound-state time scale)")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.scan_steps < 10:
            raise ConfigError(f"scan_steps must be >= 10, got {self.scan_steps}")
        if self.t_max is not None and not self.t_max > 0:
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")

    def params(self) -> LatticeParams:
        return apply_schemes(uniform_params(self.L, self.J, self.U), self.schemes)

    def basis(self) -> FockBasis:
        return _basis(self.L, self.M)

    def hamiltonian(self) -> np.ndarray:
        return build_hamiltonian(self.basis(), self.params(), onsite=self.onsite)

    def J_eff(self) -> float:
        if self.M > 1 and self.U == 0:
            return abs(self.J) / 2
        return effective_hopping_scale(self.M, self.J, self.U)

    def window(self) -> tuple[float, float]:
        if self.t_max is not None:
            return 0.0, float(self.t_max)
        Jeff = self.J_eff()
        if Jeff == 0:
            return 0.0, 1.0
        return 0.0, 2.0 * self.L / Jeff

    def without(self, kind: str) -> "ExperimentConfig":
        return replace(self, schemes=tuple(s for s in self.schemes if s.kind != kind))

    def with_schemes(self, *extra: SchemeDescriptor) -> "ExperimentConfig":
        return replace(self, schemes=self.schemes + tuple(extra))

    def split_beta(self) -> float:
        return sum(s.parameters["beta"] for s in self.schemes if s.kind == "split_impurity")


# --- transfer -----------------------------------------------------------------

@dataclass(frozen=True)
class TransferReport:
    t_star: float
    P_first: float
    P_last: float
    times: np.ndarray = field(repr=False)
    series: np.ndarray = field(repr=False)  # (L, nt): P_{j..j}(t) for j = 1..L

    @property
    def P_first_series(self) -> np.ndarray:
        return self.series[0]

    @property
    def P_last_series(self) -> np.ndarray:
        return self.series[-1]


def run_transfer(config: ExperimentConfig, window=None) -> TransferReport:
    """Evolve ``|{M}, 1>`` and locate the arrival peak at site ``L``."""
    basis = config.basis()
    spec = Spectrum(config.hamiltonian())
    psi0 = basis.bound_state(1)
    rows = basis.bound_indices()
    window = window or config.window()
    t_star, p_last = transfer_time(spec, psi0, [rows[-1]], window, steps=config.scan_steps)
    times = np.linspace(window[0], window[1], config.scan_steps + 1)
    series = np.abs(spec.amplitudes(psi0, times, rows=rows)) ** 2
    psi = spec.evolve(psi0, t_star)
    return TransferReport(t_star, float(abs(psi[rows[0]]) ** 2), p_last, times, series)


def _reference_time(config: ExperimentConfig) -> float:
    """Transfer time of the chain with every splitting impurity removed."""
    ref = config.without("split_impurity")
    basis = ref.basis()
    t, _ = transfer_time(Spectrum(ref.hamiltonian()), basis.bound_state(1), [basis.bound_index(ref.L)],
                         ref.window(), steps=ref.scan_steps)
    return t


@dataclass(frozen=True)
class EdgeFieldResult:
    beta_prime: float
    P_last: float
    t_star: float
    degenerate: bool


def optimize_edge_field(config: ExperimentConfig, upper: float | None = None, grid: int = 24) -> EdgeFieldResult:
    """Boundary field maximizing ``P_{L..L}(t*)``, with ``t*`` re-scanned per candidate.

    The search runs over ``[0, J^2/U]`` on top of the schemes already in
    ``config`` (edge fields of the config are replaced).  ``degenerate`` is
    set when the objective is flat, e.g. for ``J = 0``.
    """
    if config.M not in (2, 3):
        raise ConfigError(f"edge-field optimization needs M in (2, 3), got {config.M}")
    base = config.without("edge_unlocked")
    if upper is None:
        upper = config.J**2 / config.U if config.U > 0 else 0.0
    if config.J == 0 or upper <= 0:
        rep = run_transfer(base)
        return EdgeFieldResult(0.0, rep.P_last, rep.t_star, True)

    def objective(b):
        return run_transfer(base.with_schemes(edge_unlocked(b))).P_last

    samples = [objective(b) for b in np.linspace(0.0, upper, 5)]
    if np.ptp(samples) < 1e-12:
        rep = run_transfer(base)
        return EdgeFieldResult(0.0, rep.P_last, rep.t_star, True)
    b, _ = maximize_on_interval(objective, 0.0, upper, grid=grid, xatol=1e-7 * upper)
    rep = run_transfer(base.with_schemes(edge_unlocked(b)))
    return EdgeFieldResult(b, rep.P_last, rep.t_star, False)


# --- splitting ----------------------------------------------------------------

@dataclass(frozen=True)
class SplitFieldResult:
    beta: float
    residual: float
    t_star: float


def _split_scale(config: ExperimentConfig) -> float:
    if config.M == 2:
        return config.J**2 / config.U
    if config.M == 3:
        return abs(config.J) ** 3 / config.U**2
    raise ConfigError(f"splitting needs M in (2, 3), got {config.M}")


def _balance(config: ExperimentConfig, beta: float, t_star: float, site=None) -> float:
    cfg = config.with_schemes(split_impurity(beta, site))
    basis = cfg.basis()
    psi = Spectrum(cfg.hamiltonian()).evolve(basis.bound_state(1), t_star)
    return float(abs(psi[basis.bound_index(1)]) ** 2 - abs(psi[basis.bound_index(cfg.L)]) ** 2)


def optimize_split_field(config: ExperimentConfig, bracket=None, grid: int = 40, site=None) -> SplitFieldResult:
    """Mid-chain field that balances ``P_{1..1}(t*)`` and ``P_{L..L}(t*)``.

    Parameters
    ----------
    config : ExperimentConfig
        Chain with its unlocking fields; any splitting impurity is ignored.
    bracket : (float, float), optional
        Search interval; default ``(0, 2 J^2/U]`` for M=2 and
        ``(0, 2 J^3/U^2]`` for M=3.  The smallest root is returned.
    grid : int
        Number of sign-scan intervals before Brent refinement.

    Raises
    ------
    BracketError
        The balance residual does not change sign in the bracket.
    """
    base = config.without("split_impurity")
    scale = _split_scale(base)
    lo, hi = bracket if bracket is not None else (0.0, 2.0 * scale)
    t_star = _reference_time(base)
    beta = first_root(lambda b: _balance(base, b, t_star, site), lo, hi, grid=grid,
                      xtol=1e-12 * scale, rtol=1e-10)
    return SplitFieldResult(beta, _balance(base, beta, t_star, site), t_star)


def fit_split_alpha(L: int, M: int, U_values, J: float = 1.0, scan_steps: int = 2000):
    """Least-squares slope ``alpha`` of ``beta_50/50`` against ``J^M / U^(M-1)``.

    Each chain carries the closed-form edge-unlocking field.  Returns
    ``(alpha, betas)``.
    """
    betas = []
    for U in U_values:
        cfg = ExperimentConfig(L, M, float(U), J, (edge_unlocked(edge_unlock_field(M, J, U)),),
                               scan_steps=scan_steps)
        betas.append(optimize_split_field(cfg).beta)
    x = np.array([abs(J) ** M / U ** (M - 1) for U in U_values])
    y = np.array(betas)
    return float(x @ y / (x @ x)), y


def _label(sites, L) -> str:
    return "".join("1" if s == 1 else ("L" if s == L else str(s)) for s in sites)


@dataclass(frozen=True)
class SplitReport:
    beta: float
    t_star: float
    P_first: float
    P_last: float
    mixed: dict  # endpoint patterns other than all-first / all-last, e.g. {"1L": ...}
    state: np.ndarray = field(repr=False)

    @property
    def balance_residual(self) -> float:
        return self.P_first - self.P_last

    @property
    def noon_quality(self) -> float:
        return self.P_first + self.P_last


def _noon_state(config: ExperimentConfig, t_star: float | None = None):
    if t_star is None:
        t_star = _reference_time(config)
    basis = config.basis()
    spec = Spectrum(config.hamiltonian())
    return spec, spec.evolve(basis.bound_state(1), t_star), t_star


def split_state(config: ExperimentConfig, t_star: float | None = None):
    """``(psi(t*), t*)`` for the bound state launched from site 1."""
    _, psi, t_star = _noon_state(config, t_star)
    return psi, t_star


def run_noon(config: ExperimentConfig, t_star: float | None = None) -> SplitReport:
    """Endpoint populations after splitting; ``t*`` from the unsplit chain unless given."""
    _, psi, t_star = _noon_state(config, t_star)
    basis, L, M = config.basis(), config.L, config.M
    mixed = {}
    for k in range(1, M):
        sites = [1] * (M - k) + [L] * k
        occ = [0] * L
        occ[0], occ[-1] = M - k, k
        mixed[_label(sites, L)] = float(abs(psi[basis.index_of(occ)]) ** 2)
    return SplitReport(
        config.split_beta(),
        t_star,
        float(abs(psi[basis.bound_index(1)]) ** 2),
        float(abs(psi[basis.bound_index(L)]) ** 2),
        mixed,
        psi,
    )


def ideal_splitter_probabilities(M: int) -> dict[tuple[int, ...], float]:
    """Output patterns of ``M`` bosons entering one port of a 50/50 beam splitter.

    The splitter is ``exp(-i pi/4 (a_1 a_2^dag + h.c.))`` on a two-mode
    sector; keys are sorted port multisets (ports 1 and 2).
    """
    basis = enumerate_basis(2, M)
    if M == 0:
        return {(): 1.0}
    Ubs = expm(-1j * np.pi / 4 * hop_operator(basis, 1))
    out = Ubs @ basis.bound_state(1)
    return {tuple([1] * s[0] + [2] * s[1]): float(abs(out[i]) ** 2) for i, s in enumerate(basis.states)}


# --- interferometry -----------------------------------------------------------

@dataclass(frozen=True)
class FringeScan:
    phis: np.ndarray
    probability: np.ndarray
    ideal: np.ndarray
    label: str
    t_star: float
    t_second: float

    def __post_init__(self):
        if np.any(np.diff(self.phis) <= 0):
            raise ValueError("phase grid must be strictly increasing")


def ideal_mach_zehnder(phis, N: int) -> np.ndarray:
    """``|1 - exp(i N phi)|^2 / 4`` at the first port."""
    return np.abs(1 - np.exp(1j * N * np.asarray(phis))) ** 2 / 4


def ideal_quench_printed(phis, N: int = 2) -> np.ndarray:
    """Coincidence probability in the published closed form ``2(s-1)/(s-3)``, ``s = sin N phi``."""
    s = np.sin(N * np.asarray(phis))
    return 2 * (s - 1) / (s - 3)


def ideal_quench_hom(phis, N: int = 2) -> np.ndarray:
    """Normalized two-photon coincidence ``(1 - sin N phi) / 2``; same extrema as the printed form."""
    return (1 - np.sin(N * np.asarray(phis))) / 2


def _check_grid(phis) -> np.ndarray:
    phis = np.asarray(phis, dtype=float)
    if phis.ndim != 1 or phis.size < 2 or np.any(np.diff(phis) <= 0):
        raise ConfigError("phase grid must be a strictly increasing 1-d array")
    return phis


def _phase_step(psi, basis: FockBasis, phi: float, literal: bool, U: float, beta_L: float) -> np.ndarray:
    nL = basis.occupations[:, -1]
    if not literal:
        return psi * np.exp(1j * nL * phi)
    # timed evolution under H' = sum_j U n_j(n_j-1) - beta_L n_L for t' = phi / beta_L
    t_prime = np.mod(phi, 2 * np.pi) / beta_L
    occ = basis.occupations.astype(float)
    energies = U * (occ * (occ - 1)).sum(axis=1) - beta_L * nL
    return psi * np.exp(-1j * energies * t_prime)


def mach_zehnder_fringes(config: ExperimentConfig, phis, literal: bool = False, beta_L: float = 1.0) -> FringeScan:
    """Split for ``t*``, imprint ``phi`` at site ``L``, split again for ``t*``; read ``P_{1..1}``.

    ``literal=True`` replaces the exact phase unitary by timed evolution
    under the diagonal phase Hamiltonian with field ``beta_L``.
    """
    phis = _check_grid(phis)
    spec, psi, t_star = _noon_state(config)
    basis = config.basis()
    U2 = spec.propagator(t_star)
    first = basis.bound_index(1)
    probs = np.array([
        abs(U2[first] @ _phase_step(psi, basis, p, literal, config.U, beta_L)) ** 2 for p in phis
    ])
    return FringeScan(phis, probs, ideal_mach_zehnder(phis, config.M), "mach-zehnder", t_star, t_star)


def free_splitter(L: int, J: float = 1.0, site: int | None = None, steps: int = 2000):
    """Single-particle 50/50 splitter on a free chain.

    Returns ``(beta, t'')`` where ``t''`` is the arrival time of a single
    particle on the uniform chain and ``beta`` the smallest mid-chain field
    that balances the first and last site populations at ``t''``.
    """
    site = L // 2 + 1 if site is None else site
    psi0 = np.zeros(L, dtype=complex)
    psi0[0] = 1.0
    free = ExperimentConfig(L, 1, 0.0, J, scan_steps=steps)
    H0 = free.hamiltonian()
    t2, _ = transfer_time(H0, psi0, [L - 1], free.window(), steps=steps)

    def balance(b):
        H = H0.copy()
        H[site - 1, site - 1] += b
        psi = Spectrum(H).evolve(psi0, t2)
        return abs(psi[0]) ** 2 - abs(psi[-1]) ** 2

    beta = first_root(balance, 1e-3 * abs(J), 3.0 * abs(J), grid=100, xtol=1e-13)
    return beta, t2


def quench_detection(config: ExperimentConfig, phis, literal: bool = False, beta_L: float = 1.0) -> FringeScan:
    """Interaction-quench readout of the two-particle NOON state.

    After the phase step, interactions and edge fields are switched off and
    the free-particle splitter recombines the two halves for ``t''``;
    reports the coincidence probability ``P_{1L}(t'')``.
    """
    if config.M != 2:
        raise ConfigError(f"quench detection needs M = 2, got {config.M}")
    phis = _check_grid(phis)
    _, psi, t_star = _noon_state(config)
    basis = config.basis()
    beta_free, t2 = free_splitter(config.L, config.J)
    quenched = ExperimentConfig(config.L, 2, 0.0, config.J, (split_impurity(beta_free),), t_max=1.0)
    U2 = Spectrum(quenched.hamiltonian()).propagator(t2)
    occ = [0] * config.L
    occ[0] = occ[-1] = 1
    row = basis.index_of(occ)
    probs = np.array([
        abs(U2[row] @ _phase_step(psi, basis, p, literal, config.U, beta_L)) ** 2 for p in phis
    ])
    return FringeScan(phis, probs, ideal_quench_printed(phis, 2), "quench", t_star, t2)


def local_extrema(phis, values):
    """Interior strict local maxima and minima positions of a sampled curve."""
    v = np.asarray(values)
    inner = slice(1, -1)
    is_max = (v[inner] > v[:-2]) & (v[inner] >= v[2:])
    is_min = (v[inner] < v[:-2]) & (v[inner] <= v[2:])
    phis = np.asarray(phis)[inner]
    return phis[is_max], phis[is_min]


# --- metrology ----------------------------------------------------------------

@dataclass(frozen=True)
class FisherReport:
    F_Q: float
    delta_phi: float
    mean_nL: float
    mean_nL2: float
    classical_bound: float
    quantum_bound: float


def fisher_from_state(psi, basis: FockBasis) -> FisherReport:
    """``F_Q = 4 Var(n_L)`` of a pure state with the phase generated at site ``L``."""
    p = np.abs(np.asarray(psi)) ** 2
    nL = basis.occupations[:, -1].astype(float)
    m1 = float(p @ nL)
    m2 = float(p @ nL**2)
    F = max(4.0 * (m2 - m1**2), 0.0)
    M = basis.particles
    return FisherReport(F, 1 / np.sqrt(F) if F > 0 else np.inf, m1, m2, 1 / np.sqrt(M), 1 / M)


def fisher_finite_difference(psi, basis: FockBasis, phi: float = 0.0, h: float = 1e-5) -> float:
    """``4(<d psi|d psi> - |<psi|d psi>|^2)`` for ``psi(phi) = exp(-i n_L phi) psi`` by central differences."""
    nL = basis.occupations[:, -1]
    psi = np.asarray(psi, dtype=complex)

    def state(x):
        return np.exp(-1j * nL * x) * psi

    s = state(phi)
    d = (state(phi + h) - state(phi - h)) / (2 * h)
    return float(4 * (np.vdot(d, d).real - abs(np.vdot(s, d)) ** 2))


def fisher_information(config: ExperimentConfig, phi: float = 0.0) -> FisherReport:
    """Quantum Fisher information of the split state ``psi(t*)``.

    The phase ``phi`` only rotates the state; for a pure state the
    variance of ``n_L`` does not depend on it.
    """
    if config.gamma:
        raise ConfigError("Fisher information is defined here for closed (gamma = 0) evolution")
    _, psi, _ = _noon_state(config)
    basis = config.basis()
    return fisher_from_state(np.exp(-1j * basis.occupations[:, -1] * phi) * psi, basis)
