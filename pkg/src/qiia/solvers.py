"""VQE minimization, fixed-particle-number exact diagonalization, and the PFD metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.sparse.linalg import eigsh

from qiia.errors import DomainError, InputError
from qiia.hamiltonian import QubitHamiltonian, pauli_action, sparse_matrix, word_to_masks
from qiia.simulator import CircuitIR, CompiledCircuit, StateVector, expectation

CASCI_MAX_QUBITS = 16
DENSE_SECTOR_LIMIT = 4000
FD_STEP = 1e-5
DEFAULT_TOL = 1e-6
DEFAULT_MAX_EVALS = 50_000
INIT_SPREAD = 0.1


@dataclass(frozen=True)
class SectorBasis:
    n_qubits: int
    n_electrons: int
    determinants: np.ndarray

    @classmethod
    def build(cls, n_qubits: int, n_electrons: int) -> SectorBasis:
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        weights = np.array([int(i).bit_count() for i in idx]) if n_qubits else np.zeros(1, int)
        return cls(n_qubits, n_electrons, idx[weights == n_electrons])

    def __len__(self) -> int:
        return len(self.determinants)


def sector_matrix(h: QubitHamiltonian, basis: SectorBasis) -> np.ndarray:
    """Real symmetric restriction of ``h`` to the determinants of ``basis``."""
    n = h.n_qubits
    dets = basis.determinants
    position = np.full(1 << n, -1, dtype=np.int64)
    position[dets] = np.arange(len(dets))
    m = np.zeros((len(dets), len(dets)), dtype=complex)
    for word, c in h.terms.items():
        rows, phases = pauli_action(*word_to_masks(word), n)
        target = position[rows[dets]]
        inside = target >= 0
        np.add.at(m, (target[inside], np.flatnonzero(inside)), c * phases[dets][inside])
    if np.max(np.abs(m.imag), initial=0.0) > 1e-10:
        raise InputError("sector Hamiltonian is not real")
    return m.real


@dataclass(frozen=True)
class CASCIResult:
    energy: float
    state: StateVector
    sector_dimension: int


def casci_ground(h: QubitHamiltonian, n_electrons: int) -> CASCIResult:
    """Lowest eigenpair of ``h`` within the Hamming-weight ``n_electrons`` sector.

    The eigenvector is embedded back into the full register with its largest
    component made positive.
    """
    n = h.n_qubits
    if n > CASCI_MAX_QUBITS:
        raise InputError(f"exact diagonalization refused for {n} > {CASCI_MAX_QUBITS} qubits")
    if not 0 <= n_electrons <= n:
        raise DomainError(f"empty sector: {n_electrons} electrons in {n} qubits")
    basis = SectorBasis.build(n, n_electrons)
    m = sector_matrix(h, basis)
    if len(basis) <= DENSE_SECTOR_LIMIT:
        w, v = np.linalg.eigh(m)
        energy, vec = float(w[0]), v[:, 0]
    else:
        w, v = eigsh(m, k=1, which="SA")
        energy, vec = float(w[0]), v[:, 0]
    vec = vec / np.linalg.norm(vec)
    pivot = int(np.argmax(np.abs(vec)))
    if vec[pivot] < 0:
        vec = -vec
    amps = np.zeros(1 << n, dtype=complex)
    amps[basis.determinants] = vec
    return CASCIResult(energy, StateVector(n, amps), len(basis))


@dataclass(frozen=True)
class VQEResult:
    energy: float
    parameters: np.ndarray
    evaluations: int
    converged: bool
    seed: int
    iterations: int = 0
    trace: tuple[float, ...] = field(default=(), repr=False)


class _BudgetExhausted(Exception):
    pass


class _Converged(Exception):
    pass


class _Objective:
    def __init__(self, h: QubitHamiltonian, circuit: CircuitIR, initial: np.ndarray, max_evals: int):
        self.matrix = sparse_matrix(h)
        self.run = CompiledCircuit(circuit)
        self.initial = initial
        self.max_evals = max_evals
        self.evaluations = 0
        self.best = (math.inf, None)

    def __call__(self, theta: np.ndarray) -> float:
        if self.evaluations >= self.max_evals:
            raise _BudgetExhausted
        self.evaluations += 1
        e = self.energy(theta)
        if e < self.best[0]:
            self.best = (e, theta.copy())
        return e

    def energy(self, theta: np.ndarray) -> float:
        psi = self.run(theta, self.initial)
        return float(np.vdot(psi, self.matrix @ psi).real)

    def gradient(self, theta: np.ndarray, step: float = FD_STEP) -> np.ndarray:
        grad = np.empty_like(theta)
        for k in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[k] += step
            down[k] -= step
            grad[k] = (self(up) - self(down)) / (2 * step)
        return grad


def initial_parameters(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-INIT_SPREAD, INIT_SPREAD, size=n)


def vqe_minimize(
    h: QubitHamiltonian,
    circuit: CircuitIR,
    init: Sequence[float] | None = None,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
    initial_state: StateVector | None = None,
) -> VQEResult:
    """Minimize ``<psi(theta)|H|psi(theta)>`` with finite-difference SLSQP.

    Gradients are central differences with step 1e-5. The run stops once two
    successive iterates' energies differ by less than ``tol``. If the
    evaluation budget runs out first, the best point seen is returned with
    ``converged=False``. Without ``init`` the start is uniform in
    ``[-0.1, 0.1]`` drawn from ``seed``.
    """
    if circuit.n_qubits != h.n_qubits:
        raise InputError(f"circuit has {circuit.n_qubits} qubits, Hamiltonian has {h.n_qubits}")
    start = initial_state or StateVector(h.n_qubits, _zero_state(h.n_qubits))
    x0 = initial_parameters(circuit.n_parameters, seed) if init is None else np.asarray(init, float)
    if x0.shape != (circuit.n_parameters,):
        raise InputError(f"expected {circuit.n_parameters} initial parameters, got {x0.size}")

    objective = _Objective(h, circuit, start.amplitudes, max_evals)

    def final(theta, converged, iterations, trace):
        state = StateVector(h.n_qubits, objective.run(theta, start.amplitudes))
        return VQEResult(
            energy=expectation(state, h),
            parameters=np.array(theta),
            evaluations=objective.evaluations,
            converged=converged,
            seed=seed,
            iterations=iterations,
            trace=tuple(trace),
        )

    if circuit.n_parameters == 0:
        e = objective(x0)
        return final(x0, True, 0, [e])

    trace = [objective(x0)]
    last = {"x": x0, "e": trace[0]}

    def callback(xk):
        e = objective(xk)
        trace.append(min(e, trace[-1]))
        converged_now = abs(last["e"] - e) < tol
        last.update(x=np.array(xk), e=e)
        if converged_now:
            raise _Converged

    try:
        res = optimize.minimize(
            objective,
            x0,
            jac=objective.gradient,
            method="SLSQP",
            callback=callback,
            options={"ftol": tol, "maxiter": max_evals},
        )
        converged = bool(res.success)
        theta = res.x
    except _Converged:
        converged = True
        theta = last["x"]
    except _BudgetExhausted:
        converged = False
        theta = objective.best[1]
    if objective.best[0] < objective.energy(theta):
        theta = objective.best[1]
    return final(theta, converged, len(trace) - 1, trace)


def _zero_state(n: int) -> np.ndarray:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return amps


def pfd(e: float, e_ref: float) -> float:
    """Percentage fractional difference ``100 (e_ref - e) / e_ref``."""
    if e_ref == 0:
        raise DomainError("PFD undefined for a zero reference energy")
    return 100.0 * (e_ref - e) / e_ref
