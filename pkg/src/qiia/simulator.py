"""Dense statevector simulation of parametrized circuits.

Basis index ``i`` encodes occupations with qubit 0 as the least significant
bit; bitstrings are written ``q_{N-1} ... q_0`` (rightmost character is
qubit 0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qiia.errors import InputError
from qiia.hamiltonian import QubitHamiltonian, pauli_action, word_to_masks

MAX_QUBITS = 26
NORM_TOL = 1e-10

ONE_QUBIT_KINDS = frozenset({"X", "H", "SDG", "RZ", "RX"})
TWO_QUBIT_KINDS = frozenset({"CX", "ENT"})
PARAMETRIC_KINDS = frozenset({"RZ", "RX", "ENT"})

_FIXED_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
}


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits > MAX_QUBITS:
            raise InputError(f"statevector refused for {self.n_qubits} > {MAX_QUBITS} qubits")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise InputError(f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (norm^2 = {norm2!r})")
        object.__setattr__(self, "amplitudes", amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def support(self, tol: float = 1e-12) -> list[int]:
        return [int(i) for i in np.flatnonzero(np.abs(self.amplitudes) > tol)]


@dataclass(frozen=True)
class Gate:
    """One instruction. ``param`` is a float angle, a slot name, or ``None``.

    For ``CX`` and ``ENT`` the qubits are ``(control, target)``.
    """

    kind: str
    qubits: tuple[int, ...]
    param: float | str | None = None

    def __post_init__(self):
        if self.kind not in ONE_QUBIT_KINDS | TWO_QUBIT_KINDS:
            raise InputError(f"unknown gate kind {self.kind!r}")
        arity = 1 if self.kind in ONE_QUBIT_KINDS else 2
        if len(self.qubits) != arity or len(set(self.qubits)) != arity:
            raise InputError(f"{self.kind} needs {arity} distinct qubits, got {self.qubits}")
        if (self.kind in PARAMETRIC_KINDS) != (self.param is not None):
            raise InputError(f"{self.kind} parameter mismatch: {self.param!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    @property
    def is_bound(self) -> bool:
        return not isinstance(self.param, str)


@dataclass(frozen=True)
class CircuitIR:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    parameter_slots: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "parameter_slots", tuple(self.parameter_slots))
        if len(set(self.parameter_slots)) != len(self.parameter_slots):
            raise InputError("duplicate parameter slot names")
        slots = set(self.parameter_slots)
        used = set()
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise InputError(f"gate {g} acts outside {self.n_qubits} qubits")
            if isinstance(g.param, str):
                if g.param not in slots:
                    raise InputError(f"gate references undeclared slot {g.param!r}")
                used.add(g.param)
        unused = slots - used
        if unused:
            raise InputError(f"parameter slots never referenced: {sorted(unused)}")

    @property
    def n_parameters(self) -> int:
        return len(self.parameter_slots)

    def bind(self, params: Sequence[float]) -> CircuitIR:
        """Concrete circuit with every slot replaced by its value."""
        params = np.asarray(params, dtype=float).ravel()
        if params.shape != (self.n_parameters,):
            raise InputError(f"expected {self.n_parameters} parameters, got {params.size}")
        values = dict(zip(self.parameter_slots, params.tolist()))
        gates = tuple(
            Gate(g.kind, g.qubits, values[g.param]) if isinstance(g.param, str) else g
            for g in self.gates
        )
        return CircuitIR(self.n_qubits, gates)

    def __add__(self, other: CircuitIR) -> CircuitIR:
        if other.n_qubits != self.n_qubits:
            raise InputError("cannot concatenate circuits of different width")
        slots = self.parameter_slots + tuple(s for s in other.parameter_slots if s not in self.parameter_slots)
        return CircuitIR(self.n_qubits, self.gates + other.gates, slots)


def prepare_basis_state(n: int, occupation: str) -> StateVector:
    if len(occupation) != n or set(occupation) - {"0", "1"}:
        raise InputError(f"occupation {occupation!r} is not a {n}-bit string")
    amps = np.zeros(1 << n, dtype=complex)
    amps[int(occupation, 2)] = 1.0
    return StateVector(n, amps)


def bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def one_qubit_matrix(kind: str, theta: float | None = None) -> np.ndarray:
    if kind in _FIXED_1Q:
        return _FIXED_1Q[kind]
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if kind == "RZ":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    raise InputError(f"{kind} is not a one-qubit gate")


def _apply_1q(amps: np.ndarray, matrix: np.ndarray, q: int, n: int) -> np.ndarray:
    view = amps.reshape(1 << (n - 1 - q), 2, 1 << q)
    return np.einsum("ij,ajb->aib", matrix, view).reshape(-1)


def _pair_view(amps: np.ndarray, lo: int, hi: int, n: int) -> np.ndarray:
    # axes: (rest above hi, bit hi, between, bit lo, rest below lo)
    return amps.reshape(1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo)


def _apply_ent(amps: np.ndarray, theta: float, a: int, b: int, n: int) -> np.ndarray:
    lo, hi = min(a, b), max(a, b)
    out = amps.copy()
    v_in = _pair_view(amps, lo, hi, n)
    v_out = _pair_view(out, lo, hi, n)
    c, s = math.cos(theta), math.sin(theta)
    s01, s10 = v_in[:, 0, :, 1, :], v_in[:, 1, :, 0, :]
    v_out[:, 0, :, 1, :] = c * s01 - 1j * s * s10
    v_out[:, 1, :, 0, :] = c * s10 - 1j * s * s01
    return out


def _apply_cx(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    lo, hi = min(control, target), max(control, target)
    out = amps.copy()
    v_in = _pair_view(amps, lo, hi, n)
    v_out = _pair_view(out, lo, hi, n)
    if control == lo:
        v_out[:, 0, :, 1, :] = v_in[:, 1, :, 1, :]
        v_out[:, 1, :, 1, :] = v_in[:, 0, :, 1, :]
    else:
        v_out[:, 1, :, 0, :] = v_in[:, 1, :, 1, :]
        v_out[:, 1, :, 1, :] = v_in[:, 1, :, 0, :]
    return out


def apply_gate_array(amps: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Raw-array kernel behind :func:`apply_gate`; returns a new array."""
    if not gate.is_bound:
        raise InputError(f"gate {gate.kind}{gate.qubits} has unbound slot {gate.param!r}")
    if gate.kind == "ENT":
        return _apply_ent(amps, float(gate.param), *gate.qubits, n)
    if gate.kind == "CX":
        return _apply_cx(amps, *gate.qubits, n)
    return _apply_1q(amps, one_qubit_matrix(gate.kind, gate.param), gate.qubits[0], n)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if any(not 0 <= q < state.n_qubits for q in gate.qubits):
        raise InputError(f"gate {gate} acts outside {state.n_qubits} qubits")
    return StateVector(state.n_qubits, apply_gate_array(state.amplitudes, gate, state.n_qubits))


def run_circuit_array(circuit: CircuitIR, params: Sequence[float], amps: np.ndarray) -> np.ndarray:
    bound = circuit.bind(params)
    n = circuit.n_qubits
    for g in bound.gates:
        amps = apply_gate_array(amps, g, n)
    return amps


def run_circuit(circuit: CircuitIR, params: Sequence[float], initial: StateVector) -> StateVector:
    """Apply the gates of ``circuit`` (slots bound to ``params``) in list order."""
    if initial.n_qubits != circuit.n_qubits:
        raise InputError(f"circuit has {circuit.n_qubits} qubits, state has {initial.n_qubits}")
    params = np.asarray(params, dtype=float).ravel()
    if params.size != circuit.n_parameters:
        raise InputError(f"expected {circuit.n_parameters} parameters, got {params.size}")
    return StateVector(circuit.n_qubits, run_circuit_array(circuit, params, initial.amplitudes))


class CompiledCircuit:
    """Circuit lowered to kernel calls with slot indices resolved once.

    Used by optimizers that evaluate the same circuit thousands of times;
    results are identical to :func:`run_circuit`.
    """

    def __init__(self, circuit: CircuitIR):
        self.n_qubits = circuit.n_qubits
        self.n_parameters = circuit.n_parameters
        index = {s: i for i, s in enumerate(circuit.parameter_slots)}
        self._ops = [
            (g.kind, g.qubits, index[g.param] if isinstance(g.param, str) else None, g.param)
            for g in circuit.gates
        ]

    def __call__(self, params: np.ndarray, amps: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        for kind, qubits, slot, literal in self._ops:
            theta = params[slot] if slot is not None else literal
            if kind == "ENT":
                amps = _apply_ent(amps, float(theta), *qubits, n)
            elif kind == "CX":
                amps = _apply_cx(amps, *qubits, n)
            else:
                amps = _apply_1q(amps, one_qubit_matrix(kind, theta), qubits[0], n)
        return amps


def pauli_expectation(amps: np.ndarray, word: str, n: int) -> complex:
    rows, phases = pauli_action(*word_to_masks(word), n)
    return complex(np.vdot(amps[rows], phases * amps))


def expectation(state: StateVector, h: QubitHamiltonian) -> float:
    """``<psi|H|psi>`` summed term by term in canonical word order.

    Raises:
        InputError: on qubit-count mismatch or if the imaginary part exceeds 1e-8.
    """
    if state.n_qubits != h.n_qubits:
        raise InputError(f"state has {state.n_qubits} qubits, Hamiltonian has {h.n_qubits}")
    values = [c * pauli_expectation(state.amplitudes, w, h.n_qubits) for w, c in h.terms.items()]
    re = math.fsum(v.real for v in values)
    im = math.fsum(v.imag for v in values)
    if abs(im) > 1e-8:
        raise InputError(f"expectation has imaginary part {im!r}")
    return re


def sample(state: StateVector, shots: int, seed: int = 0) -> dict[str, int]:
    """Multinomial shot counts keyed by bitstring; deterministic for a given seed."""
    if shots <= 0:
        raise InputError("shots must be positive")
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = np.random.default_rng(seed).multinomial(shots, probs)
    return {bitstring(int(i), state.n_qubits): int(counts[i]) for i in np.flatnonzero(counts)}


# --------------------------------------------------------------------------
# State file
# --------------------------------------------------------------------------


def format_state(state: StateVector, tol: float = 0.0) -> str:
    lines = [f"NQUBITS {state.n_qubits}"]
    for i, a in enumerate(state.amplitudes):
        if abs(a) > tol:
            lines.append(f"{bitstring(i, state.n_qubits)} {float(a.real)!r} {float(a.imag)!r}")
    return "\n".join(lines) + "\n"


def parse_state(text: str) -> StateVector:
    """Load a state file, renormalizing small norm drift (1e-6 .. 1e-3) with a warning."""
    n = None
    entries: dict[int, complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0].upper() == "NQUBITS":
            if n is not None or len(fields) != 2:
                raise InputError(f"line {lineno}: bad or duplicate NQUBITS record")
            try:
                n = int(fields[1])
            except ValueError:
                raise InputError(f"line {lineno}: bad qubit count {fields[1]!r}") from None
            continue
        if n is None:
            raise InputError(f"line {lineno}: amplitude before NQUBITS header")
        if len(fields) != 3 or len(fields[0]) != n or set(fields[0]) - {"0", "1"}:
            raise InputError(f"line {lineno}: expected '<{n}-bit string> <re> <im>'")
        try:
            amp = complex(float(fields[1]), float(fields[2]))
        except ValueError:
            raise InputError(f"line {lineno}: bad amplitude") from None
        idx = int(fields[0], 2)
        if idx in entries:
            raise InputError(f"line {lineno}: duplicate basis state {fields[0]}")
        entries[idx] = amp
    if n is None:
        raise InputError("missing NQUBITS header")
    if n > MAX_QUBITS:
        raise InputError(f"statevector refused for {n} > {MAX_QUBITS} qubits")
    amps = np.zeros(1 << n, dtype=complex)
    for idx, amp in entries.items():
        amps[idx] = amp
    norm = float(np.linalg.norm(amps))
    drift = abs(norm - 1.0)
    if drift > 1e-3:
        raise InputError(f"state norm {norm!r} too far from 1")
    if drift > 1e-6:
        warnings.warn(f"renormalizing state with norm {norm:.9f}", stacklevel=2)
    if drift > 1e-12:
        # silent below 1e-6; rounding-level drift is left alone so files round-trip
        amps = amps / norm
    return StateVector(n, amps)
