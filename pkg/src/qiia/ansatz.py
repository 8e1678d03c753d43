"""Entanglement-guided ansatz construction, the matchgate entangler and resource metrics.

Circuit layout: X gates preparing the reference determinant, one RZ per
qubit, then one block per selected center qubit (highest entropy first).
A block has two sections over the same MI-ordered partner list: the center
controls in the first, the partners control in the second. Every entangler
owns its own parameter slot.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from qiia.entanglement import EntanglementMap, entangler_order, rank_blocks
from qiia.errors import DomainError, InputError
from qiia.simulator import PARAMETRIC_KINDS, TWO_QUBIT_KINDS, CircuitIR, Gate

DEFAULT_PRUNE_TAU = 1e-3


@dataclass(frozen=True)
class Block:
    center: int
    partners: tuple[int, ...]


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    reference_occupation: str
    blocks: tuple[Block, ...]
    parameter_layout: tuple[str, ...]

    def __post_init__(self):
        centers = [b.center for b in self.blocks]
        if len(set(centers)) != len(centers):
            raise InputError(f"block centers must be distinct, got {centers}")
        for b in self.blocks:
            if b.center in b.partners:
                raise InputError(f"block {b.center} lists itself as a partner")
        expected = self.n_qubits + sum(2 * len(b.partners) for b in self.blocks)
        if len(self.parameter_layout) != expected:
            raise InputError("parameter layout does not match the block structure")


def _ent_slot(block: int, section: int, control: int, target: int) -> str:
    return f"ent_b{block}_s{section}_{control}_{target}"


def build_qiia(
    emap: EntanglementMap, n_blocks: int, reference: str, cutoff: float = 0.0
) -> tuple[AnsatzSpec, CircuitIR]:
    """Build the ansatz deterministically from an entanglement map.

    Args:
        emap: entropies and mutual information of a trial state.
        n_blocks: number of blocks (centers of largest entropy).
        reference: occupation bitstring ``q_{N-1}..q_0`` of the input determinant.
        cutoff: partners with ``I < cutoff`` are left out of a block.

    Raises:
        InputError: bad block count or reference width.
        DomainError: the cutoff leaves some block without partners.
    """
    n = emap.n_qubits
    if len(reference) != n or set(reference) - {"0", "1"}:
        raise InputError(f"reference {reference!r} is not a {n}-bit string")
    if not 0 <= n_blocks <= n:
        raise InputError(f"n_blocks={n_blocks} outside 0..{n}")

    blocks = []
    for center in rank_blocks(emap, n_blocks):
        partners = tuple(entangler_order(emap, center, cutoff))
        if not partners:
            raise DomainError(f"cutoff {cutoff} removes every partner of block centered on qubit {center}")
        blocks.append(Block(center, partners))
    return ansatz_from_blocks(n, reference, blocks)


def ansatz_from_blocks(
    n: int, reference: str, blocks: Sequence[Block]
) -> tuple[AnsatzSpec, CircuitIR]:
    gates: list[Gate] = []
    slots: list[str] = []
    for q in range(n):
        if reference[n - 1 - q] == "1":
            gates.append(Gate("X", (q,)))
    for q in range(n):
        slots.append(f"rz_{q}")
        gates.append(Gate("RZ", (q,), slots[-1]))
    for b, block in enumerate(blocks):
        for section in (1, 2):
            for j in block.partners:
                control, target = (block.center, j) if section == 1 else (j, block.center)
                slots.append(_ent_slot(b, section, control, target))
                gates.append(Gate("ENT", (control, target), slots[-1]))
    spec = AnsatzSpec(n, reference, tuple(blocks), tuple(slots))
    return spec, CircuitIR(n, tuple(gates), tuple(slots))


def ent_matrix(theta: float) -> np.ndarray:
    """Particle-conserving matchgate, basis ``|00>, |01>, |10>, |11>``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [[1, 0, 0, 0], [0, c, -1j * s, 0], [0, -1j * s, c, 0], [0, 0, 0, 1]], dtype=complex
    )


def decompose_entangler(theta: float | str, control: int, target: int) -> list[Gate]:
    """Two-CX circuit equal to ``ENT(theta)`` (exactly, including global phase).

    ``ENT = exp(-i theta (XX + YY)/2)``. Conjugating by ``RX(pi/2)`` on both
    qubits turns ``YY`` into ``ZZ``, and ``exp(-i a (XX + ZZ))`` is a single
    RX/RZ pair sandwiched between two CX gates.
    """
    half = math.pi / 2
    return [
        Gate("RX", (control,), half),
        Gate("RX", (target,), half),
        Gate("CX", (control, target)),
        Gate("RX", (control,), theta),
        Gate("RZ", (target,), theta),
        Gate("CX", (control, target)),
        Gate("RX", (control,), -half),
        Gate("RX", (target,), -half),
    ]


def decompose_circuit(circuit: CircuitIR) -> CircuitIR:
    gates: list[Gate] = []
    for g in circuit.gates:
        if g.kind == "ENT":
            gates.extend(decompose_entangler(g.param, *g.qubits))
        else:
            gates.append(g)
    return CircuitIR(circuit.n_qubits, tuple(gates), circuit.parameter_slots)


def prune_small_angles(
    circuit: CircuitIR, params: Sequence[float], tau: float = DEFAULT_PRUNE_TAU
) -> tuple[CircuitIR, np.ndarray]:
    """Drop RZ/RX/ENT gates whose bound angle satisfies ``|theta| < tau``.

    Slots that are no longer referenced are removed from the layout and from
    the returned parameter vector; surviving gates keep their order.
    """
    params = np.asarray(params, dtype=float).ravel()
    if params.size != circuit.n_parameters:
        raise InputError(f"expected {circuit.n_parameters} parameters, got {params.size}")
    values = dict(zip(circuit.parameter_slots, params.tolist()))

    kept = []
    for g in circuit.gates:
        if g.kind in PARAMETRIC_KINDS:
            angle = values[g.param] if isinstance(g.param, str) else g.param
            if abs(angle) < tau:
                continue
        kept.append(g)
    used = {g.param for g in kept if isinstance(g.param, str)}
    slots = tuple(s for s in circuit.parameter_slots if s in used)
    return CircuitIR(circuit.n_qubits, tuple(kept), slots), np.array([values[s] for s in slots])


@dataclass(frozen=True)
class ResourceReport:
    parameter_count: int
    one_qubit_gate_count: int
    two_qubit_gate_count: int
    depth: int

    def as_dict(self) -> dict[str, int]:
        return asdict(self)

    def to_text(self, prefix: str = "") -> str:
        return "".join(f"{prefix}{k} = {v}\n" for k, v in self.as_dict().items())


def circuit_depth(circuit: CircuitIR) -> int:
    """ASAP layering: each gate starts after the latest gate on any of its qubits."""
    level = [0] * circuit.n_qubits
    for g in circuit.gates:
        t = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = t
    return max(level, default=0)


def count_resources(circuit: CircuitIR, decomposed: bool = False) -> ResourceReport:
    if decomposed:
        circuit = decompose_circuit(circuit)
    two = sum(1 for g in circuit.gates if g.kind in TWO_QUBIT_KINDS)
    return ResourceReport(
        parameter_count=circuit.n_parameters,
        one_qubit_gate_count=len(circuit.gates) - two,
        two_qubit_gate_count=two,
        depth=circuit_depth(circuit),
    )


# --------------------------------------------------------------------------
# Circuit file
# --------------------------------------------------------------------------


def _format_param(p: float | str) -> str:
    return p if isinstance(p, str) else repr(float(p))


def format_circuit(circuit: CircuitIR) -> str:
    lines = [f"QUBITS {circuit.n_qubits}"]
    lines += [f"PARAM {s}" for s in circuit.parameter_slots]
    for g in circuit.gates:
        fields = ["GATE", g.kind, *map(str, g.qubits)]
        if g.param is not None:
            fields.append(_format_param(g.param))
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> CircuitIR:
    n = None
    slots: list[str] = []
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *fields = line.split()
        try:
            if head == "QUBITS":
                if n is not None or len(fields) != 1:
                    raise InputError("bad or duplicate QUBITS record")
                n = int(fields[0])
            elif head == "PARAM":
                if len(fields) != 1:
                    raise InputError("PARAM takes one name")
                slots.append(fields[0])
            elif head == "GATE":
                kind, *rest = fields
                arity = 2 if kind in TWO_QUBIT_KINDS else 1
                qubits = tuple(int(q) for q in rest[:arity])
                extra = rest[arity:]
                param: float | str | None = None
                if kind in PARAMETRIC_KINDS:
                    if len(extra) != 1:
                        raise InputError(f"{kind} needs one angle or slot")
                    param = extra[0] if extra[0] in slots else float(extra[0])
                elif extra:
                    raise InputError(f"{kind} takes no parameter")
                gates.append(Gate(kind, qubits, param))
            else:
                raise InputError(f"unknown record {head!r}")
        except (InputError, ValueError) as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    if n is None:
        raise InputError("missing QUBITS record")
    return CircuitIR(n, tuple(gates), tuple(slots))


def format_vector(names: Sequence[str], values: Sequence[float]) -> str:
    return "".join(f"{name} {float(v)!r}\n" for name, v in zip(names, values))


def parse_vector(text: str, names: Sequence[str] | None = None) -> np.ndarray:
    """Read a ``name value`` per-line vector; reorders to ``names`` when given."""
    entries: list[tuple[str, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            if len(fields) != 2:
                raise ValueError("expected '<name> <value>'")
            entries.append((fields[0], float(fields[1])))
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    if names is None:
        return np.array([v for _, v in entries])
    lookup = dict(entries)
    missing = [s for s in names if s not in lookup]
    if missing or len(lookup) != len(names):
        raise InputError(f"parameter vector does not match circuit slots (missing {missing[:3]})")
    return np.array([lookup[s] for s in names])
