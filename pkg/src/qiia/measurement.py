"""Qubit-wise commuting grouping, basis rotations and shot-based energy estimates.

Words follow the package convention: the rightmost letter acts on qubit 0.
A clique's ``merged_word`` carries, per qubit, the one non-identity letter
shared by its members (or ``I``); measuring every member after a single
rotation to the Z basis is then possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qiia.errors import DomainError, InputError, InvalidOptionError
from qiia.hamiltonian import QubitHamiltonian
from qiia.simulator import Gate, StateVector, apply_gate_array, pauli_expectation, sample

SWAP_COEFF_TOL = 1e-12
NUMERIC_MERGE_TOL = 1e-10

_XY_SWAP = str.maketrans("XY", "YX")


def qwc(a: str, b: str) -> bool:
    """True iff at every position the letters agree or one of them is ``I``."""
    if len(a) != len(b):
        raise InputError(f"word lengths differ: {len(a)} vs {len(b)}")
    return all(p == q or p == "I" or q == "I" for p, q in zip(a, b))


def _merge(a: str, b: str) -> str:
    return "".join(q if p == "I" else p for p, q in zip(a, b))


@dataclass(frozen=True)
class Clique:
    """Mutually qubit-wise commuting terms.

    ``indices`` point into the Hamiltonian's canonical term order.
    """

    indices: tuple[int, ...]
    words: tuple[str, ...]
    coefficients: tuple[float, ...]
    merged_word: str

    @property
    def rotated(self) -> bool:
        return any(letter in "XY" for letter in self.merged_word)

    def __len__(self) -> int:
        return len(self.words)


def greedy_cliques(h: QubitHamiltonian) -> list[Clique]:
    """First-fit grouping in order of decreasing ``|coefficient|`` (ties by word)."""
    words = list(h.terms)
    order = sorted(range(len(words)), key=lambda k: (-abs(h.terms[words[k]]), words[k]))
    groups: list[list[int]] = []
    merged: list[str] = []
    for k in order:
        w = words[k]
        for g, m in enumerate(merged):
            if qwc(m, w):
                groups[g].append(k)
                merged[g] = _merge(m, w)
                break
        else:
            groups.append([k])
            merged.append(w)
    return [
        Clique(
            tuple(g),
            tuple(words[k] for k in g),
            tuple(float(h.terms[words[k]].real) for k in g),
            m,
        )
        for g, m in zip(groups, merged)
    ]


def rotation_circuit(clique: Clique) -> list[Gate]:
    """Gates taking the clique's shared eigenbasis to the computational basis.

    X gets H; Y gets SDG then H; Z and I need nothing.
    """
    n = len(clique.merged_word)
    gates: list[Gate] = []
    for q in range(n):
        letter = clique.merged_word[n - 1 - q]
        if letter == "X":
            gates.append(Gate("H", (q,)))
        elif letter == "Y":
            gates += [Gate("SDG", (q,)), Gate("H", (q,))]
    return gates


def exact_contribution(state: StateVector, clique: Clique) -> float:
    """Statevector value of ``sum_k c_k <P_k>`` over the clique."""
    n = state.n_qubits
    return math.fsum(
        c * pauli_expectation(state.amplitudes, w, n).real
        for w, c in zip(clique.words, clique.coefficients)
    )


@dataclass(frozen=True)
class CliqueEstimate:
    contribution: float
    standard_error: float
    retained: int
    shots: int


def _support_mask(word: str) -> int:
    n = len(word)
    return sum(1 << (n - 1 - i) for i, letter in enumerate(word) if letter != "I")


def estimate_clique(
    state: StateVector,
    clique: Clique,
    shots: int,
    seed: int = 0,
    postselect: bool = False,
    n_electrons: int | None = None,
) -> CliqueEstimate:
    """Sample the rotated state and average the per-shot clique energy.

    Each member contributes ``c_k * (-1)**parity(outcome & support_k)`` to a
    shot's energy. With ``postselect`` the outcomes whose Hamming weight
    differs from ``n_electrons`` are dropped first.

    Raises:
        InvalidOptionError: postselection on a clique that needs a rotation,
            or without an electron count.
        DomainError: postselection keeps no shots.
    """
    if postselect:
        if clique.rotated:
            raise InvalidOptionError(
                f"postselection needs a Z/I clique, merged word is {clique.merged_word}"
            )
        if n_electrons is None:
            raise InvalidOptionError("postselection needs the electron count")
    if all(w == "I" * len(w) for w in clique.words):
        return CliqueEstimate(math.fsum(clique.coefficients), 0.0, shots, shots)

    amps = state.amplitudes
    for g in rotation_circuit(clique):
        amps = apply_gate_array(amps, g, state.n_qubits)
    counts = sample(StateVector(state.n_qubits, amps), shots, seed)

    outcomes = np.array([int(b, 2) for b in counts], dtype=np.int64)
    weights = np.array(list(counts.values()), dtype=np.int64)
    if postselect:
        keep = np.array([int(o).bit_count() == n_electrons for o in outcomes], dtype=bool)
        outcomes, weights = outcomes[keep], weights[keep]
    retained = int(weights.sum())
    if retained == 0:
        raise DomainError("postselection discarded every shot")

    energy = np.zeros(len(outcomes))
    for w, c in zip(clique.words, clique.coefficients):
        mask = _support_mask(w)
        parity = np.array([(int(o) & mask).bit_count() & 1 for o in outcomes])
        energy += c * (1 - 2 * parity)
    mean = float(np.sum(weights * energy) / retained)
    if retained > 1:
        var = float(np.sum(weights * (energy - mean) ** 2) / (retained - 1))
        stderr = math.sqrt(var / retained)
    else:
        stderr = math.inf
    return CliqueEstimate(mean, stderr, retained, shots)


@dataclass(frozen=True)
class Superclique:
    """Cliques with provably (or numerically) equal energy contributions.

    ``witness`` is ``"xy-swap"`` when members map onto each other under the
    global X<->Y letter swap, ``"numeric"`` when a numerical merge was used
    as well, and ``"single"`` for a lone clique.
    """

    cliques: tuple[int, ...]
    witness: str


def _swap_signature(clique: Clique, swap: bool) -> tuple:
    words = [w.translate(_XY_SWAP) if swap else w for w in clique.words]
    return tuple(sorted(zip(words, clique.coefficients)))


def _same_terms(a: tuple, b: tuple) -> bool:
    return len(a) == len(b) and all(
        wa == wb and abs(ca - cb) <= SWAP_COEFF_TOL for (wa, ca), (wb, cb) in zip(a, b)
    )


def supercliques(cliques: Sequence[Clique], state: StateVector | None = None) -> list[Superclique]:
    """Partition cliques into supercliques.

    The structural pass pairs cliques whose terms coincide after swapping X
    and Y everywhere (coefficients equal to 1e-12). With a state, a second
    pass merges groups whose exact contributions agree within 1e-10.
    """
    plain = [_swap_signature(c, False) for c in cliques]
    swapped = [_swap_signature(c, True) for c in cliques]
    groups: list[list[int]] = []
    assigned = [False] * len(cliques)
    for i in range(len(cliques)):
        if assigned[i]:
            continue
        members = [i]
        assigned[i] = True
        for j in range(i + 1, len(cliques)):
            if not assigned[j] and _same_terms(swapped[i], plain[j]):
                members.append(j)
                assigned[j] = True
        groups.append(members)
    witness = ["xy-swap" if len(g) > 1 else "single" for g in groups]

    if state is not None:
        values = [sum(exact_contribution(state, cliques[k]) for k in g) / len(g) for g in groups]
        merged_groups: list[list[int]] = []
        merged_witness: list[str] = []
        reps: list[float] = []
        for g, v, w in zip(groups, values, witness):
            for m, r in enumerate(reps):
                if abs(r - v) <= NUMERIC_MERGE_TOL:
                    merged_groups[m] += g
                    merged_witness[m] = "numeric"
                    break
            else:
                merged_groups.append(list(g))
                merged_witness.append(w)
                reps.append(v)
        groups, witness = merged_groups, merged_witness
    return [Superclique(tuple(sorted(g)), w) for g, w in zip(groups, witness)]


def superclique_contribution(state: StateVector, cliques: Sequence[Clique], s: Superclique) -> float:
    return math.fsum(exact_contribution(state, cliques[k]) for k in s.cliques)


def rank_supercliques(
    state: StateVector, cliques: Sequence[Clique], supers: Sequence[Superclique]
) -> list[int]:
    """Superclique indices by decreasing ``|contribution|`` (ties by index)."""
    values = [abs(superclique_contribution(state, cliques, s)) for s in supers]
    return sorted(range(len(supers)), key=lambda k: (-values[k], k))


def format_grouping_report(
    cliques: Sequence[Clique],
    supers: Sequence[Superclique],
    estimates: dict[int, CliqueEstimate] | None = None,
    exact: dict[int, float] | None = None,
) -> str:
    """Human-readable listing of cliques, superclique membership and estimates."""
    lines = [f"cliques = {len(cliques)}", f"supercliques = {len(supers)}", ""]
    for k, c in enumerate(cliques):
        lines.append(f"clique {k} merged {c.merged_word} terms {len(c)}")
        for w, coef in zip(c.words, c.coefficients):
            lines.append(f"  {w} {coef!r}")
        if exact and k in exact:
            lines.append(f"  exact {exact[k]!r}")
        if estimates and k in estimates:
            e = estimates[k]
            lines.append(
                f"  estimate {e.contribution!r} stderr {e.standard_error!r} "
                f"retained {e.retained}/{e.shots}"
            )
    lines.append("")
    for k, s in enumerate(supers):
        lines.append(f"superclique {k} {s.witness} cliques {' '.join(map(str, s.cliques))}")
    return "\n".join(lines) + "\n"
