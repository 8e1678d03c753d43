"""Reduced density matrices, von Neumann entropies and pairwise mutual information.

Entropies are in bits. Rankings treat values within ``TIE_TOL`` as equal and
break ties by ascending qubit index, so structurally equal quantities (for
example two perfectly correlated qubits) order deterministically even when
their floating-point values differ in the last ulp.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from qiia.errors import InputError
from qiia.simulator import StateVector

EIG_CLAMP = 1e-12
TIE_TOL = 1e-10
MAX_KEEP = 12


@dataclass(frozen=True)
class DensityMatrix:
    qubits: tuple[int, ...]
    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EntanglementMap:
    """Per-qubit entropies ``S_i`` and the symmetric matrix ``I_ij`` (zero diagonal)."""

    n_qubits: int
    entropy: np.ndarray
    mutual_information: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.entropy, dtype=float)
        mi = np.asarray(self.mutual_information, dtype=float)
        if s.shape != (self.n_qubits,) or mi.shape != (self.n_qubits, self.n_qubits):
            raise InputError("entanglement map shapes do not match the qubit count")
        if not np.allclose(mi, mi.T, atol=1e-12) or np.any(np.diag(mi) != 0):
            raise InputError("mutual information must be symmetric with zero diagonal")
        object.__setattr__(self, "entropy", s)
        object.__setattr__(self, "mutual_information", mi)


def reduced_density(state: StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Partial trace onto ``keep``; the lowest kept qubit is the least significant bit."""
    n = state.n_qubits
    keep = tuple(sorted(set(int(q) for q in keep)))
    if not keep:
        raise InputError("keep subset is empty")
    if any(not 0 <= q < n for q in keep):
        raise InputError(f"keep subset {keep} out of range for {n} qubits")
    if len(keep) > MAX_KEEP:
        raise InputError(f"reduced density refused for {len(keep)} > {MAX_KEEP} qubits")
    psi = state.amplitudes.reshape((2,) * n)
    # tensor axis a holds qubit n-1-a
    kept_axes = [n - 1 - q for q in reversed(keep)]
    traced_axes = [a for a in range(n) if a not in kept_axes]
    mat = np.transpose(psi, kept_axes + traced_axes).reshape(1 << len(keep), -1)
    return DensityMatrix(keep, mat @ mat.conj().T)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """``-sum(lam * log2(lam))`` over the spectrum, with ``0 log 0 = 0``."""
    m = rho.matrix
    trace = np.trace(m).real
    if abs(trace - 1.0) > 1e-8:
        raise InputError(f"density matrix trace {trace!r} deviates from 1")
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if lam.min() < -EIG_CLAMP:
        raise InputError(f"density matrix has eigenvalue {lam.min()!r} < 0")
    lam = lam[lam > 0.0]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def _pair_entropies(state: StateVector) -> tuple[np.ndarray, np.ndarray]:
    n = state.n_qubits
    single = np.array([von_neumann_entropy(reduced_density(state, [i])) for i in range(n)])
    joint = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            joint[i, j] = joint[j, i] = von_neumann_entropy(reduced_density(state, [i, j]))
    return single, joint


def mutual_information_matrix(state: StateVector) -> EntanglementMap:
    n = state.n_qubits
    if n > 20:
        raise InputError(f"mutual information refused for {n} > 20 qubits")
    single, joint = _pair_entropies(state)
    mi = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = single[i] + single[j] - joint[i, j]
            # subadditivity; only round-off can push this below zero
            mi[i, j] = mi[j, i] = value if value > EIG_CLAMP else 0.0
    return EntanglementMap(n, single, mi)


def _descending(values: Sequence[float], indices: Iterable[int]) -> list[int]:
    def cmp(a: int, b: int) -> int:
        if abs(values[a] - values[b]) > TIE_TOL:
            return -1 if values[a] > values[b] else 1
        return a - b

    return sorted(indices, key=functools.cmp_to_key(cmp))


def rank_blocks(emap: EntanglementMap, n_blocks: int) -> list[int]:
    """Qubits with the ``n_blocks`` largest single-qubit entropies, largest first."""
    if not 0 <= n_blocks <= emap.n_qubits:
        raise InputError(f"n_blocks={n_blocks} outside 0..{emap.n_qubits}")
    return _descending(emap.entropy, range(emap.n_qubits))[:n_blocks]


def entangler_order(emap: EntanglementMap, center: int, cutoff: float = 0.0) -> list[int]:
    """Partners ``j`` of ``center`` with ``I_center,j >= cutoff``, by decreasing MI."""
    if not 0 <= center < emap.n_qubits:
        raise InputError(f"center {center} out of range")
    row = emap.mutual_information[center]
    partners = [j for j in range(emap.n_qubits) if j != center and row[j] >= cutoff]
    return _descending(row, partners)


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------


def format_map_csv(emap: EntanglementMap) -> str:
    """``i,j,value`` rows for every pair ``i < j``, then ``S,i,value`` rows."""
    lines = ["i,j,value"]
    n = emap.n_qubits
    for i in range(n):
        for j in range(i + 1, n):
            lines.append(f"{i},{j},{float(emap.mutual_information[i, j])!r}")
    lines += [f"S,{i},{float(emap.entropy[i])!r}" for i in range(n)]
    return "\n".join(lines) + "\n"


def parse_map_csv(text: str) -> EntanglementMap:
    pairs: dict[tuple[int, int], float] = {}
    entropy: dict[int, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.replace(" ", "") == "i,j,value":
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            if len(fields) != 3:
                raise ValueError("expected 3 fields")
            if fields[0] == "S":
                entropy[int(fields[1])] = float(fields[2])
            else:
                i, j = sorted((int(fields[0]), int(fields[1])))
                pairs[(i, j)] = float(fields[2])
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    n = len(entropy)
    if sorted(entropy) != list(range(n)):
        raise InputError("entropy rows must cover qubits 0..n-1 exactly once")
    mi = np.zeros((n, n))
    for (i, j), v in pairs.items():
        if j >= n or i == j:
            raise InputError(f"pair ({i},{j}) invalid for {n} qubits")
        mi[i, j] = mi[j, i] = v
    return EntanglementMap(n, np.array([entropy[i] for i in range(n)]), mi)


_BLOCK_COLOURS = ("blue", "red", "darkgreen", "orange", "purple", "brown")


def format_map_dot(emap: EntanglementMap, n_blocks: int, cutoff: float = 0.0) -> str:
    """Graphviz graph: block centers drawn as boxes, edges labelled by placement order."""
    centers = rank_blocks(emap, n_blocks)
    lines = ["graph entanglement {", "  node [shape=circle];"]
    for q in range(emap.n_qubits):
        attrs = f'label="q{q}\\nS={emap.entropy[q]:.5f}"'
        if q in centers:
            attrs += ", shape=box, style=bold"
        lines.append(f"  q{q} [{attrs}];")
    for b, center in enumerate(centers):
        colour = _BLOCK_COLOURS[b % len(_BLOCK_COLOURS)]
        for order, j in enumerate(entangler_order(emap, center, cutoff), start=1):
            mi = emap.mutual_information[center, j]
            lines.append(
                f'  q{center} -- q{j} [color={colour}, label="{order}", '
                f'tooltip="block {b}, I={mi:.5f}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"

