"""Spin-orbital integrals, Pauli algebra and the Jordan-Wigner qubit Hamiltonian.

Pauli words are strings over ``IXYZ`` written most-significant qubit first,
so the rightmost character acts on qubit 0 (``"XZ"`` is Z on qubit 0 and X on
qubit 1). Internally a word is a pair of bit masks ``(x, z)`` with
``P = i**popcount(x & z) * X**x Z**z``, which makes products and matrix
actions cheap bit operations.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from qiia.errors import InputError

PRUNE_TOL = 1e-12
IMAG_TOL = 1e-10
DENSE_MAX_QUBITS = 14

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


@dataclass(frozen=True)
class SpinOrbitalIntegrals:
    """Second-quantized problem definition.

    ``one_body[(p, q)]`` multiplies ``a+_p a_q``; ``two_body[(p, q, r, s)]``
    multiplies ``a+_p a+_q a_s a_r`` with the factor 1/2 applied at assembly.
    Entries are taken exactly as listed, with no symmetry expansion.
    """

    n_spin_orbitals: int
    n_electrons: int
    core_energy: float = 0.0
    one_body: Mapping[tuple[int, int], float] = field(default_factory=dict)
    two_body: Mapping[tuple[int, int, int, int], float] = field(default_factory=dict)
    orbital_energies: Mapping[int, float] | None = None

    def __post_init__(self):
        n = self.n_spin_orbitals
        if n <= 0:
            raise InputError(f"NORB must be positive, got {n}")
        if not 0 < self.n_electrons <= n:
            raise InputError(f"need 0 < NELEC <= NORB, got NELEC={self.n_electrons}, NORB={n}")
        for key in list(self.one_body) + list(self.two_body) + list(self.orbital_energies or ()):
            idx = key if isinstance(key, tuple) else (key,)
            if any(not 0 <= i < n for i in idx):
                raise InputError(f"orbital index out of range in {idx} (NORB={n})")

    def one_body_array(self) -> np.ndarray:
        h = np.zeros((self.n_spin_orbitals,) * 2)
        for (p, q), v in self.one_body.items():
            h[p, q] = v
        return h

    def two_body_array(self) -> np.ndarray:
        g = np.zeros((self.n_spin_orbitals,) * 4)
        for (p, q, r, s), v in self.two_body.items():
            g[p, q, r, s] = v
        return g


def parse_integrals(text: str) -> SpinOrbitalIntegrals:
    """Parse the line-oriented AMO integral format.

    Raises:
        InputError: on malformed records (with the 1-based line number),
            duplicate header keys or term records, missing ``NORB``/``NELEC``
            or out-of-range indices.
    """
    header: dict[str, float | int] = {}
    one_body: dict[tuple[int, int], float] = {}
    two_body: dict[tuple[int, int, int, int], float] = {}
    eps: dict[int, float] = {}
    arity = {"NORB": 1, "NELEC": 1, "ECORE": 1, "EPS": 2, "H1": 3, "H2": 5}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *fields = line.split()
        key = key.upper()
        if key not in arity:
            raise InputError(f"line {lineno}: unknown record {key!r}")
        if len(fields) != arity[key]:
            raise InputError(f"line {lineno}: {key} expects {arity[key]} fields, got {len(fields)}")
        try:
            if key in ("NORB", "NELEC"):
                value: int | float = int(fields[0])
            elif key == "ECORE":
                value = float(fields[0])
            else:
                idx = tuple(int(f) for f in fields[:-1])
                value = float(fields[-1])
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None

        if key in ("NORB", "NELEC", "ECORE"):
            if key in header:
                raise InputError(f"line {lineno}: duplicate header key {key}")
            header[key] = value
            continue
        target: dict = {"EPS": eps, "H1": one_body, "H2": two_body}[key]
        slot = idx[0] if key == "EPS" else idx
        if slot in target:
            raise InputError(f"line {lineno}: duplicate {key} record for {idx}")
        if "NORB" in header and any(not 0 <= i < header["NORB"] for i in idx):
            raise InputError(f"line {lineno}: index out of range in {idx}")
        target[slot] = value

    for required in ("NORB", "NELEC"):
        if required not in header:
            raise InputError(f"missing {required} record")
    return SpinOrbitalIntegrals(
        n_spin_orbitals=int(header["NORB"]),
        n_electrons=int(header["NELEC"]),
        core_energy=float(header.get("ECORE", 0.0)),
        one_body=one_body,
        two_body=two_body,
        orbital_energies=eps or None,
    )


def format_integrals(ints: SpinOrbitalIntegrals, comment: str | None = None) -> str:
    """Serialize integrals in the AMO format (repr floats, so parsing round-trips exactly)."""
    lines = [f"# {c}" for c in (comment.splitlines() if comment else [])]
    lines += [f"NORB {ints.n_spin_orbitals}", f"NELEC {ints.n_electrons}", f"ECORE {float(ints.core_energy)!r}"]
    for p, v in sorted((ints.orbital_energies or {}).items()):
        lines.append(f"EPS {p} {float(v)!r}")
    for (p, q), v in sorted(ints.one_body.items()):
        lines.append(f"H1 {p} {q} {float(v)!r}")
    for (p, q, r, s), v in sorted(ints.two_body.items()):
        lines.append(f"H2 {p} {q} {r} {s} {float(v)!r}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Pauli algebra
# --------------------------------------------------------------------------


def word_to_masks(word: str) -> tuple[int, int]:
    x = z = 0
    for q, letter in enumerate(reversed(word)):
        try:
            bx, bz = _LETTER_BITS[letter]
        except KeyError:
            raise InputError(f"invalid Pauli letter {letter!r} in {word!r}") from None
        x |= bx << q
        z |= bz << q
    return x, z


def masks_to_word(x: int, z: int, n: int) -> str:
    return "".join(_BITS_LETTER[((x >> q) & 1, (z >> q) & 1)] for q in reversed(range(n)))


def _mask_product(x1: int, z1: int, x2: int, z2: int) -> tuple[complex, int, int]:
    """Phase and masks of the letter-wise product of two Pauli words."""
    xa, ya, za = x1 & ~z1, x1 & z1, z1 & ~x1
    xb, yb, zb = x2 & ~z2, x2 & z2, z2 & ~x2
    plus = ((xa & yb) | (ya & zb) | (za & xb)).bit_count()
    minus = ((ya & xb) | (za & yb) | (xa & zb)).bit_count()
    return _I_POWERS[(plus - minus) % 4], x1 ^ x2, z1 ^ z2


@dataclass(frozen=True)
class PauliTerm:
    coefficient: complex
    word: str

    @property
    def n_qubits(self) -> int:
        return len(self.word)


def pauli_multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Product ``a * b`` with the Pauli phase folded into the coefficient."""
    if len(a.word) != len(b.word):
        raise InputError(f"word length mismatch: {len(a.word)} vs {len(b.word)}")
    phase, x, z = _mask_product(*word_to_masks(a.word), *word_to_masks(b.word))
    return PauliTerm(a.coefficient * b.coefficient * phase, masks_to_word(x, z, len(a.word)))


def jw_ladder(p: int, dagger: bool, n: int) -> list[PauliTerm]:
    """Jordan-Wigner image of ``a+_p`` (``dagger=True``) or ``a_p``.

    Returns ``(X_p -/+ iY_p)/2`` times the Z string on qubits ``0..p-1``.
    """
    if not 0 <= p < n:
        raise InputError(f"orbital {p} out of range for {n} qubits")
    return [
        PauliTerm(c, masks_to_word(x, z, n)) for (x, z), c in _ladder_masks(p, dagger).items()
    ]


@lru_cache(maxsize=None)
def _ladder_masks(p: int, dagger: bool) -> dict[tuple[int, int], complex]:
    zstring = (1 << p) - 1
    bit = 1 << p
    sign = -1 if dagger else 1
    return {(bit, zstring): 0.5 + 0j, (bit, zstring | bit): sign * 0.5j}


def _sum_product(a: Mapping, b: Mapping) -> dict[tuple[int, int], complex]:
    """Product of two Pauli sums stored as ``{(x, z): coeff}``."""
    out: dict[tuple[int, int], complex] = defaultdict(complex)
    for (x1, z1), c1 in a.items():
        for (x2, z2), c2 in b.items():
            phase, x, z = _mask_product(x1, z1, x2, z2)
            out[(x, z)] += c1 * c2 * phase
    return out


@lru_cache(maxsize=None)
def _pair_masks(p: int, dp: bool, q: int, dq: bool) -> dict[tuple[int, int], complex]:
    return dict(_sum_product(_ladder_masks(p, dp), _ladder_masks(q, dq)))


@dataclass(frozen=True)
class QubitHamiltonian:
    """Weighted sum of Pauli words, keyed by word in canonical (sorted) order."""

    n_qubits: int
    terms: Mapping[str, complex]

    def __post_init__(self):
        for word in self.terms:
            if len(word) != self.n_qubits:
                raise InputError(f"word {word!r} does not have {self.n_qubits} letters")
        object.__setattr__(self, "terms", dict(sorted(self.terms.items())))

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[PauliTerm], prune: float = PRUNE_TOL):
        """Combine duplicate words and drop terms with ``|coefficient| < prune``."""
        acc: dict[str, list[complex]] = defaultdict(list)
        for t in terms:
            acc[t.word].append(t.coefficient)
        combined = {w: _fsum_complex(cs) for w, cs in acc.items()}
        return cls(n_qubits, {w: c for w, c in combined.items() if abs(c) >= prune})

    def __len__(self) -> int:
        return len(self.terms)

    def pauli_terms(self) -> list[PauliTerm]:
        return [PauliTerm(c, w) for w, c in self.terms.items()]

    def masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(x, z, coeff)`` arrays in canonical word order."""
        xs, zs = zip(*(word_to_masks(w) for w in self.terms)) if self.terms else ((), ())
        return (
            np.array(xs, dtype=np.int64),
            np.array(zs, dtype=np.int64),
            np.array(list(self.terms.values()), dtype=complex),
        )

    def identity_coefficient(self) -> complex:
        return self.terms.get("I" * self.n_qubits, 0.0)


def _fsum_complex(values: Iterable[complex]) -> complex:
    values = list(values)
    re = math.fsum(v.real for v in values)
    im = math.fsum(v.imag for v in values)
    return complex(re, im)


def build_qubit_hamiltonian(ints: SpinOrbitalIntegrals, prune: float = PRUNE_TOL) -> QubitHamiltonian:
    """Jordan-Wigner map of the integral Hamiltonian.

    Contributions to each Pauli word are collected and summed with
    ``math.fsum``, so the result does not depend on record order.

    Raises:
        InputError: if any final coefficient has ``|Im| > 1e-10``, which
            means the listed integrals do not form a Hermitian operator.
    """
    n = ints.n_spin_orbitals
    contributions: dict[tuple[int, int], list[complex]] = defaultdict(list)
    contributions[(0, 0)].append(complex(ints.core_energy))

    for (p, q), h in sorted(ints.one_body.items()):
        for key, c in _pair_masks(p, True, q, False).items():
            contributions[key].append(h * c)
    for (p, q, r, s), g in sorted(ints.two_body.items()):
        left = _pair_masks(p, True, q, True)
        right = _pair_masks(s, False, r, False)
        for key, c in _sum_product(left, right).items():
            contributions[key].append(0.5 * g * c)

    terms: dict[str, float] = {}
    for (x, z), cs in contributions.items():
        c = _fsum_complex(cs)
        if abs(c) < prune:
            continue
        if abs(c.imag) > IMAG_TOL:
            raise InputError(
                f"non-Hermitian integrals: coefficient of {masks_to_word(x, z, n)} is {c}"
            )
        terms[masks_to_word(x, z, n)] = c.real
    return QubitHamiltonian(n, terms)


def pauli_action(x: int, z: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(rows, phases)`` with ``P|j> = phases[j] |rows[j]>`` for all basis states."""
    idx = np.arange(1 << n, dtype=np.int64)
    parity = _parity(idx & z)
    phases = _I_POWERS[(x & z).bit_count() % 4] * (1.0 - 2.0 * parity)
    return idx ^ x, phases


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    shift = 32
    while shift:
        v ^= v >> shift
        shift >>= 1
    return v & 1


def dense_matrix(h: QubitHamiltonian) -> np.ndarray:
    """Dense ``2^N x 2^N`` matrix, qubit 0 the least significant index bit."""
    n = h.n_qubits
    if n > DENSE_MAX_QUBITS:
        raise InputError(f"dense matrix refused for {n} > {DENSE_MAX_QUBITS} qubits")
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for word, c in h.terms.items():
        rows, phases = pauli_action(*word_to_masks(word), n)
        m[rows, cols] += c * phases
    return m


def sparse_matrix(h: QubitHamiltonian):
    """Same operator as :func:`dense_matrix` in CSR form, for larger registers."""
    from scipy import sparse

    n = h.n_qubits
    dim = 1 << n
    cols = np.arange(dim)
    rows_all, cols_all, vals_all = [], [], []
    for word, c in h.terms.items():
        rows, phases = pauli_action(*word_to_masks(word), n)
        rows_all.append(rows)
        cols_all.append(cols)
        vals_all.append(c * phases)
    if not rows_all:
        return sparse.csr_matrix((dim, dim), dtype=complex)
    return sparse.csr_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
        shape=(dim, dim),
    )
