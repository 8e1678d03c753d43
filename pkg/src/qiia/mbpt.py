"""Reference determinant, orbital energies and first-order perturbed trial states.

Determinant phases follow the Jordan-Wigner convention of the qubit
Hamiltonian: a basis state is ``a+_0^{n_0} a+_1^{n_1} ... |vac>``, so moving a
ladder operator on orbital ``p`` into place costs ``(-1)**(occupied below p)``.
This keeps every amplitude produced here directly usable as a statevector
amplitude.

Two-body matrix elements use the antisymmetrized tensor
``A[p,q,r,s] = (g_pqrs - g_qprs - g_pqsr + g_qpsr) / 2``, for which the
listed operator equals ``1/4 sum A_pqrs a+_p a+_q a_s a_r`` whatever subset of
the symmetry-equivalent records the file happens to contain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from qiia.errors import DegenerateDenominatorError, InputError
from qiia.hamiltonian import SpinOrbitalIntegrals
from qiia.simulator import StateVector, bitstring

DEGENERACY_TOL = 1e-8
AMPLITUDE_TOL = 1e-12


class Scheme(str, Enum):
    MOLLER_PLESSET = "mp"
    EPSTEIN_NESBET = "en"


@dataclass(frozen=True, order=True)
class Determinant:
    """Occupation pattern; bit ``i`` of ``bits`` is spin orbital (qubit) ``i``."""

    bits: int
    n_orbitals: int = field(compare=False)

    @classmethod
    def from_bitstring(cls, s: str) -> Determinant:
        if set(s) - {"0", "1"}:
            raise InputError(f"bad occupation string {s!r}")
        return cls(int(s, 2), len(s))

    @classmethod
    def from_occupied(cls, occupied, n_orbitals: int) -> Determinant:
        return cls(sum(1 << p for p in set(occupied)), n_orbitals)

    @property
    def bitstring(self) -> str:
        return bitstring(self.bits, self.n_orbitals)

    @property
    def occupied(self) -> tuple[int, ...]:
        return tuple(p for p in range(self.n_orbitals) if self.bits >> p & 1)

    @property
    def n_electrons(self) -> int:
        return self.bits.bit_count()

    def excitation_rank(self, reference: Determinant) -> int:
        return (self.bits & ~reference.bits).bit_count()


@dataclass(frozen=True)
class TrialState:
    reference: Determinant
    terms: Mapping[Determinant, float]
    normalized: bool = False

    @classmethod
    def from_amplitudes(cls, reference: str, amplitudes: Mapping[str, float], normalized=False):
        ref = Determinant.from_bitstring(reference)
        terms = {Determinant.from_bitstring(k): float(v) for k, v in amplitudes.items()}
        weights = {d.n_electrons for d in terms}
        if weights != {ref.n_electrons}:
            raise InputError("all determinants must carry the reference electron count")
        return cls(ref, dict(sorted(terms.items())), normalized)

    def normalize(self) -> TrialState:
        amps = np.array(list(self.terms.values()))
        norm = float(np.sqrt(np.sum(amps**2)))
        return TrialState(self.reference, {d: a / norm for d, a in self.terms.items()}, True)

    def norm(self) -> float:
        return float(np.sqrt(sum(a * a for a in self.terms.values())))


def reference_determinant(ints: SpinOrbitalIntegrals) -> Determinant:
    """Fill the ``n_electrons`` lowest orbitals (by EPS if present, else by index)."""
    n, ne = ints.n_spin_orbitals, ints.n_electrons
    if ne > n:
        raise InputError(f"{ne} electrons do not fit in {n} spin orbitals")
    if ints.orbital_energies:
        if len(ints.orbital_energies) != n:
            raise InputError("EPS records must cover every spin orbital")
        order = sorted(range(n), key=lambda p: (ints.orbital_energies[p], p))
    else:
        order = list(range(n))
    return Determinant.from_occupied(order[:ne], n)


def _antisymmetrized(ints: SpinOrbitalIntegrals) -> np.ndarray:
    g = ints.two_body_array()
    return 0.5 * (g - g.transpose(1, 0, 2, 3) - g.transpose(0, 1, 3, 2) + g.transpose(1, 0, 3, 2))


class _Integrals:
    """Dense arrays built once per call chain."""

    def __init__(self, ints: SpinOrbitalIntegrals):
        self.ints = ints
        self.h = ints.one_body_array()
        self.a = _antisymmetrized(ints)

    def diagonal(self, det: Determinant) -> float:
        occ = list(det.occupied)
        if not occ:
            return self.ints.core_energy
        one = float(np.sum(self.h[occ, occ]))
        two = 0.5 * sum(float(self.a[i, j, i, j]) for i in occ for j in occ)
        return self.ints.core_energy + one + two

    def orbital_energies(self, ref: Determinant) -> dict[int, float]:
        if self.ints.orbital_energies:
            return dict(self.ints.orbital_energies)
        occ = list(ref.occupied)
        n = self.ints.n_spin_orbitals
        return {p: float(self.h[p, p] + sum(self.a[p, j, p, j] for j in occ)) for p in range(n)}


def _apply(bits: int, p: int, create: bool) -> tuple[int, int] | None:
    """Ladder operator on orbital ``p``: ``(sign, new_bits)``, or None if it annihilates."""
    occupied = bits >> p & 1
    if occupied == create:
        return None
    sign = -1 if (bits & ((1 << p) - 1)).bit_count() % 2 else 1
    return sign, bits ^ (1 << p)


def _excitation_sign(bits: int, annihilate: tuple[int, ...], create: tuple[int, ...]) -> tuple[int, int]:
    """Sign and result of ``a+_{c0} a+_{c1} .. a_{a1} a_{a0}`` acting on ``bits``.

    Operators are applied right to left: ``annihilate[0]`` first, then
    ``annihilate[1]``, then ``create[-1]`` ... ``create[0]``.
    """
    sign = 1
    for p, dag in [(p, False) for p in annihilate] + [(p, True) for p in reversed(create)]:
        out = _apply(bits, p, dag)
        if out is None:
            raise AssertionError("excitation annihilates the determinant")
        s, bits = out
        sign *= s
    return sign, bits


def reference_energy(ints: SpinOrbitalIntegrals, ref: Determinant) -> float:
    """Diagonal energy ``sum h_ii + 1/2 sum <ij||ij> + core`` of ``ref``."""
    return _Integrals(ints).diagonal(ref)


def orbital_energies(ints: SpinOrbitalIntegrals, ref: Determinant) -> dict[int, float]:
    """``eps_p = h_pp + sum_j <pj||pj>``; EPS records override when present."""
    return _Integrals(ints).orbital_energies(ref)


def _couplings(I: _Integrals, ref: Determinant):
    """Yield ``(determinant, <Phi_I|H|Phi_0>, removed, added)`` for singles and doubles."""
    occ = ref.occupied
    virt = tuple(p for p in range(ref.n_orbitals) if not ref.bits >> p & 1)
    for i in occ:
        for a in virt:
            sign, bits = _excitation_sign(ref.bits, (i,), (a,))
            value = I.h[a, i] + sum(I.a[a, j, i, j] for j in occ)
            yield Determinant(bits, ref.n_orbitals), sign * float(value), (i,), (a,)
    for i, j in itertools.combinations(occ, 2):
        for a, b in itertools.combinations(virt, 2):
            sign, bits = _excitation_sign(ref.bits, (i, j), (a, b))
            yield Determinant(bits, ref.n_orbitals), sign * float(I.a[a, b, i, j]), (i, j), (a, b)


def _first_order(ints: SpinOrbitalIntegrals, ref: Determinant, scheme: Scheme | str):
    scheme = Scheme(scheme)
    I = _Integrals(ints)
    eps = I.orbital_energies(ref)
    e0 = I.diagonal(ref)
    out = []
    for det, coupling, removed, added in _couplings(I, ref):
        if abs(coupling) < AMPLITUDE_TOL:
            continue
        if scheme is Scheme.MOLLER_PLESSET:
            denom = sum(eps[p] for p in removed) - sum(eps[p] for p in added)
        else:
            denom = e0 - I.diagonal(det)
        if abs(denom) < DEGENERACY_TOL:
            raise DegenerateDenominatorError(
                f"denominator {denom:.3e} for determinant {det.bitstring} (scheme {scheme.value})"
            )
        out.append((det, coupling, denom))
    return e0, out


def first_order_state(
    ints: SpinOrbitalIntegrals, ref: Determinant | None = None, scheme: Scheme | str = Scheme.MOLLER_PLESSET
) -> TrialState:
    """Reference plus first-order amplitudes ``<Phi_I|H|Phi_0> / D_I`` (unnormalized).

    Determinants with a vanishing coupling are skipped before the denominator
    is examined; a coupled determinant with ``|D_I| < 1e-8`` raises
    :class:`DegenerateDenominatorError`.
    """
    ref = ref or reference_determinant(ints)
    _, coupled = _first_order(ints, ref, scheme)
    terms = {ref: 1.0}
    for det, coupling, denom in coupled:
        amp = coupling / denom
        if abs(amp) >= AMPLITUDE_TOL:
            terms[det] = amp
    return TrialState(ref, dict(sorted(terms.items())))


def mp2_energy(
    ints: SpinOrbitalIntegrals, ref: Determinant | None = None, scheme: Scheme | str = Scheme.MOLLER_PLESSET
) -> float:
    """Reference energy plus ``sum_I |<Phi_I|H|Phi_0>|^2 / D_I``."""
    ref = ref or reference_determinant(ints)
    e0, coupled = _first_order(ints, ref, scheme)
    return e0 + float(np.sum([c * c / d for _, c, d in coupled]))


def export_trial(state: TrialState) -> StateVector:
    """Normalized statevector with each determinant at its little-endian index."""
    if not state.terms:
        raise InputError("trial state has no determinants")
    normed = state.normalize()
    n = state.reference.n_orbitals
    amps = np.zeros(1 << n, dtype=complex)
    for det, a in normed.terms.items():
        amps[det.bits] = a
    return StateVector(n, amps)
