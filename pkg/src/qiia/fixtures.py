"""Synthetic integral sets: the bundled pairing model and random Hermitian problems.

The pairing model has spin orbitals ``p`` and ``p + 4`` forming pair ``p``
(``p = 0..3``). Pair 0 is doubly occupied in the reference. Pair hopping
moves both electrons of a pair at once, so the first-order state holds the
reference and the three pair-excited determinants only.
"""

from __future__ import annotations

from importlib import resources
from typing import Sequence

import numpy as np

from qiia.hamiltonian import SpinOrbitalIntegrals, parse_integrals

N_PAIRS = 4
PAIR_LEVELS = (-1.0, 3.0, 2.5, 0.25)
PAIRING_STRENGTH = 0.2
BUNDLED_FIXTURE = "pairing_2e8q.amo"


def _add(table: dict, key: tuple, value: float) -> None:
    table[key] = table.get(key, 0.0) + value


def pairing_integrals(
    pair_levels: Sequence[float] = PAIR_LEVELS,
    strength: float = PAIRING_STRENGTH,
    core_energy: float = 0.0,
) -> SpinOrbitalIntegrals:
    """Reduced-BCS pairing model on eight spin orbitals with two electrons.

    ``H = sum_p e_p (n_p + n_{p+4}) - G sum_{p,q} P+_q P_p`` with the pair
    creator ``P+_q = a+_q a+_{q+4}``. The ``p = q`` terms give the on-pair
    attraction ``-G n_p n_{p+4}``. Orbital energies are stored as EPS records
    equal to the Fock diagonal of the pair-0 reference.
    """
    from qiia.mbpt import Determinant, orbital_energies

    if len(pair_levels) != N_PAIRS:
        raise ValueError(f"need {N_PAIRS} pair levels")
    n = 2 * N_PAIRS
    h1: dict[tuple[int, int], float] = {}
    for p, e in enumerate(pair_levels):
        h1[(p, p)] = float(e)
        h1[(p + N_PAIRS, p + N_PAIRS)] = float(e)
    h2: dict[tuple[int, int, int, int], float] = {}
    for p in range(N_PAIRS):
        for q in range(N_PAIRS):
            # g_{q,q+4,p,p+4} a+_q a+_{q+4} a_{p+4} a_p, listed in both
            # equivalent orders so the factor 1/2 restores -G
            _add(h2, (q, q + N_PAIRS, p, p + N_PAIRS), -strength)
            _add(h2, (q + N_PAIRS, q, p + N_PAIRS, p), -strength)
    base = SpinOrbitalIntegrals(n, 2, core_energy, h1, h2)
    eps = orbital_energies(base, Determinant.from_occupied([0, N_PAIRS], n))
    return SpinOrbitalIntegrals(n, 2, core_energy, h1, h2, eps)


def random_integrals(
    n: int, n_electrons: int, seed: int, density: float = 0.5, scale: float = 0.5
) -> SpinOrbitalIntegrals:
    """Random real integrals with the Hermiticity symmetries ``h_pq = h_qp`` and ``g_pqrs = g_rspq``."""
    rng = np.random.default_rng(seed)
    h1: dict[tuple[int, int], float] = {}
    for p in range(n):
        for q in range(p, n):
            if p == q or rng.random() < density:
                v = float(rng.normal(scale=scale))
                h1[(p, q)] = v
                h1[(q, p)] = v
    h2: dict[tuple[int, int, int, int], float] = {}
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s in range(n):
                    if (r, s, p, q) in h2 or rng.random() >= density / n:
                        continue
                    v = float(rng.normal(scale=scale))
                    h2[(p, q, r, s)] = v
                    h2[(r, s, p, q)] = v
    return SpinOrbitalIntegrals(n, n_electrons, float(rng.normal()), h1, h2)


def data_text(name: str) -> str:
    return resources.files("qiia.data").joinpath(name).read_text(encoding="utf-8")


def bundled_integrals() -> SpinOrbitalIntegrals:
    return parse_integrals(data_text(BUNDLED_FIXTURE))
