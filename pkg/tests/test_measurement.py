import itertools

import numpy as np
import pytest

from qiia.errors import DomainError, InputError, InvalidOptionError
from qiia.hamiltonian import QubitHamiltonian
from qiia.measurement import (
    Clique,
    estimate_clique,
    exact_contribution,
    format_grouping_report,
    greedy_cliques,
    qwc,
    rank_supercliques,
    rotation_circuit,
    superclique_contribution,
    supercliques,
)
from qiia.mbpt import export_trial, first_order_state
from qiia.simulator import StateVector, apply_gate, expectation, pauli_expectation, prepare_basis_state

rng = np.random.default_rng(99)


def random_state(n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def xy_partner_hamiltonian():
    return QubitHamiltonian(
        10,
        {
            "IIYZYIIIII": 0.0125,
            "IIIIIIIYZY": 0.0125,
            "IIXZXIIIII": 0.0125,
            "IIIIIIIXZX": 0.0125,
            "IIZIIIIZII": 0.3,
            "IIIIIIIIII": -1.0,
        },
    )


def check_partition(h, cliques):
    seen = sorted(k for c in cliques for k in c.indices)
    assert seen == list(range(len(h)))
    for c in cliques:
        for a, b in itertools.combinations(c.words, 2):
            assert qwc(a, b)
        for w in c.words:
            assert all(x == "I" or x == m for x, m in zip(w, c.merged_word))


def test_qwc_examples():
    assert qwc("IIZ", "ZIZ")
    assert not qwc("XI", "ZI")
    assert qwc("IIYZYIIIII", "IIIIIIIYZY")
    with pytest.raises(InputError):
        qwc("X", "XX")


def test_greedy_examples():
    all_z = QubitHamiltonian(3, {"ZZI": 1.0, "IZZ": 0.5, "ZIZ": 0.2, "III": 3.0, "IIZ": -0.1})
    assert len(greedy_cliques(all_z)) == 1
    assert len(greedy_cliques(QubitHamiltonian(2, {"XI": 1.0, "ZI": 0.5, "IZ": 0.25}))) == 2


def test_greedy_order_and_determinism():
    h = QubitHamiltonian(2, {"XI": 0.1, "ZI": -0.9, "IZ": 0.5, "IX": 0.5})
    cliques = greedy_cliques(h)
    assert cliques[0].words[0] == "ZI"
    assert cliques == greedy_cliques(h)


def test_bundled_partition_and_exactness(bundled, bundled_h):
    state = export_trial(first_order_state(bundled))
    cliques = greedy_cliques(bundled_h)
    check_partition(bundled_h, cliques)
    total = sum(exact_contribution(state, c) for c in cliques)
    assert abs(total - expectation(state, bundled_h)) < 1e-10
    supers = supercliques(cliques, state)
    assert sorted(k for s in supers for k in s.cliques) == list(range(len(cliques)))
    assert abs(sum(superclique_contribution(state, cliques, s) for s in supers) - total) < 1e-10


def test_rotation_examples():
    z = Clique((0,), ("ZZ",), (1.0,), "ZZ")
    assert rotation_circuit(z) == []
    xz = Clique((0,), ("XZ",), (1.0,), "XZ")
    gates = rotation_circuit(xz)
    assert [(g.kind, g.qubits) for g in gates] == [("H", (1,))]
    y = Clique((0,), ("YI",), (1.0,), "YI")
    assert [g.kind for g in rotation_circuit(y)] == ["SDG", "H"]


def test_rotation_maps_to_z_basis():
    n = 4
    for _ in range(100):
        merged = "".join(rng.choice(list("IXYZ"), n))
        words = []
        for _ in range(3):
            mask = rng.random(n) < 0.6
            words.append("".join(m if keep else "I" for m, keep in zip(merged, mask)))
        clique = Clique(tuple(range(3)), tuple(words), (1.0, 1.0, 1.0), merged)
        state = random_state(n)
        rotated = state
        for g in rotation_circuit(clique):
            rotated = apply_gate(rotated, g)
        for w in words:
            zword = "".join("I" if c == "I" else "Z" for c in w)
            direct = pauli_expectation(state.amplitudes, w, n).real
            after = pauli_expectation(rotated.amplitudes, zword, n).real
            assert abs(direct - after) < 1e-10


def test_identity_clique_exact():
    c = Clique((0,), ("III",), (-2.5,), "III")
    est = estimate_clique(random_state(3), c, shots=7, seed=1)
    assert est.contribution == -2.5 and est.standard_error == 0.0


def test_postselection_rules():
    rotated = Clique((0,), ("XX",), (1.0,), "XX")
    with pytest.raises(InvalidOptionError):
        estimate_clique(random_state(2), rotated, 100, postselect=True, n_electrons=1)
    z = Clique((0,), ("ZI",), (1.0,), "ZI")
    with pytest.raises(InvalidOptionError):
        estimate_clique(random_state(2), z, 100, postselect=True)
    with pytest.raises(DomainError):
        estimate_clique(prepare_basis_state(2, "11"), z, 100, postselect=True, n_electrons=1)


def test_postselection_keeps_all_on_number_eigenstate(bundled, bundled_h):
    state = export_trial(first_order_state(bundled))
    zc = next(c for c in greedy_cliques(bundled_h) if not c.rotated)
    est = estimate_clique(state, zc, 10**5, seed=3, postselect=True, n_electrons=2)
    assert est.retained == est.shots == 10**5
    assert abs(est.contribution - exact_contribution(state, zc)) < 3 * est.standard_error


def test_postselection_discards_wrong_weight():
    amps = np.zeros(4, dtype=complex)
    amps[1] = amps[3] = 1 / np.sqrt(2)
    z = Clique((0,), ("ZZ",), (1.0,), "ZZ")
    est = estimate_clique(StateVector(2, amps), z, 10_000, seed=0, postselect=True, n_electrons=1)
    assert 4500 < est.retained < 5500
    assert est.contribution == -1.0


def test_estimator_variance_scales_with_shots():
    state = random_state(3)
    c = Clique((0, 1), ("XXI", "IXX"), (0.7, -0.4), "XXX")
    shots = np.array([10**3, 10**4, 10**5])
    var = np.array([estimate_clique(state, c, int(s), seed=5).standard_error ** 2 for s in shots])
    slope = np.polyfit(np.log(shots), np.log(var), 1)[0]
    assert abs(slope + 1) < 0.05
    est = estimate_clique(state, c, 10**5, seed=6)
    assert abs(est.contribution - exact_contribution(state, c)) < 4 * est.standard_error


def test_sampling_seed_determinism():
    state = random_state(3)
    c = Clique((0,), ("ZIZ",), (1.0,), "ZIZ")
    assert estimate_clique(state, c, 500, seed=4) == estimate_clique(state, c, 500, seed=4)


def test_xy_partners_form_one_superclique():
    h = xy_partner_hamiltonian()
    cliques = greedy_cliques(h)
    check_partition(h, cliques)
    supers = supercliques(cliques)
    paired = [s for s in supers if len(s.cliques) == 2]
    assert len(paired) == 1 and paired[0].witness == "xy-swap"
    a, b = (cliques[k] for k in paired[0].cliques)
    assert {w.translate(str.maketrans("XY", "YX")) for w in a.words} == set(b.words)
    # XX and YY agree on real states of fixed particle number
    amps = np.zeros(1 << 10)
    sector = [i for i in range(1 << 10) if i.bit_count() == 5]
    amps[sector] = rng.normal(size=len(sector))
    real = StateVector(10, amps / np.linalg.norm(amps))
    ca, cb = exact_contribution(real, a), exact_contribution(real, b)
    assert abs(ca - cb) < 1e-12
    merged = supercliques(cliques, real)
    assert any(set(s.cliques) == set(paired[0].cliques) for s in merged)


def test_unequal_coefficients_do_not_pair():
    h = QubitHamiltonian(3, {"XZX": 0.5, "YZY": 0.4})
    supers = supercliques(greedy_cliques(h))
    assert all(s.witness == "single" for s in supers)


def test_numeric_merge_and_ranking(bundled, bundled_h):
    state = export_trial(first_order_state(bundled))
    cliques = greedy_cliques(bundled_h)
    supers = supercliques(cliques, state)
    values = [superclique_contribution(state, cliques, s) / len(s.cliques) for s in supers]
    for s in supers:
        per = [exact_contribution(state, cliques[k]) for k in s.cliques]
        assert max(per) - min(per) <= 2e-10
    ranking = rank_supercliques(state, cliques, supers)
    mags = [abs(superclique_contribution(state, cliques, supers[k])) for k in ranking]
    assert mags == sorted(mags, reverse=True)
    assert len(values) == len(supers)


def test_report_lists_everything():
    h = xy_partner_hamiltonian()
    cliques = greedy_cliques(h)
    text = format_grouping_report(cliques, supercliques(cliques))
    assert f"cliques = {len(cliques)}" in text
    for w in h.terms:
        assert w in text
    assert "xy-swap" in text
