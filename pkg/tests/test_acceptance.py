"""Acceptance gate: one PASS/FAIL line per criterion at the pinned tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import functools
import itertools
import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import ent_expm, fermionic_matrix, phase_aligned_distance, circuit_unitary, sector_ground
from qiia.ansatz import build_qiia, count_resources, decompose_entangler, ent_matrix, prune_small_angles
from qiia.entanglement import entangler_order, mutual_information_matrix, rank_blocks
from qiia.fixtures import bundled_integrals, pairing_integrals, random_integrals
from qiia.hamiltonian import SpinOrbitalIntegrals, build_qubit_hamiltonian, parse_integrals
from qiia.mbpt import export_trial, first_order_state, reference_determinant
from qiia.measurement import estimate_clique, exact_contribution, greedy_cliques, qwc, supercliques
from qiia.simulator import StateVector, expectation, prepare_basis_state, run_circuit
from qiia.solvers import casci_ground, pfd, vqe_minimize


def record(number, ok, detail, elapsed=None, limit=None):
    timing = ""
    if elapsed is not None:
        in_time = elapsed < limit
        ok = ok and in_time
        timing = f" [{elapsed:.2f} s, limit {limit} s]"
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}{timing}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def bundled_vqe():
    """The full desk-scale pipeline on the bundled fixture with default settings."""
    ints = bundled_integrals()
    h = build_qubit_hamiltonian(ints)
    ref = reference_determinant(ints)
    emap = mutual_information_matrix(export_trial(first_order_state(ints, ref)))
    _, circuit = build_qiia(emap, 2, ref.bitstring)
    result = vqe_minimize(h, circuit, seed=0)
    return h, circuit, result, casci_ground(h, ints.n_electrons).energy


def test_criterion_01_entropy_reproduction(b_plus_10q_state):
    start = time.perf_counter()
    emap = mutual_information_matrix(b_plus_10q_state)
    elapsed = time.perf_counter() - start
    found = {t: float(emap.entropy[np.argmin(np.abs(emap.entropy - t))]) for t in (0.05879, 0.04972, 0.00749)}
    entropies_ok = all(abs(v - t) < 1e-4 for t, v in found.items())
    mi = emap.mutual_information
    pairs = [(i, j) for i, j in itertools.combinations(range(emap.n_qubits), 2)
             if mi[i, j] > 0 and abs(mi[i, j] - emap.entropy[i]) < 1e-10
             and abs(mi[i, j] - emap.entropy[j]) < 1e-10]
    detail = (
        f"S values {', '.join(f'{v:.5f}' for v in found.values())} (tol 1e-4); "
        f"perfectly correlated pairs with I = S: {pairs}"
    )
    record(1, entropies_ok and bool(pairs), detail, elapsed, 1)


def test_criterion_02_qiia_structure(b_plus_8q_state):
    emap = mutual_information_matrix(b_plus_8q_state)
    blocks = rank_blocks(emap, 2)
    order = entangler_order(emap, 0)
    spec, circuit = build_qiia(emap, 2, "00010001")
    first_ent = next(g for g in circuit.gates if g.kind == "ENT")
    ok = (
        blocks == [0, 4]
        and order[0] == 4
        and set(order[1:3]) == {3, 7}
        and set(order[3:]) == {1, 2, 5, 6}
        and first_ent.qubits == (0, 4)
        and [b.center for b in spec.blocks] == [0, 4]
    )
    record(2, ok, f"blocks {blocks}, block-0 order {order}, first entangler {first_ent.qubits}")


def test_criterion_03_entangler():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    number = np.diag([0, 1, 1, 2])
    worst = {"unitary": 0.0, "number": 0.0, "expm": 0.0, "decomposition": 0.0}
    cx_counts = set()
    for theta in rng.uniform(-math.pi, math.pi, 100):
        u = ent_matrix(theta)
        worst["unitary"] = max(worst["unitary"], np.max(np.abs(u.conj().T @ u - np.eye(4))))
        worst["number"] = max(worst["number"], np.max(np.abs(u @ number - number @ u)))
        worst["expm"] = max(worst["expm"], np.max(np.abs(u - ent_expm(theta))))
        seq = decompose_entangler(theta, 0, 1)
        cx_counts.add(sum(g.kind in ("CX", "ENT") for g in seq))
        composed = circuit_unitary([(g.kind, g.qubits, g.param) for g in seq], 2)
        worst["decomposition"] = max(worst["decomposition"], phase_aligned_distance(composed, u))
    elapsed = time.perf_counter() - start
    ok = cx_counts == {2} and all(v < 1e-10 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; two-qubit gates {sorted(cx_counts)}"
    record(3, ok, detail + " (tol 1e-10)", elapsed, 1)


def _jw_fixtures():
    yield "bundled", bundled_integrals()
    yield "pairing G=0.5", pairing_integrals(strength=0.5)
    yield "header-only", parse_integrals("NORB 2\nNELEC 1\n")
    yield "two-body only", SpinOrbitalIntegrals(2, 1, 0.0, {}, {(0, 1, 1, 0): 0.5})
    for n in range(2, 9):
        for ne in sorted({1, n // 2}):
            yield f"random n={n} ne={ne}", random_integrals(n, ne, seed=100 + n)


def test_criterion_04_jordan_wigner():
    start = time.perf_counter()
    worst, count = 0.0, 0
    for _, ints in _jw_fixtures():
        n, ne = ints.n_spin_orbitals, ints.n_electrons
        qubit = casci_ground(build_qubit_hamiltonian(ints), ne).energy
        dense = sector_ground(fermionic_matrix(ints), n, ne)
        worst = max(worst, abs(qubit - dense))
        count += 1
    elapsed = time.perf_counter() - start
    record(4, worst < 1e-10, f"{count} fixtures, max |E_qubit - E_fermion| = {worst:.1e} (tol 1e-10)", elapsed, 10)


def test_criterion_05_desk_scale_accuracy():
    start = time.perf_counter()
    _, circuit, result, e_cas = bundled_vqe()
    elapsed = time.perf_counter() - start
    value = pfd(result.energy, e_cas)
    detail = (
        f"E_VQE {result.energy:.7f}, E_CASCI {e_cas:.7f}, PFD {value:.4f} % "
        f"(target |PFD| < 0.005 %), {result.evaluations} evaluations"
    )
    record(5, abs(value) < 0.005, detail, elapsed, 60)


def test_criterion_06_pfd_convention():
    a = pfd(-4.99141, -4.99429)
    b = pfd(-11.52566, -11.51748)
    ok = abs(a - 0.05767) <= 5e-5 and abs(b + 0.07102) <= 5e-5
    record(6, ok, f"pfd values {a:.5f} and {b:.5f} (tol 5e-5)")


def test_criterion_07_resource_counts(b_plus_10q_state):
    emap = mutual_information_matrix(b_plus_10q_state)
    ref = "0001100011"
    _, circuit = build_qiia(emap, 2, ref)
    report = count_resources(circuit, decomposed=True)
    ok = report.two_qubit_gate_count == 72 and report.parameter_count == 46
    record(7, ok, f"two-qubit gates {report.two_qubit_gate_count}, parameters {report.parameter_count}")


def test_criterion_08_grouping():
    from test_measurement import xy_partner_hamiltonian

    start = time.perf_counter()
    ints = bundled_integrals()
    h = build_qubit_hamiltonian(ints)
    state = export_trial(first_order_state(ints))
    cliques = greedy_cliques(h)
    total = math.fsum(exact_contribution(state, c) for c in cliques)
    gap = abs(total - expectation(state, h))
    pairs_ok = all(qwc(a, b) for c in cliques for a, b in itertools.combinations(c.words, 2))
    partition = sorted(k for c in cliques for k in c.indices) == list(range(len(h)))

    xy = greedy_cliques(xy_partner_hamiltonian())
    merged = [s for s in supercliques(xy) if s.witness == "xy-swap" and len(s.cliques) == 2]
    elapsed = time.perf_counter() - start
    ok = gap < 1e-10 and pairs_ok and partition and len(merged) == 1
    detail = (
        f"|sum cliques - <H>| = {gap:.1e} (tol 1e-10), {len(cliques)} cliques pass QWC: {pairs_ok}, "
        f"X<->Y partner supercliques: {[s.cliques for s in merged]}"
    )
    record(8, ok, detail, elapsed, 5)


def test_criterion_09_shot_estimator():
    start = time.perf_counter()
    ints = bundled_integrals()
    h = build_qubit_hamiltonian(ints)
    ref = reference_determinant(ints)
    emap = mutual_information_matrix(export_trial(first_order_state(ints, ref)))
    _, circuit = build_qiia(emap, 2, ref.bitstring)
    params = np.random.default_rng(0).uniform(-0.5, 0.5, circuit.n_parameters)
    state = run_circuit(circuit, params, prepare_basis_state(8, "0" * 8))
    z_cliques = [(k, c) for k, c in enumerate(greedy_cliques(h)) if not c.rotated]
    worst_sigma, retention = 0.0, 1.0
    for k, c in z_cliques:
        est = estimate_clique(state, c, 10**5, seed=k, postselect=True, n_electrons=ints.n_electrons)
        exact = exact_contribution(state, c)
        sigma = abs(est.contribution - exact) / est.standard_error if est.standard_error else 0.0
        worst_sigma = max(worst_sigma, sigma)
        retention = min(retention, est.retained / est.shots)
    elapsed = time.perf_counter() - start
    ok = worst_sigma < 3 and retention == 1.0
    detail = (
        f"{len(z_cliques)} Z-clique(s) at 1e5 shots, worst deviation {worst_sigma:.2f} sigma (limit 3), "
        f"retention {100 * retention:.1f} %"
    )
    record(9, ok, detail, elapsed, 10)


def test_criterion_10_pruning():
    from qiia.ansatz import Block, ansatz_from_blocks

    h, circuit, result, _ = bundled_vqe()
    start = time.perf_counter()
    rng = np.random.default_rng(10)
    violations, worst_ratio = 0, 0.0
    for trial in range(100):
        n = int(rng.integers(3, 7))
        others = [q for q in range(1, n)]
        blocks = [Block(0, tuple(others)), Block(n - 1, tuple(range(n - 1)))][: 1 + trial % 2]
        reference = "0" * (n - 2) + "11"
        _, c = ansatz_from_blocks(n, reference, blocks)
        params = rng.uniform(-1, 1, c.n_parameters)
        small = rng.random(c.n_parameters) < 0.5
        params[small] = rng.uniform(-2e-3, 2e-3, small.sum())
        pruned, kept = prune_small_angles(c, params, 1e-3)
        removed = sum(abs(p) for p in params if abs(p) < 1e-3)
        start_state = prepare_basis_state(n, "0" * n)
        delta = np.linalg.norm(
            run_circuit(c, params, start_state).amplitudes - run_circuit(pruned, kept, start_state).amplitudes
        )
        if delta > removed + 1e-12:
            violations += 1
        if removed > 0:
            worst_ratio = max(worst_ratio, delta / removed)

    zero = prepare_basis_state(circuit.n_qubits, "0" * circuit.n_qubits)
    pruned, kept = prune_small_angles(circuit, result.parameters, 1e-3)
    e_full = expectation(run_circuit(circuit, result.parameters, zero), h)
    e_pruned = expectation(run_circuit(pruned, kept, zero), h)
    shift = abs(e_pruned - e_full)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and shift < 1e-3
    detail = (
        f"bound violations {violations}/100 (max ||dpsi|| / sum|theta| = {worst_ratio:.3f}); "
        f"fixture: {len(circuit.gates) - len(pruned.gates)} gates removed, energy shift {shift:.1e} Ha (limit 1e-3)"
    )
    record(10, ok, detail, elapsed, 10)


def test_criterion_11_property_suite():
    import test_properties as props

    names = [
        "test_vqe_variational_bound",
        "test_mutual_information_nonnegative_and_subadditive",
        "test_pure_state_complement_entropy",
        "test_circuit_conserves_particle_number",
        "test_bitwise_determinism",
    ]
    start = time.perf_counter()
    failures = []
    for name in names:
        try:
            getattr(props, name)()
        except Exception as exc:  # report every property, not just the first failure
            failures.append(f"{name}: {type(exc).__name__}")
    elapsed = time.perf_counter() - start
    examples = props.CASES.max_examples
    detail = f"{len(names) - len(failures)}/{len(names)} properties green at {examples} cases each"
    if failures:
        detail += f"; failing: {failures}"
    record(11, not failures, detail, elapsed, 120)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
