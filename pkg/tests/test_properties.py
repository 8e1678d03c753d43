"""Randomized property checks, 1000 derandomized cases each."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qiia.ansatz import Block, ansatz_from_blocks
from qiia.entanglement import reduced_density, von_neumann_entropy, mutual_information_matrix
from qiia.fixtures import random_integrals
from qiia.hamiltonian import build_qubit_hamiltonian
from qiia.measurement import Clique, estimate_clique
from qiia.simulator import StateVector, prepare_basis_state, run_circuit, sample
from qiia.solvers import casci_ground, vqe_minimize

CASES = settings(
    max_examples=1000,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, v / np.linalg.norm(v))


def random_ansatz(rng, n, n_electrons):
    occupied = rng.choice(n, size=n_electrons, replace=False)
    reference = "".join("1" if q in occupied else "0" for q in reversed(range(n)))
    n_blocks = int(rng.integers(0, 3))
    centers = rng.choice(n, size=min(n_blocks, n), replace=False)
    blocks = []
    for c in centers:
        others = [q for q in range(n) if q != c]
        k = int(rng.integers(1, len(others) + 1))
        blocks.append(Block(int(c), tuple(int(q) for q in rng.choice(others, size=k, replace=False))))
    return reference, ansatz_from_blocks(n, reference, blocks)[1]


def small_vqe_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    ne = int(rng.integers(1, n))
    ints = random_integrals(n, ne, seed)
    _, circuit = random_ansatz(rng, n, ne)
    return ints, build_qubit_hamiltonian(ints), circuit


@CASES
@given(seeds)
def test_vqe_variational_bound(seed):
    ints, h, circuit = small_vqe_problem(seed)
    res = vqe_minimize(h, circuit, seed=seed % 1000, max_evals=40)
    assert res.energy >= casci_ground(h, ints.n_electrons).energy - 1e-9


@CASES
@given(seeds, st.integers(min_value=2, max_value=5))
def test_mutual_information_nonnegative_and_subadditive(seed, n):
    state = random_state(np.random.default_rng(seed), n)
    emap = mutual_information_matrix(state)
    assert np.all(emap.mutual_information >= 0)
    assert np.all(emap.mutual_information <= 2 + 1e-12)
    for i in range(n):
        assert 0 <= emap.entropy[i] <= 1 + 1e-12
        for j in range(i + 1, n):
            sij = von_neumann_entropy(reduced_density(state, [i, j]))
            assert sij <= emap.entropy[i] + emap.entropy[j] + 1e-10


@CASES
@given(seeds, st.integers(min_value=0, max_value=5))
def test_pure_state_complement_entropy(seed, q):
    n = 6
    state = random_state(np.random.default_rng(seed), n)
    rest = [k for k in range(n) if k != q]
    s_keep = von_neumann_entropy(reduced_density(state, [q]))
    s_rest = von_neumann_entropy(reduced_density(state, rest))
    assert abs(s_keep - s_rest) < 1e-10


@CASES
@given(seeds)
def test_circuit_conserves_particle_number(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    ne = int(rng.integers(0, n + 1))
    _, circuit = random_ansatz(rng, n, ne)
    params = rng.uniform(-np.pi, np.pi, circuit.n_parameters)
    out = run_circuit(circuit, params, prepare_basis_state(n, "0" * n))
    assert all(i.bit_count() == ne for i in out.support(1e-12))


@CASES
@given(seeds)
def test_bitwise_determinism(seed):
    ints, h, circuit = small_vqe_problem(seed)
    a = vqe_minimize(h, circuit, seed=seed % 1000, max_evals=30)
    b = vqe_minimize(h, circuit, seed=seed % 1000, max_evals=30)
    assert a.energy == b.energy and a.evaluations == b.evaluations
    assert np.array_equal(a.parameters, b.parameters)
    state = random_state(np.random.default_rng(seed), 3)
    assert sample(state, 256, seed) == sample(state, 256, seed)
    clique = Clique((0,), ("ZIZ",), (0.5,), "ZIZ")
    assert estimate_clique(state, clique, 64, seed) == estimate_clique(state, clique, 64, seed)
