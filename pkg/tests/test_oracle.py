from __future__ import annotations

import json
from functools import reduce

import numpy as np
import pytest

from pauli_shuffle.channels import ChannelSpec
from pauli_shuffle.circuit import parse_circuit
from pauli_shuffle.observables import Observable, embed_operator
from pauli_shuffle.oracle import (
    DenseState,
    OracleError,
    apply_channel_dense,
    choi_state,
    exact_value,
    expectation,
    product_state,
    simulate,
)
from pauli_shuffle.register import RegisterError, step_layout
from pauli_shuffle.states import named_density

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
T = np.diag([1, np.exp(1j * np.pi / 4)])
I2 = np.eye(2)


def kron(*ms):
    return reduce(np.kron, ms)


def partial_trace(rho, keep, n):
    """Trace out every qubit not in ``keep`` (qubit 0 is the leftmost factor)."""
    t = rho.reshape((2,) * (2 * n))
    letters = "abcdefghij"
    rows = [letters[q] for q in range(n)]
    cols = [letters[q].upper() if q in keep else letters[q] for q in range(n)]
    out = "".join(letters[q] for q in keep) + "".join(letters[q].upper() for q in keep)
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    return r.reshape(2 ** len(keep), 2 ** len(keep))


def test_product_state_ordering():
    rho = product_state(["zero", "one"]).matrix
    assert rho[1, 1] == 1  # |01> with qubit 0 leftmost


def test_unitary_embedding_matches_kron():
    state = product_state(["plus", "zero", "a"])
    out = apply_channel_dense(state, ChannelSpec("t"), [1])
    u = kron(I2, T, I2)
    assert np.allclose(out.matrix, u @ state.matrix @ u.conj().T)


def test_reversed_cnot_targets():
    state = product_state(["zero", "one"])
    out = apply_channel_dense(state, ChannelSpec("cnot"), [1, 0])
    assert np.isclose(out.matrix[3, 3], 1)


def test_trace_out_middle_qubit():
    rng = np.random.default_rng(3)
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    out = apply_channel_dense(DenseState(rho), ChannelSpec("trace_out"), [1])
    assert np.allclose(out.matrix, partial_trace(rho, [0, 2], 3))


def test_append_goes_to_end():
    out = apply_channel_dense(product_state(["zero"]), ChannelSpec("append_state", {"state": "one"}), [])
    assert np.allclose(out.matrix, kron(named_density("zero"), named_density("one")))


def test_gadget_applies_t_to_data_qubit():
    psi = np.array([0.6, 0.8j])
    rho = np.outer(psi, psi.conj())
    state = DenseState(kron(named_density("a"), rho))
    out = apply_channel_dense(state, ChannelSpec("gadget"), [0, 1])
    assert out.num_qubits == 1
    assert np.allclose(out.matrix, T @ rho @ T.conj().T)


def test_gadget_on_reversed_targets_keeps_register_order():
    state = product_state(["plus", "zero", "a"])
    out = apply_channel_dense(state, ChannelSpec("gadget"), [2, 0])
    expected = kron(T @ named_density("plus") @ T.conj().T, named_density("zero"))
    assert np.allclose(out.matrix, expected)


def test_layout_rules():
    lay = step_layout(4, [2, 0], 2, 1)
    assert lay.post_width == 3 and lay.outputs == (0,)
    assert lay.passthrough_post == (1, 2)
    assert lay.relabel(["a", "b", "c", "d"]) == ["a", "b", "d"]
    grow = step_layout(2, [1], 1, 2)
    assert grow.outputs == (2, 1)
    assert grow.relabel(["a", "b"]) == ["a", "b", "new0"]
    with pytest.raises(RegisterError):
        step_layout(2, [0, 0], 2, 2)
    with pytest.raises(RegisterError):
        step_layout(2, [2], 1, 1)
    with pytest.raises(RegisterError):
        step_layout(2, [0], 2, 2)


def test_expectation_of_observables():
    state = product_state(["zero", "plus", "one"])
    assert expectation(state, Observable.basis_projector([0, 2], [0, 1])) == pytest.approx(1)
    assert expectation(state, Observable.from_pauli("ZXZ")) == pytest.approx(-1)
    assert expectation(state, Observable.product({1: "minus"})) == pytest.approx(0, abs=1e-15)
    e = np.diag([0.2, 0.8])
    assert expectation(state, embed_operator(e, [2], 3)) == pytest.approx(0.8)
    with pytest.raises(OracleError, match="shape"):
        expectation(state, np.eye(2))


def test_embed_operator_brute_force():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(4, 4))
    full = embed_operator(m, [2, 0], 3)
    # reference: move qubit order (2, 0, 1) -> (0, 1, 2) with an explicit permutation matrix
    perm = np.zeros((8, 8))
    for b in range(8):
        q2, q0, q1 = (b >> 2) & 1, (b >> 1) & 1, b & 1
        perm[(q0 << 2) | (q1 << 1) | q2, b] = 1
    assert np.allclose(full, perm @ np.kron(m, I2) @ perm.T)


def test_choi_of_identity_is_bell_pair():
    bell = np.zeros(4)
    bell[[0, 3]] = 1 / np.sqrt(2)
    assert np.allclose(choi_state(ChannelSpec("i")).matrix, np.outer(bell, bell))


def test_choi_of_trace_out():
    rho = choi_state(ChannelSpec("trace_out")).matrix
    assert rho.shape == (2, 2)
    assert np.allclose(rho, np.eye(2) / 2)


def test_dense_state_validation():
    with pytest.raises(OracleError, match="trace"):
        DenseState(np.eye(2))
    with pytest.raises(OracleError, match="Hermitian"):
        DenseState(np.array([[0.5, 1], [0, 0.5]]))
    with pytest.raises(OracleError, match="shape"):
        DenseState(np.eye(3) / 3)
    with pytest.raises(OracleError, match="limited"):
        DenseState(np.eye(2**11) / 2**11)
    assert DenseState(np.eye(2) / 2).min_eigenvalue() == pytest.approx(0.5)


def test_register_growth_limit():
    state = DenseState(np.eye(2**10) / 2**10)
    with pytest.raises(OracleError, match="grow"):
        apply_channel_dense(state, ChannelSpec("append_state", {"state": "zero"}), [])


def test_simulate_full_circuit_against_hand_product():
    doc = {
        "num_qubits": 2,
        "initial": ["zero", "zero"],
        "ops": [
            {"gate": "h", "targets": [0]},
            {"gate": "t", "targets": [0]},
            {"gate": "cnot", "targets": [0, 1]},
            {"gate": "depolarizing", "p": 0.2, "targets": [1]},
        ],
        "observable": {"kind": "product", "factors": {"0": "plus", "1": "Z"}},
    }
    c = parse_circuit(json.dumps(doc))
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    u = cnot @ kron(T @ H, I2)
    rho = u @ kron(named_density("zero"), named_density("zero")) @ u.conj().T
    p = 0.2
    paulis = [I2, np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    weights = [1 - 3 * p / 4, p / 4, p / 4, p / 4]
    rho = sum(w * kron(I2, s) @ rho @ kron(I2, s).conj().T for w, s in zip(weights, paulis))
    e = kron(named_density("plus"), paulis[3])
    assert np.allclose(simulate(c).matrix, rho)
    assert exact_value(c) == pytest.approx(np.trace(e @ rho).real, abs=1e-12)
