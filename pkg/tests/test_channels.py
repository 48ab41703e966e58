from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import unitary_group

from pauli_shuffle.channels import (
    CHANNEL_NAMES,
    ChannelError,
    ChannelSpec,
    TransferMatrix,
    adjoint,
    build_named,
    channel_arity,
    channel_cost,
    choi_cost,
    compose,
    embed_transfer,
    identity_channel,
    kraus_operators,
    named,
    ptm_from_kraus,
)
from pauli_shuffle.magic import d_measure
from pauli_shuffle.oracle import choi_state
from pauli_shuffle.pauli import BlochVector, bloch_from_dense, pauli_matrix, dense_from_bloch

SQ2 = np.sqrt(2)

BUILTIN = [
    ChannelSpec(name, params)
    for name, params in [
        ("i", {}), ("x", {}), ("y", {}), ("z", {}), ("h", {}), ("s", {}), ("sdg", {}),
        ("t", {}), ("tdg", {}), ("cnot", {}), ("cz", {}), ("swap", {}),
        ("rz", {"theta": 0.37}), ("depolarizing", {"p": 0.2}), ("dephasing", {"p": 0.3}),
        ("amplitude_damping", {"gamma": 0.4}), ("trace_out", {}), ("trace_out", {"qubits": 1, "keep": 1}),
        ("append_state", {"state": "a"}), ("append_state", {"state": "maximally_mixed", "keep": 1}),
        ("measure_control", {}), ("measure_control", {"clifford": "h"}), ("gadget", {}),
    ]
]


def random_channel(n, m, rng, rank=3):
    """Random CPTP map via a Haar isometry into output x environment."""
    rank = max(rank, 2 ** (n - m))
    q = unitary_group.rvs(2**m * rank, random_state=rng)[:, : 2**n]
    kraus = [q[e * 2**m : (e + 1) * 2**m, :] for e in range(rank)]
    return ptm_from_kraus(kraus, n, m, name="random"), kraus


def dense_apply(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


def random_density(k, rng):
    g = rng.normal(size=(2**k, 2**k)) + 1j * rng.normal(size=(2**k, 2**k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def test_depolarizing_is_diagonal():
    p = 0.3
    assert np.allclose(named("depolarizing", p=p).entries, np.diag([1, 1 - p, 1 - p, 1 - p]), atol=1e-14)


def test_dephasing_shrinks_x_and_y():
    assert np.allclose(named("dephasing", p=0.4).entries, np.diag([1, 0.6, 0.6, 1]), atol=1e-14)


def test_amplitude_damping_entries():
    g = 0.36
    e = named("amplitude_damping", gamma=g).entries
    assert np.allclose(e[:, 0], [1, 0, 0, g])
    assert np.allclose(np.diag(e), [1, 0.8, 0.8, 1 - g])


def test_t_by_conjugation():
    t = np.diag([1, np.exp(1j * np.pi / 4)])
    x_image = bloch_from_dense(t @ pauli_matrix(1, 1) @ t.conj().T)
    tm = named("t")
    assert np.allclose(tm.entries[:, 1], x_image.coeffs, atol=1e-14)
    assert np.allclose(tm.entries[:, 1], [0, 1 / SQ2, 1 / SQ2, 0])
    assert channel_cost(tm) == pytest.approx(SQ2, abs=1e-12)


def test_t_squared_is_s():
    assert np.allclose(compose(named("t"), named("t")).entries, named("s").entries, atol=1e-12)


@pytest.mark.parametrize("name", ["i", "x", "y", "z", "h", "s", "sdg", "cnot", "cz", "swap"])
def test_cliffords_are_signed_permutations(name):
    tm = named(name)
    assert tm.is_clifford
    image, sign = tm.signed_permutation()
    assert sorted(image) == list(range(4**tm.in_qubits))
    assert set(np.abs(sign)) == {1}
    assert channel_cost(tm) == 1.0


def test_non_clifford_has_no_signed_permutation():
    assert not named("t").is_clifford
    with pytest.raises(ChannelError):
        named("t").signed_permutation()


def test_cnot_conjugation_table():
    tm = named("cnot")
    # X on the control spreads to the target; Z on the target spreads to the control
    assert tm.entries[1 + 4 * 1, 1] == 1
    assert tm.entries[3 + 4 * 3, 3 * 4] == 1


@pytest.mark.parametrize("spec", BUILTIN, ids=lambda s: f"{s.name}{dict(s.params)}")
def test_columns_match_dense_oracle(spec):
    kraus = kraus_operators(spec)
    n, m = channel_arity(spec)
    tm = build_named(spec)
    for i in range(4**n):
        image = dense_apply(kraus, pauli_matrix(i, n))
        assert np.max(np.abs(tm.entries[:, i] - bloch_from_dense(image).coeffs)) <= 1e-10


@pytest.mark.parametrize("spec", BUILTIN, ids=lambda s: f"{s.name}{dict(s.params)}")
def test_choi_cost_is_d_of_choi_state(spec):
    tm = build_named(spec)
    rho = choi_state(spec).matrix
    assert choi_cost(tm) == pytest.approx(d_measure(bloch_from_dense(rho)), abs=1e-9)


def test_trace_preservation():
    for spec in BUILTIN:
        assert build_named(spec).is_trace_preserving(1e-12), spec


def test_random_channel_duality(rng):
    for _ in range(100):
        n = int(rng.integers(1, 3))
        m = int(rng.integers(1, 3))
        tm, kraus = random_channel(n, m, rng)
        rho = random_density(n, rng)
        e = random_density(m, rng) * 2 - np.eye(2**m) * rng.random()
        lhs = np.trace(dense_apply(kraus, rho) @ e).real
        back = adjoint(tm).apply(bloch_from_dense(e))
        rhs = np.trace(rho @ dense_from_bloch(back)).real
        assert abs(lhs - rhs) <= 1e-10


def test_adjoint_is_involution_and_flags(rng):
    tm, _ = random_channel(1, 2, rng)
    a = adjoint(tm)
    assert a.heisenberg and (a.in_qubits, a.out_qubits) == (2, 1)
    assert not a.is_trace_preserving()
    assert np.allclose(adjoint(a).entries, tm.entries)
    with pytest.raises(ChannelError):
        compose(a, tm)


def test_cost_submultiplicative(rng):
    for _ in range(100):
        a, _ = random_channel(1, 1, rng)
        b, _ = random_channel(1, 1, rng)
        t = named(str(rng.choice(["t", "h", "tdg", "s"])))
        first = compose(t, a)
        both = compose(b, first)
        assert channel_cost(both) <= channel_cost(b) * channel_cost(first) + 1e-7
        assert channel_cost(first) <= channel_cost(t) * channel_cost(a) + 1e-7


def test_compose_matches_dense(rng):
    a, ka = random_channel(1, 2, rng)
    b, kb = random_channel(2, 1, rng)
    ab = compose(b, a)
    rho = random_density(1, rng)
    dense = dense_apply(kb, dense_apply(ka, rho))
    assert np.allclose(ab.apply(bloch_from_dense(rho)).coeffs, bloch_from_dense(dense).coeffs, atol=1e-12)


def test_compose_shape_mismatch():
    with pytest.raises(ChannelError, match="compose"):
        compose(named("cnot"), named("t"))


def test_embed_transfer_matches_kron():
    tm = embed_transfer(named("t"), [1], 2)
    kraus = [np.kron(np.eye(2), np.diag([1, np.exp(1j * np.pi / 4)]))]
    assert np.allclose(tm.entries, ptm_from_kraus(kraus, 2, 2).entries, atol=1e-12)
    flipped = embed_transfer(named("cnot"), [1, 0], 2)
    cnot_10 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]])
    assert np.allclose(flipped.entries, ptm_from_kraus([cnot_10], 2, 2).entries)


def test_identity_channel():
    assert np.array_equal(identity_channel(2).entries, np.eye(16))


def test_trace_out_and_append_costs():
    # discarding a qubit doubles the identity column; appending I/2 halves it
    assert channel_cost(named("trace_out")) == 2.0
    assert channel_cost(named("append_state", state="maximally_mixed")) == 0.5
    assert channel_arity(ChannelSpec("append_state", {"state": "a", "keep": 1})) == (1, 2)


def test_append_state_puts_new_qubit_first():
    tm = named("append_state", state="one", keep=1)
    v = tm.apply(BlochVector.from_labels({"I": 0.5, "X": 0.5}))
    assert v["ZX"] == pytest.approx(-0.25)
    assert v["IX"] == pytest.approx(0.25)


def test_gadget_and_adjoint_costs():
    g = named("gadget")
    assert (g.in_qubits, g.out_qubits) == (2, 1)
    assert channel_cost(g) == pytest.approx(2, abs=1e-12)
    assert channel_cost(adjoint(g)) == pytest.approx(2, abs=1e-12)


def test_measure_control_with_identity_is_trace_out():
    tm = named("measure_control", clifford="i")
    assert np.allclose(tm.entries, named("trace_out", keep=1).entries)


def test_kraus_validation():
    with pytest.raises(ChannelError, match="complete"):
        build_named(ChannelSpec("kraus", {"operators": [np.eye(2) * 0.5]}))
    sub = build_named(ChannelSpec("kraus", {"operators": [np.eye(2) * 0.5], "trace_preserving": False}))
    assert np.allclose(sub.entries, 0.25 * np.eye(4))
    with pytest.raises(ChannelError, match="shape"):
        build_named(ChannelSpec("kraus", {"operators": [np.eye(2), np.eye(4)]}))
    with pytest.raises(ChannelError, match="non-empty"):
        build_named(ChannelSpec("kraus", {"operators": []}))


def test_probability_range_checked():
    with pytest.raises(ChannelError):
        named("depolarizing", p=1.5)


def test_unknown_channel():
    with pytest.raises(ChannelError, match="unknown"):
        ChannelSpec("toffoli")


def test_aliases():
    assert np.array_equal(named("cx").entries, named("cnot").entries)
    assert np.array_equal(named("P").entries, named("s").entries)
    assert "gadget" in CHANNEL_NAMES


def test_transfer_matrix_shape_checked():
    with pytest.raises(ChannelError, match="shape"):
        TransferMatrix(np.eye(4), 2, 2)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_trace_out_cost_doubles_per_qubit(q):
    assert channel_cost(named("trace_out", qubits=q)) == 2.0**q


def test_appending_mixed_qubit_cancels_gadget_cost():
    padded = compose(named("append_state", state="maximally_mixed", keep=1), named("gadget"))
    assert channel_cost(padded) == pytest.approx(1, abs=1e-12)
    # ...but discarding it again brings the cost back
    again = compose(named("trace_out", keep=1), padded)
    assert channel_cost(again) == pytest.approx(2, abs=1e-12)
