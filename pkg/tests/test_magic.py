from __future__ import annotations

import itertools

import numpy as np
import pytest

from pauli_shuffle import magic
from pauli_shuffle.magic import (
    Label,
    MagicError,
    census,
    classify,
    cross_section,
    d_measure,
    enumerate_stabilizer_states,
    family_state,
    is_valid_state,
    random_density,
    raster_csv,
    robustness,
    robustness_lp,
    stabilizer_count,
)
from pauli_shuffle.pauli import BlochVector, PauliString, bloch_from_dense, dense_from_bloch, pauli_matrix
from pauli_shuffle.states import named_density

SQ2 = np.sqrt(2)


def brute_force_stabilizer_states(n):
    """Projectors prod_k (I + s_k g_k) / 2^n over independent commuting generator sets."""
    dim = 2**n
    paulis = [PauliString.from_index(i, n) for i in range(1, 4**n)]
    found = {}
    for gens in itertools.combinations(paulis, n):
        mats = [g.to_matrix() for g in gens]
        if any(not np.allclose(a @ b, b @ a) for a, b in itertools.combinations(mats, 2)):
            continue
        for signs in itertools.product((1, -1), repeat=n):
            rho = np.eye(dim, dtype=complex)
            for s, m in zip(signs, mats):
                rho = rho @ (np.eye(dim) + s * m) / 2
            if abs(np.trace(rho).real - 1) > 1e-9:
                continue  # dependent generators give rank != 1
            key = tuple(np.round(bloch_from_dense(rho).coeffs * dim).astype(int))
            found[key] = rho
    return found


@pytest.mark.parametrize("n", [1, 2])
def test_enumeration_matches_brute_force(n):
    stab = enumerate_stabilizer_states(n)
    mine = {tuple(row.astype(int)) for row in stab.signs}
    assert mine == set(brute_force_stabilizer_states(n))


@pytest.mark.parametrize("n,count", [(1, 6), (2, 60), (3, 1080)])
def test_counts(n, count):
    assert stabilizer_count(n) == count
    assert enumerate_stabilizer_states(n).count == count


@pytest.mark.parametrize("n", [1, 2, 3])
def test_enumerated_states_are_pure(n):
    stab = enumerate_stabilizer_states(n)
    assert len({row.tobytes() for row in stab.signs}) == stab.count
    for i in range(0, stab.count, max(1, stab.count // 40)):
        rho = dense_from_bloch(stab[i])
        assert np.allclose(rho @ rho, rho, atol=1e-12)
        assert np.trace(rho).real == pytest.approx(1)


def test_enumeration_bounds():
    with pytest.raises(MagicError):
        enumerate_stabilizer_states(4)


def test_magic_state_constants():
    a = bloch_from_dense(named_density("a"))
    assert d_measure(a) == pytest.approx((1 + SQ2) / 2, abs=1e-12)
    assert robustness(a) == pytest.approx(SQ2, abs=1e-9)
    c = classify(a)
    assert c.label is Label.MAGIC
    assert classify(a, full_lp=True).r_value == pytest.approx(SQ2, abs=1e-9)


def test_lp_certificate(rng):
    for _ in range(10):
        v = random_density(2, rng)
        res = robustness_lp(v)
        stab = enumerate_stabilizer_states(2)
        assert np.allclose(res.weights @ stab.coeffs, v.coeffs, atol=1e-8)
        assert res.weights.sum() == pytest.approx(1, abs=1e-8)
        assert res.value == pytest.approx(np.abs(res.weights).sum(), abs=1e-8)
        assert res.residual <= magic.RESIDUAL_TOL


def test_lp_needs_matching_width():
    with pytest.raises(MagicError):
        robustness_lp(BlochVector(1, [0.5, 0, 0, 0.5]), enumerate_stabilizer_states(2))


def test_d_never_exceeds_r(rng):
    for _ in range(500):
        v = random_density(2, rng, rank=int(rng.integers(1, 5)))
        assert d_measure(v) <= robustness(v) + 1e-7


def test_stabilizer_label_implies_small_d(rng):
    for _ in range(300):
        c = classify(random_density(2, rng, rank=int(rng.integers(2, 5))))
        if c.label is Label.STABILIZER:
            assert c.d_value <= 1 + c.tol
        if c.label is Label.BOUND:
            assert c.d_value <= 1 + c.tol < c.r_value


def test_single_qubit_has_no_bound_states(rng):
    for _ in range(200):
        v = random_density(1, rng, rank=int(rng.integers(1, 3)))
        assert classify(v, full_lp=True).label in (Label.STABILIZER, Label.MAGIC)


def test_classify_shortcut_agrees_with_full_lp(rng):
    for _ in range(60):
        v = random_density(2, rng)
        assert classify(v).label == classify(v, full_lp=True).label


def test_stabilizer_mixture_is_stabilizer():
    rho = 0.5 * np.kron(named_density("zero"), named_density("zero"))
    rho += 0.5 * np.kron(named_density("plus"), named_density("i_minus"))
    c = classify(bloch_from_dense(rho), full_lp=True)
    assert c.label is Label.STABILIZER and c.r_value == pytest.approx(1, abs=1e-7)
    assert set(c.to_dict()) >= {"label", "d_value", "r_value"}


def test_bound_state_exists():
    # inside D <= 1 but outside the stabilizer polytope
    v = family_state("a", 0.1, 0.1)
    assert is_valid_state(v)
    c = classify(v)
    assert d_measure(v) <= 1 + 1e-7
    assert c.label is Label.BOUND and c.r_value > 1


def test_random_density_is_a_state(rng):
    acc = np.zeros((4, 4), dtype=complex)
    for _ in range(4000):
        rho = dense_from_bloch(random_density(2, rng))
        assert np.linalg.eigvalsh(rho).min() > -1e-12
        assert np.trace(rho).real == pytest.approx(1)
        acc += rho
    assert np.max(np.abs(acc / 4000 - np.eye(4) / 4)) < 0.01


def test_random_density_rank(rng):
    rho = dense_from_bloch(random_density(2, rng, rank=1))
    assert np.allclose(rho @ rho, rho, atol=1e-10)
    with pytest.raises(MagicError):
        random_density(2, rng, rank=5)


def test_census_is_reproducible():
    a = census(2, 300, seed=4, workers=1)
    b = census(2, 300, seed=4, workers=1)
    assert a == b
    assert sum(a["counts"].values()) == 300
    assert sum(a["fractions"].values()) == pytest.approx(1)
    with pytest.raises(MagicError):
        census(2, 0)


def test_family_origin_and_validity():
    for fam in "abc":
        v = family_state(fam, 0.0, 0.0)
        expected = np.eye(4) / 4 + (0.2 * pauli_matrix(15, 2) if fam == "c" else 0)
        assert np.allclose(dense_from_bloch(v), expected)
        assert classify(v).label is Label.STABILIZER
        assert not is_valid_state(family_state(fam, 0.35, 0.35))
    with pytest.raises(MagicError):
        family_state("d", 0, 0)


def test_cross_section_small():
    rows = cross_section("a", resolution=7, workers=1)
    assert len(rows) == 49
    assert rows[0][:2] == (-0.35, -0.35)
    assert dict(((x, y), lab) for x, y, lab in rows)[(0.0, 0.0)] == "stabilizer"
    text = raster_csv(rows)
    assert text.splitlines()[0] == "x,y,class"
    assert len(text.splitlines()) == 50
    with pytest.raises(MagicError):
        cross_section("a", resolution=1)
