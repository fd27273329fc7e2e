"""Tests for LUCJ parameter building, exact simulation, sampling, resources."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from sqdforge.determinants import Determinant
from sqdforge.errors import ConfigurationError, ResourceError, ShapeError
from sqdforge.lucj import (
    LucjParams,
    NoiseModel,
    PairLayout,
    SampleSet,
    build_lucj_params,
    estimate_resources,
    sample_bitstrings,
    simulate_lucj_state,
)

from _oracles import dense_lucj_state, sector_indices


def _random_params(rng, m, scale=0.3):
    k = rng.normal(scale=scale, size=(m, m))
    k = 0.5 * (k - k.T)
    layout = PairLayout.for_orbitals(m)
    j_same = np.zeros((2, m, m))
    for s in (0, 1):
        for p, q in layout.same_pairs:
            j_same[s, p, q] = rng.normal(scale=scale)
    j_cross = np.zeros(m)
    for p in layout.cross_sites:
        j_cross[p] = rng.normal(scale=scale)
    return LucjParams(K=k, J_same=j_same, J_cross=j_cross, layout=layout)


def _zero_params(m, k=None):
    layout = PairLayout.for_orbitals(m)
    return LucjParams(
        K=np.zeros((m, m)) if k is None else k,
        J_same=np.zeros((2, m, m)),
        J_cross=np.zeros(m),
        layout=layout,
    )


def test_params_reject_nonantisymmetric_k():
    m = 3
    with pytest.raises(ConfigurationError):
        _zero_params(m, k=np.eye(m))


def test_params_reject_offsite_couplings():
    m = 4
    layout = PairLayout.for_orbitals(m)
    j_same = np.zeros((2, m, m))
    j_same[0, 0, 2] = 0.1
    with pytest.raises(ConfigurationError):
        LucjParams(K=np.zeros((m, m)), J_same=j_same, J_cross=np.zeros(m), layout=layout)
    j_cross = np.zeros(m)
    j_cross[1] = 0.1
    with pytest.raises(ConfigurationError):
        LucjParams(
            K=np.zeros((m, m)), J_same=np.zeros((2, m, m)), J_cross=j_cross, layout=layout
        )


def test_layout_retains_expected_pairs():
    layout = PairLayout.for_orbitals(9)
    assert layout.same_pairs == tuple((p, p + 1) for p in range(8))
    assert layout.cross_sites == (0, 4, 8)


def test_build_zero_t2_is_trivial_identity():
    params = build_lucj_params(np.zeros((2, 2, 2, 2)), None, 4, 2, 2)
    assert params.trivial
    assert np.all(params.K == 0.0)
    assert np.all(params.J_same == 0.0)
    assert np.all(params.J_cross == 0.0)


def test_build_zero_t2_with_t1_still_rotates():
    t1 = np.array([[0.2, -0.1], [0.05, 0.3]])
    params = build_lucj_params(np.zeros((2, 2, 2, 2)), t1, 4, 2, 2)
    assert params.trivial
    np.testing.assert_allclose(params.K[:2, 2:], t1)
    np.testing.assert_allclose(params.K[2:, :2], -t1.T)


def test_build_locality_mask():
    rng = np.random.default_rng(31)
    t2 = rng.normal(scale=0.1, size=(2, 2, 3, 3))
    params = build_lucj_params(t2, None, 5, 2, 2)
    layout = params.layout
    for s in (0, 1):
        for p in range(5):
            for q in range(5):
                if (p, q) not in layout.same_pairs:
                    assert params.J_same[s, p, q] == 0.0
    for p in range(5):
        if p not in layout.cross_sites:
            assert params.J_cross[p] == 0.0


def test_build_construct_then_recover():
    # Build a rank-1 t2 from a chosen eigenpair, factorize, and confirm the
    # rotation and coupling reproduce the embedded block matrix.
    rng = np.random.default_rng(5)
    m, no, nv = 4, 2, 2
    u = rng.normal(size=no * nv)
    u /= np.linalg.norm(u)
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    lam = -0.8
    t2 = (lam * np.outer(u, u)).reshape(no, nv, no, nv).transpose(0, 2, 1, 3)
    params = build_lucj_params(t2, None, m, no, no)
    assert not params.trivial

    x = np.zeros((m, m))
    x[:no, no:] = u.reshape(no, nv)
    x[no:, :no] = u.reshape(no, nv).T
    w = expm(params.K)
    d = np.diag(w.T @ x @ w)
    np.testing.assert_allclose(w @ np.diag(d) @ w.T, x, atol=1e-10)
    j_full = lam * np.outer(d, d)
    for p, q in params.layout.same_pairs:
        np.testing.assert_allclose(params.J_same[0, p, q], j_full[p, q], atol=1e-10)
        np.testing.assert_allclose(params.J_same[1, p, q], j_full[p, q], atol=1e-10)
    for p in params.layout.cross_sites:
        np.testing.assert_allclose(params.J_cross[p], j_full[p, p], atol=1e-10)


def test_build_shape_errors():
    with pytest.raises(ShapeError):
        build_lucj_params(np.zeros((2, 2, 2, 2)), None, 4, 2, 1)
    with pytest.raises(ShapeError):
        build_lucj_params(np.zeros((2, 2, 2, 2)), np.zeros((1, 2)), 4, 2, 2)


def test_simulate_j_zero_returns_reference():
    rng = np.random.default_rng(8)
    m = 4
    k = rng.normal(scale=0.4, size=(m, m))
    params = _zero_params(m, k=0.5 * (k - k.T))
    ref = Determinant(0b0011, 0b0001)
    state = simulate_lucj_state(params, ref, (m, 2, 1))
    idx = state.basis.index(ref)
    np.testing.assert_allclose(np.abs(state.amplitudes[idx]), 1.0, atol=1e-10)
    others = np.delete(np.abs(state.amplitudes), idx)
    np.testing.assert_allclose(others, 0.0, atol=1e-10)


def test_simulate_k_zero_is_reference_up_to_phase():
    rng = np.random.default_rng(9)
    m = 4
    params = _random_params(rng, m)
    params = LucjParams(
        K=np.zeros((m, m)),
        J_same=params.J_same,
        J_cross=params.J_cross,
        layout=params.layout,
    )
    ref = Determinant(0b0101, 0b0011)
    state = simulate_lucj_state(params, ref, (m, 2, 2))
    idx = state.basis.index(ref)
    np.testing.assert_allclose(np.abs(state.amplitudes[idx]), 1.0, atol=1e-10)


@pytest.mark.parametrize("seed,n_alpha,n_beta", [(1, 2, 2), (2, 2, 1), (3, 1, 1), (4, 3, 2)])
def test_simulate_matches_dense_oracle(seed, n_alpha, n_beta):
    m = 4
    rng = np.random.default_rng(seed)
    params = _random_params(rng, m)
    ref_alpha = (1 << n_alpha) - 1
    ref_beta = (1 << n_beta) - 1
    state = simulate_lucj_state(
        params, Determinant(ref_alpha, ref_beta), (m, n_alpha, n_beta)
    )
    full = dense_lucj_state(params.K, params.J_same, params.J_cross, m, ref_alpha, ref_beta)
    want = full[sector_indices(m, n_alpha, n_beta)]
    np.testing.assert_allclose(state.amplitudes, want, atol=1e-8)


def test_simulate_support_confined_to_sector():
    rng = np.random.default_rng(12)
    m = 4
    params = _random_params(rng, m)
    full = dense_lucj_state(params.K, params.J_same, params.J_cross, m, 0b0011, 0b0001)
    inside = sector_indices(m, 2, 1)
    outside = np.setdiff1d(np.arange(len(full)), inside)
    np.testing.assert_allclose(full[outside], 0.0, atol=1e-12)
    state = simulate_lucj_state(params, Determinant(0b0011, 0b0001), (m, 2, 1))
    np.testing.assert_allclose(np.linalg.norm(state.amplitudes), 1.0, atol=1e-10)


def test_simulate_cap():
    m = 15
    with pytest.raises(ResourceError):
        simulate_lucj_state(_zero_params(m), Determinant(1, 1), (m, 1, 1))


def test_simulate_reference_mismatch():
    with pytest.raises(ConfigurationError):
        simulate_lucj_state(_zero_params(4), Determinant(0b0011, 0b0001), (4, 2, 2))


def test_sampling_deterministic():
    rng = np.random.default_rng(21)
    params = _random_params(rng, 4)
    state = simulate_lucj_state(params, Determinant(0b0011, 0b0011), (4, 2, 2))
    noise = NoiseModel(p_flip=0.02, p_depol=0.1)
    one = sample_bitstrings(state, 2000, noise, seed=77)
    two = sample_bitstrings(state, 2000, noise, seed=77)
    assert one.entries == two.entries
    three = sample_bitstrings(state, 2000, noise, seed=78)
    assert one.entries != three.entries


def test_sampling_point_mass_noiseless():
    params = _zero_params(3)
    state = simulate_lucj_state(params, Determinant(0b011, 0b001), (3, 2, 1))
    samples = sample_bitstrings(state, 500, NoiseModel(), seed=1)
    assert samples.entries == {Determinant(0b011, 0b001).to_string(3): 500}


def test_sampling_number_conserving_without_noise():
    rng = np.random.default_rng(33)
    params = _random_params(rng, 4)
    state = simulate_lucj_state(params, Determinant(0b0011, 0b0011), (4, 2, 2))
    samples = sample_bitstrings(state, 100_000, NoiseModel(), seed=5)
    for text in samples.entries:
        assert text[:4].count("1") == 2
        assert text[4:].count("1") == 2


def test_sampling_zero_shots():
    params = _zero_params(2)
    state = simulate_lucj_state(params, Determinant(0b01, 0b01), (2, 1, 1))
    samples = sample_bitstrings(state, 0, NoiseModel(), seed=3)
    assert samples.entries == {} and samples.n_shots == 0


def test_noise_monotone_in_depol():
    rng = np.random.default_rng(44)
    params = _random_params(rng, 3)
    state = simulate_lucj_state(params, Determinant(0b011, 0b001), (3, 2, 1))

    def mean_correct(p_depol):
        fractions = []
        for seed in range(20):
            samples = sample_bitstrings(
                state, 400, NoiseModel(p_depol=p_depol), seed=seed
            )
            fractions.append(
                samples.weighted_fraction(lambda t: t.count("1") == 3)
            )
        return np.mean(fractions)

    levels = [mean_correct(p) for p in (0.0, 0.3, 0.7, 1.0)]
    assert all(a >= b for a, b in zip(levels, levels[1:]))


def test_sample_set_validation():
    with pytest.raises(ConfigurationError):
        SampleSet(entries={"0101": 3}, n_shots=4, M=2)
    with pytest.raises(ConfigurationError):
        SampleSet(entries={"01x1": 4}, n_shots=4, M=2)
    with pytest.raises(ConfigurationError):
        NoiseModel(p_flip=1.2)


def test_resources_closed_form():
    for m in (1, 2, 3, 5, 9, 27):
        est = estimate_resources(m)
        want = 4 * m * (m - 1) + 4 * (m - 1) + 2 * ((m + 3) // 4)
        assert est.two_qubit_count == want
        assert est.n_qubits == 2 * m
        assert est.n_ancillas == (m + 3) // 4


def test_resources_single_orbital():
    est = estimate_resources(1)
    assert est.two_qubit_count == 2
    assert est.n_ancillas == 1


def test_resources_published_scale():
    est = estimate_resources(27)
    assert est.n_qubits == 54
    assert abs(est.two_qubit_count - 2640) <= 0.15 * 2640
    assert abs(est.two_qubit_depth - 122) <= 0.15 * 122


def test_resources_quadratic_coefficient():
    counts = []
    squares = []
    for m in range(5, 32):
        est = estimate_resources(m)
        counts.append(est.two_qubit_count)
        squares.append(est.n_qubits**2)
    coeff = np.linalg.lstsq(
        np.array(squares, dtype=float)[:, None], np.array(counts, dtype=float), rcond=None
    )[0][0]
    assert 0.8 <= coeff <= 1.1
