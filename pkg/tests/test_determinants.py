"""Tests for determinant bit arithmetic and Slater-Condon matrix elements."""

from __future__ import annotations

import numpy as np
import pytest

from sqdforge.determinants import (
    Determinant,
    DeterminantBasis,
    enumerate_connected,
    excitation_degree,
    slater_condon,
)
from sqdforge.errors import ShapeError
from sqdforge.integrals import IntegralSet

from _oracles import (
    dense_sector_hamiltonian,
    random_integral_arrays,
    sector_masks,
)


def _sector_basis(m, n_alpha, n_beta):
    dets = [
        Determinant(a, b)
        for a in sector_masks(m, n_alpha)
        for b in sector_masks(m, n_beta)
    ]
    return DeterminantBasis(dets, m)


def test_string_round_trip():
    det = Determinant(alpha=0b101, beta=0b010)
    text = det.to_string(3)
    assert text == "101010"
    assert Determinant.from_string(text) == det


def test_string_orbital_zero_leftmost():
    det = Determinant(alpha=0b001, beta=0b100)
    assert det.to_string(3) == "100001"


def test_from_string_rejects_garbage():
    with pytest.raises(ShapeError):
        Determinant.from_string("10x0")
    with pytest.raises(ShapeError):
        Determinant.from_string("101")


def test_to_string_rejects_overflow():
    with pytest.raises(ShapeError):
        Determinant(alpha=0b100, beta=0).to_string(2)


def test_ordering_is_lexicographic():
    dets = [Determinant(2, 1), Determinant(1, 2), Determinant(1, 1)]
    assert sorted(dets) == [Determinant(1, 1), Determinant(1, 2), Determinant(2, 1)]


def test_basis_deduplicates_and_indexes():
    basis = DeterminantBasis([Determinant(1, 2), Determinant(1, 2), Determinant(2, 1)], 2)
    assert len(basis) == 2
    assert basis.index(Determinant(1, 2)) == 0
    assert Determinant(2, 1) in basis
    with pytest.raises(KeyError):
        basis.index(Determinant(3, 0))


def test_excitation_degree():
    a = Determinant(0b0011, 0b0001)
    assert excitation_degree(a, a) == 0
    assert excitation_degree(a, Determinant(0b0101, 0b0001)) == 1
    assert excitation_degree(a, Determinant(0b1100, 0b0001)) == 2
    assert excitation_degree(a, Determinant(0b1100, 0b0010)) == 3


def test_single_particle_diagonal():
    h = np.zeros((2, 2))
    h[0, 0] = -1.25
    ints = IntegralSet.from_arrays(h, np.zeros((2, 2, 2, 2)), n_alpha=1, n_beta=0, e_core=0.3)
    det = Determinant(alpha=0b01, beta=0)
    np.testing.assert_allclose(slater_condon(det, det, ints), -1.25 + 0.3)


def test_degree_three_is_zero():
    rng = np.random.default_rng(3)
    h, g4, e_core = random_integral_arrays(rng, 4)
    ints = IntegralSet.from_arrays(h, g4, n_alpha=2, n_beta=1, e_core=e_core)
    a = Determinant(0b0011, 0b0001)
    b = Determinant(0b1100, 0b0010)  # two alpha moves plus one beta move
    assert excitation_degree(a, b) == 3
    assert slater_condon(a, b, ints) == 0.0


def test_popcount_mismatch_gives_zero():
    ints = IntegralSet.from_arrays(
        np.eye(2), np.zeros((2, 2, 2, 2)), n_alpha=1, n_beta=0
    )
    assert slater_condon(Determinant(0b01, 0), Determinant(0b11, 0), ints) == 0.0


def test_shape_error_on_oversized_determinant():
    ints = IntegralSet.from_arrays(np.eye(2), np.zeros((2, 2, 2, 2)), n_alpha=1, n_beta=0)
    with pytest.raises(ShapeError):
        slater_condon(Determinant(0b100, 0), Determinant(0b100, 0), ints)


@pytest.mark.parametrize(
    "m,n_alpha,n_beta",
    [(2, 1, 1), (3, 2, 1), (3, 1, 1), (3, 2, 2), (3, 3, 0), (2, 2, 1)],
)
def test_matrix_matches_dense_oracle(m, n_alpha, n_beta):
    rng = np.random.default_rng(100 * m + 10 * n_alpha + n_beta)
    h, g4, e_core = random_integral_arrays(rng, m)
    ints = IntegralSet.from_arrays(h, g4, n_alpha=n_alpha, n_beta=n_beta, e_core=e_core)
    basis = _sector_basis(m, n_alpha, n_beta)
    built = np.array(
        [[slater_condon(a, b, ints) for b in basis] for a in basis]
    )
    want = dense_sector_hamiltonian(h, g4, e_core, m, n_alpha, n_beta)
    np.testing.assert_allclose(built, want, atol=1e-12, rtol=0.0)


def test_hermiticity_random_pairs():
    rng = np.random.default_rng(17)
    h, g4, e_core = random_integral_arrays(rng, 4)
    ints = IntegralSet.from_arrays(h, g4, n_alpha=2, n_beta=2, e_core=e_core)
    basis = _sector_basis(4, 2, 2)
    for _ in range(60):
        a = basis[rng.integers(len(basis))]
        b = basis[rng.integers(len(basis))]
        np.testing.assert_allclose(
            slater_condon(a, b, ints), slater_condon(b, a, ints), atol=1e-14
        )


def test_connected_empty_when_fully_occupied():
    assert enumerate_connected(Determinant(0b1, 0b1), 1) == []


def test_connected_single_electron():
    out = enumerate_connected(Determinant(0b01, 0), 2)
    assert out == [Determinant(0b10, 0)]


def test_connected_matches_degree_scan():
    m, n_alpha, n_beta = 4, 2, 2
    basis = _sector_basis(m, n_alpha, n_beta)
    a = Determinant(0b0011, 0b0011)
    got = enumerate_connected(a, m)
    want = sorted(b for b in basis if b != a and excitation_degree(a, b) <= 2)
    assert got == want


def test_connected_excludes_self_and_sorted():
    out = enumerate_connected(Determinant(0b011, 0b001), 3)
    assert Determinant(0b011, 0b001) not in out
    assert out == sorted(set(out))


def test_connected_rejects_oversized():
    with pytest.raises(ShapeError):
        enumerate_connected(Determinant(0b100, 0), 2)
