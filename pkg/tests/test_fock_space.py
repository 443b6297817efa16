import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boundnoon.fock_space import (
    enumerate_basis,
    hop_operator,
    mirror_permutation,
    number_operator,
    sector_dimension,
    total_number_operator,
)


def brute_force_states(L, M):
    return [s for s in itertools.product(range(M + 1), repeat=L) if sum(s) == M]


@pytest.mark.parametrize("L, M, D", [(5, 2, 15), (1, 3, 1), (3, 3, 10)])
def test_dimension_examples(L, M, D):
    assert enumerate_basis(L, M).dim == D


def test_single_site_holds_everything():
    assert enumerate_basis(1, 3).states == ((3,),)


@given(L=st.integers(1, 8), M=st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_dimension_law_and_enumeration(L, M):
    basis = enumerate_basis(L, M)
    assert basis.dim == comb(M + L - 1, M) == sector_dimension(L, M)
    assert sorted(basis.states) == sorted(brute_force_states(L, M))


def test_ordering_is_descending_lexicographic():
    basis = enumerate_basis(4, 3)
    assert list(basis.states) == sorted(basis.states, reverse=True)
    assert basis.states[0] == (3, 0, 0, 0)
    assert basis.states[-1] == (0, 0, 0, 3)


def test_index_roundtrip_and_bound_indices():
    basis = enumerate_basis(5, 3)
    for i, s in enumerate(basis.states):
        assert basis.index_of(s) == i
    for j, idx in enumerate(basis.bound_indices(), start=1):
        assert basis.states[idx][j - 1] == 3
    with pytest.raises(KeyError):
        basis.index_of((1, 0, 0, 0, 0))


def test_invalid_sectors():
    with pytest.raises(ValueError):
        enumerate_basis(0, 2)
    with pytest.raises(ValueError):
        enumerate_basis(3, -1)


def test_occupations_are_read_only():
    basis = enumerate_basis(3, 2)
    with pytest.raises(ValueError):
        basis.occupations[0, 0] = 5


def test_number_operator_examples():
    np.testing.assert_array_equal(number_operator(enumerate_basis(2, 1), 1), np.diag([1.0, 0.0]))
    np.testing.assert_array_equal(number_operator(enumerate_basis(2, 2), 1), np.diag([2.0, 1.0, 0.0]))
    basis = enumerate_basis(4, 3)
    total = sum(np.trace(number_operator(basis, j)) for j in range(1, 5))
    assert total == 3 * basis.dim
    with pytest.raises(IndexError):
        number_operator(basis, 5)


def test_hop_operator_examples():
    b1 = enumerate_basis(2, 1)
    h = hop_operator(b1, 1)
    assert h[b1.index_of((0, 1)), b1.index_of((1, 0))] == 1.0
    b2 = enumerate_basis(2, 2)
    h = hop_operator(b2, 1)
    assert h[b2.index_of((1, 1)), b2.index_of((2, 0))] == pytest.approx(np.sqrt(2), abs=1e-15)
    with pytest.raises(IndexError):
        hop_operator(b2, 2)
    with pytest.raises(IndexError):
        hop_operator(b2, 0)


@pytest.mark.parametrize("L", range(2, 6))
@pytest.mark.parametrize("M", range(0, 4))
def test_hop_hermitian_and_number_conserving(L, M):
    basis = enumerate_basis(L, M)
    N = total_number_operator(basis)
    for j in range(1, L):
        h = hop_operator(basis, j)
        np.testing.assert_array_equal(h, h.conj().T)
        assert np.linalg.norm(h @ N - N @ h) < 1e-12


def test_number_operators_commute():
    basis = enumerate_basis(4, 3)
    ns = [number_operator(basis, j) for j in range(1, 5)]
    for a in ns:
        for b in ns:
            assert np.array_equal(a @ b, b @ a)


def test_mirror_permutation_is_involution():
    basis = enumerate_basis(5, 2)
    P = mirror_permutation(basis)
    np.testing.assert_array_equal(P @ P, np.eye(basis.dim))
    assert np.argmax(P[:, basis.bound_index(1)]) == basis.bound_index(5)
