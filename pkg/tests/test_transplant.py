import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from isoscatter.groups import SubgroupHandle
from isoscatter.transplant import (
    NoInvertibleIntertwiner,
    NotGenerating,
    bareiss_det,
    build_intertwiner,
    charpoly,
    double_coset_basis,
    intertwining_witness,
    perm_matrix,
    schreier_graph,
    symmetrize,
    verify_isoscattering_discrete,
)

int_matrices = st.integers(0, 6).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=n, max_size=n)
)


@settings(max_examples=100, deadline=None)
@given(int_matrices)
def test_bareiss_matches_sympy(m):
    expected = int(sympy.Matrix(m).det()) if m else 1
    assert bareiss_det(np.array(m, dtype=np.int64).reshape(len(m), len(m))) == expected


@settings(max_examples=100, deadline=None)
@given(int_matrices)
def test_charpoly_matches_sympy(m):
    expected = [int(c) for c in sympy.Matrix(m).charpoly().all_coeffs()] if m else [1]
    assert charpoly(np.array(m, dtype=np.int64).reshape(len(m), len(m))) == expected


def test_basis_trivial(psl32):
    whole = SubgroupHandle(psl32, range(168))
    basis = double_coset_basis(psl32, whole, whole)
    assert len(basis) == 1 and basis[0].tolist() == [[1]]


def test_basis_k1_k2(psl32, k1, k2, frozen):
    basis = double_coset_basis(psl32, k1, k2)
    assert len(basis) == 2
    N, comp = basis
    assert (N + comp == 1).all()
    assert (N.sum(axis=0) == 3).all() and (N.sum(axis=1) == 3).all()
    assert abs(bareiss_det(N)) == frozen["fano_incidence_abs_det"] == 24
    for b in basis:
        assert intertwining_witness(psl32, k1, k2, b) is None


def test_incidence_is_point_line_incidence(psl32, k1, k2):
    N = double_coset_basis(psl32, k1, k2)[0]
    lines = [psl32.perms[g][psl32.hyperplane_points([1, 0, 0])] for g in k2.reps]
    points = [psl32.perms[g][psl32.point_index([1, 0, 0])] for g in k1.reps]
    for d, line in enumerate(lines):
        for c, pt in enumerate(points):
            assert N[d, c] == int(pt in set(line.tolist()))


def test_build_intertwiner(psl32, k1, k2):
    it = build_intertwiner(psl32, k1, k2)
    assert it.coefficients == (1, 0) and abs(it.det) == 24
    assert bareiss_det(np.ones((7, 7), dtype=np.int64)) == 0
    same = build_intertwiner(psl32, k1, k1)
    assert np.array_equal(same.T, np.eye(7, dtype=np.int64))


def test_intertwiner_search_fails_when_bound_is_zero(psl32, k1, k2):
    with pytest.raises(NoInvertibleIntertwiner):
        build_intertwiner(psl32, k1, k2, bound=0)


def test_exhaustive_intertwining(psl32, k1, k2):
    T = build_intertwiner(psl32, k1, k2).T
    for g in range(168):
        assert np.array_equal(T @ perm_matrix(k1, g), perm_matrix(k2, g) @ T)


def test_schreier_graph(psl32, k1, gens):
    whole = SubgroupHandle(psl32, range(168))
    assert schreier_graph(psl32, whole, gens).adjacency.tolist() == [[2]]
    sg = schreier_graph(psl32, k1, symmetrize(psl32, gens))
    assert sg.n_vertices == 7 and (sg.adjacency.sum(axis=1) == 4).all()
    assert sg.is_connected()
    # A = sum_s lambda(s^-1)
    total = sum(perm_matrix(k1, int(psl32.inverse[s])) for s in gens)
    assert np.array_equal(schreier_graph(psl32, k1, gens).adjacency, total)
    with pytest.raises(NotGenerating):
        schreier_graph(psl32, k1, k1.members[:3].tolist())


def test_verify_k1_k2(psl32, k1, k2, gens, frozen):
    rep = verify_isoscattering_discrete(psl32, k1, k2, gens)
    assert rep.ok
    assert rep.charpoly == frozen["charpoly_points_lines"][0] == frozen["charpoly_points_lines"][1]
    out = rep.to_json()
    assert {"intertwines", "charpoly_equal", "T", "charpoly"} <= set(out)


def test_verify_trivial_and_conjugate(psl32, k1, gens):
    assert verify_isoscattering_discrete(psl32, k1, k1, gens).ok
    conj = k1.conjugate(17)
    rep = verify_isoscattering_discrete(psl32, k1, conj, gens)
    assert rep.ok
    T = rep.T
    assert (T.sum(axis=0) == 1).all() and (T.sum(axis=1) == 1).all()


def test_relabeling_preserves_verdicts(psl32, k1, k2, gens):
    # relabel cosets of K2 by a permutation P: T -> P T, adjacency -> P A P^T
    T = build_intertwiner(psl32, k1, k2).T
    rng = np.random.default_rng(3)
    P = np.eye(7, dtype=np.int64)[rng.permutation(7)]
    A1 = schreier_graph(psl32, k1, symmetrize(psl32, gens)).adjacency
    A2 = schreier_graph(psl32, k2, symmetrize(psl32, gens)).adjacency
    assert np.array_equal((P @ T) @ A1, (P @ A2 @ P.T) @ (P @ T))
    assert charpoly(P @ A2 @ P.T) == charpoly(A1)


@pytest.mark.parametrize("i,j", [(0, 0), (3, 5), (6, 2)])
def test_corrupted_intertwiner_is_caught(psl32, k1, k2, gens, i, j):
    T = build_intertwiner(psl32, k1, k2).T.copy()
    T[i, j] += 1
    rep = verify_isoscattering_discrete(psl32, k1, k2, gens, T)
    assert not rep.intertwines and rep.witness["check"] == "equivariance"
