"""Equivariant maps between coset modules and Schreier-graph spectra.

``perm_matrix(H, g)`` is the matrix of left translation on G/H with
``M[g C, C] = 1``.  An intertwiner T: Q[G/H1] -> Q[G/H2] satisfies
``T perm_matrix(H1, g) = perm_matrix(H2, g) T`` for every g.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .groups import FiniteGroup, SubgroupHandle


class TransplantError(ValueError):
    pass


class NoInvertibleIntertwiner(TransplantError):
    pass


class NotGenerating(TransplantError):
    pass


def perm_matrix(H: SubgroupHandle, g: int) -> np.ndarray:
    n = H.index
    m = np.zeros((n, n), dtype=np.int64)
    m[H.left_translation(g), np.arange(n)] = 1
    return m


def double_coset_basis(G: FiniteGroup, H1: SubgroupHandle, H2: SubgroupHandle) -> list[np.ndarray]:
    """Indicator matrices of the G-orbits on G/H2 x G/H1.

    Ordered by orbit size, ties by the first pair (row-major) in the orbit.
    """
    t1, t2 = H1.all_translations, H2.all_translations
    n2, n1 = H2.index, H1.index
    label = np.full((n2, n1), -1, dtype=np.int64)
    orbits = []
    for d in range(n2):
        for c in range(n1):
            if label[d, c] < 0:
                label[t2[:, d], t1[:, c]] = len(orbits)
                orbits.append((d, c))
    mats = [(label == k).astype(np.int64) for k in range(len(orbits))]
    order = sorted(range(len(mats)), key=lambda k: (int(mats[k].sum()), orbits[k]))
    return [mats[k] for k in order]


def bareiss_det(m) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [[int(x) for x in row] for row in np.asarray(m).tolist()]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def charpoly(m) -> list[int]:
    """Coefficients of det(xI - M), leading first, by Berkowitz's division-free recursion."""
    a = [[int(x) for x in row] for row in np.asarray(m).tolist()]
    n = len(a)
    poly = [1]
    for r in range(n):
        # grow from the leading r x r block to (r+1) x (r+1)
        row = a[r][:r]
        col = [a[i][r] for i in range(r)]
        toeplitz = [1, -a[r][r]]
        v = col
        for _ in range(r):
            toeplitz.append(-sum(x * y for x, y in zip(row, v)))
            v = [sum(a[i][j] * v[j] for j in range(r)) for i in range(r)]
        poly = [sum(toeplitz[i - j] * poly[j] for j in range(min(i, r) + 1)) for i in range(r + 2)]
    return poly


@dataclass
class IntertwinerMatrix:
    T: np.ndarray
    coefficients: tuple[int, ...]
    det: int

    def to_json(self) -> dict:
        return {"T": self.T.tolist(), "coefficients": list(self.coefficients), "det": self.det}


def _coefficient_order(m: int, bound: int):
    cands = [c for c in itertools.product(range(-bound, bound + 1), repeat=m) if any(c)]
    cands.sort(key=lambda c: (sum(map(abs, c)), sum(1 for x in c if x), tuple(-x for x in c)))
    return cands


def build_intertwiner(G: FiniteGroup, H1: SubgroupHandle, H2: SubgroupHandle, bound: int = 3) -> IntertwinerMatrix:
    """First invertible integer combination of the double-coset basis.

    Candidates are visited by L1 norm, then support size, then descending
    lexicographic order, so a single basis matrix with coefficient 1 wins
    when it is invertible.
    """
    if H1.index != H2.index:
        raise NoInvertibleIntertwiner("coset spaces have different sizes")
    basis = double_coset_basis(G, H1, H2)
    for c in _coefficient_order(len(basis), bound):
        T = sum(ci * b for ci, b in zip(c, basis))
        det = bareiss_det(T)
        if det != 0:
            return IntertwinerMatrix(T, c, det)
    raise NoInvertibleIntertwiner(f"no invertible combination with |c| <= {bound}")


def intertwining_witness(G: FiniteGroup, H1: SubgroupHandle, H2: SubgroupHandle, T: np.ndarray):
    """First (g, row, col) where T lambda1(g) != lambda2(g) T, or None."""
    t1, t2 = H1.all_translations, H2.all_translations
    for g in range(G.order):
        # (T L1)[d, c] = T[d, g c] and (L2 T)[d, c] = T[g^-1 d, c]
        lhs = T[:, t1[g]]
        rhs = np.empty_like(T)
        rhs[t2[g], :] = T
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            return g, int(bad[0][0]), int(bad[0][1])
    return None


@dataclass
class SchreierGraph:
    subgroup: SubgroupHandle
    generators: list[int]
    adjacency: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.adjacency)

    def is_connected(self) -> bool:
        reach = {0}
        frontier = [0]
        sym = self.adjacency + self.adjacency.T
        while frontier:
            v = frontier.pop()
            for u in np.flatnonzero(sym[v]):
                if int(u) not in reach:
                    reach.add(int(u))
                    frontier.append(int(u))
        return len(reach) == self.n_vertices


def symmetrize(G: FiniteGroup, S: Sequence[int]) -> list[int]:
    return [int(s) for s in S] + [int(G.inverse[s]) for s in S]


def schreier_graph(G: FiniteGroup, H: SubgroupHandle, S: Sequence[int]) -> SchreierGraph:
    """Coset graph with one edge C -> sC per s in S (multiplicities kept).

    As an operator, ``(A f)(C) = sum_s f(s C)``, i.e. ``A = sum_s lambda(s^-1)``.
    """
    S = [int(s) for s in S]
    if len(G.closure(S)) != G.order:
        raise NotGenerating("the multiset does not generate the group")
    n = H.index
    adj = np.zeros((n, n), dtype=np.int64)
    for s in S:
        np.add.at(adj, (np.arange(n), H.left_translation(s)), 1)
    return SchreierGraph(H, S, adj)


@dataclass
class IsoscatteringReport:
    intertwines: bool
    intertwines_adjacency: bool
    charpoly_equal: bool
    invertible: bool
    T: np.ndarray
    charpoly: list[int]
    charpoly_other: list[int]
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.intertwines and self.intertwines_adjacency and self.charpoly_equal and self.invertible

    def to_json(self) -> dict:
        out = {
            "intertwines": self.intertwines,
            "charpoly_equal": self.charpoly_equal,
            "T": self.T.tolist(),
            "charpoly": self.charpoly,
            "invertible": self.invertible,
            "intertwines_adjacency": self.intertwines_adjacency,
        }
        if not self.charpoly_equal:
            out["charpoly_other"] = self.charpoly_other
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def verify_isoscattering_discrete(
    G: FiniteGroup,
    H1: SubgroupHandle,
    H2: SubgroupHandle,
    S: Sequence[int],
    T: np.ndarray | None = None,
) -> IsoscatteringReport:
    """Check T lambda1 = lambda2 T on all of G, T A1 = A2 T, and equal char polys.

    Adjacency is compared for S itself and for S with inverses added;
    characteristic polynomials use the symmetric (S and inverses) graphs.
    """
    if T is None:
        T = build_intertwiner(G, H1, H2).T
    T = np.asarray(T, dtype=np.int64)
    witness = None
    w = intertwining_witness(G, H1, H2, T)
    if w is not None:
        witness = {"check": "equivariance", "g": w[0], "row": w[1], "col": w[2]}
    adj_ok = True
    for gens in (list(S), symmetrize(G, S)):
        a1 = schreier_graph(G, H1, gens).adjacency
        a2 = schreier_graph(G, H2, gens).adjacency
        bad = np.argwhere(T @ a1 != a2 @ T)
        if len(bad):
            adj_ok = False
            if witness is None:
                witness = {"check": "adjacency", "row": int(bad[0][0]), "col": int(bad[0][1]),
                           "symmetrized": len(gens) != len(S)}
            break
    sym = symmetrize(G, S)
    p1 = charpoly(schreier_graph(G, H1, sym).adjacency)
    p2 = charpoly(schreier_graph(G, H2, sym).adjacency)
    if p1 != p2 and witness is None:
        k = next(i for i, (x, y) in enumerate(zip(p1, p2)) if x != y)
        witness = {"check": "charpoly", "coefficient": k, "values": [p1[k], p2[k]]}
    invertible = T.shape[0] == T.shape[1] and bareiss_det(T) != 0
    return IsoscatteringReport(w is None, adj_ok, p1 == p2, invertible, T, p1, p2, witness)
