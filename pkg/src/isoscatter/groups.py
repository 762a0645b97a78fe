"""Finite groups as Cayley tables, Gassmann triples and covers of free groups.

Elements are integer indices.  Groups built from a faithful permutation
action keep the permutations (``perms[i][x]`` is the image of point x) and
use ``(g h)(x) = g(h(x))``.  Cosets are left cosets ``gH``; G acts on them by
left translation.
"""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .schottky import ReducedWord, alphabet, free_reduce, invert_letters

MAX_PRIME = 3


class GroupError(ValueError):
    pass


class TooLarge(GroupError):
    pass


class OrderMismatch(GroupError):
    def __init__(self, n1: int, n2: int):
        super().__init__(f"subgroup orders differ: {n1} != {n2}")
        self.orders = (n1, n2)


class NotAutomorphism(GroupError):
    pass


class NotInvolution(GroupError):
    pass


class NotSurjective(GroupError):
    def __init__(self, generated: int, order: int):
        super().__init__(f"images generate a subgroup of order {generated}, not {order}")
        self.generated = generated
        self.order = order


def _encode(perms: np.ndarray) -> np.ndarray:
    n = perms.shape[-1]
    weights = np.int64(n) ** np.arange(n, dtype=np.int64)
    return perms.astype(np.int64) @ weights


class FiniteGroup:
    """Finite group given by a Cayley table or by a faithful permutation action."""

    def __init__(self, *, table: np.ndarray | None = None, perms: np.ndarray | None = None,
                 labels: Sequence | None = None, name: str = "G"):
        if table is None and perms is None:
            raise ValueError("need a Cayley table or permutations")
        self.name = name
        self.perms = None if perms is None else np.asarray(perms, dtype=np.int64)
        if table is not None:
            self.__dict__["table"] = np.asarray(table, dtype=np.int32)
        self.labels = list(labels) if labels is not None else list(range(self.order))
        if self.perms is not None:
            codes = _encode(self.perms)
            self._order = np.argsort(codes, kind="stable")
            self._codes = codes[self._order]
            if len(np.unique(codes)) != len(codes):
                raise GroupError("permutations are not distinct")

    @property
    def order(self) -> int:
        if self.perms is not None:
            return len(self.perms)
        return len(self.__dict__["table"])

    def __len__(self) -> int:
        return self.order

    def __repr__(self) -> str:
        return f"<{self.name} of order {self.order}>"

    def index_of_perm(self, perm) -> int:
        code = _encode(np.asarray(perm, dtype=np.int64)[None, :])[0]
        k = np.searchsorted(self._codes, code)
        if k >= len(self._codes) or self._codes[k] != code:
            raise KeyError("permutation is not in the group")
        return int(self._order[k])

    def _indices_of_perms(self, perms: np.ndarray) -> np.ndarray:
        codes = _encode(perms)
        k = np.searchsorted(self._codes, codes)
        return self._order[k]

    @cached_property
    def table(self) -> np.ndarray:
        n = self.order
        t = np.empty((n, n), dtype=np.int32)
        for i in range(n):
            t[i] = self._indices_of_perms(self.perms[i][self.perms])
        return t

    @cached_property
    def identity(self) -> int:
        t = self.table
        for i in range(self.order):
            if np.array_equal(t[i], np.arange(self.order)):
                return i
        raise GroupError("no identity element")

    @cached_property
    def inverse(self) -> np.ndarray:
        rows, cols = np.nonzero(self.table == self.identity)
        inv = np.empty(self.order, dtype=np.int64)
        inv[rows] = cols
        return inv

    def mul(self, *xs: int) -> int:
        out = self.identity
        for x in xs:
            out = int(self.table[out, x])
        return out

    def conj(self, g: int, x: int) -> int:
        """g x g^-1"""
        return int(self.table[self.table[g, x], self.inverse[g]])

    def power(self, x: int, k: int) -> int:
        if k < 0:
            x, k = int(self.inverse[x]), -k
        out = self.identity
        for _ in range(k):
            out = int(self.table[out, x])
        return out

    def element_order(self, x: int) -> int:
        k, y = 1, x
        while y != self.identity:
            y = int(self.table[y, x])
            k += 1
        return k

    @cached_property
    def element_orders(self) -> np.ndarray:
        return np.array([self.element_order(x) for x in range(self.order)])

    def closure(self, gens: Sequence[int], limit: int | None = None) -> np.ndarray:
        """Sorted indices of the subgroup generated by gens (stops early past ``limit``)."""
        gens = np.asarray(list(gens), dtype=np.int64)
        seen = np.zeros(self.order, dtype=bool)
        seen[self.identity] = True
        frontier = np.array([self.identity])
        while len(frontier) and gens.size:
            new = np.unique(self.table[np.ix_(frontier, gens)].ravel())
            new = new[~seen[new]]
            seen[new] = True
            frontier = new
            if limit is not None and seen.sum() > limit:
                break
        return np.flatnonzero(seen)

    def check_axioms(self, samples: int = 1000, seed: int = 0) -> bool:
        """Closure, identity, inverses and associativity on random triples."""
        t = self.table
        n = self.order
        if t.min() < 0 or t.max() >= n:
            return False
        if any(sorted(row) != list(range(n)) for row in t.tolist()):
            return False
        e = self.identity
        if not np.all(t[np.arange(n), self.inverse] == e):
            return False
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(0, n, size=(3, samples))
        return bool(np.all(t[t[a, b], c] == t[a, t[b, c]]))


# --- PSL(3, p) ---------------------------------------------------------------

def _normalize_columns(v: np.ndarray, p: int) -> np.ndarray:
    """Scale each column vector (axis -2) so that its first nonzero entry is 1."""
    inv = np.array([0] + [pow(int(x), -1, p) for x in range(1, p)])
    nz = v != 0
    first = np.argmax(nz, axis=-2)
    lead = np.take_along_axis(v, first[..., None, :], axis=-2)
    return (v * inv[lead]) % p


def projective_points(p: int) -> np.ndarray:
    """Points of P^2(F_p) as normalized vectors, in product order."""
    pts = [v for v in itertools.product(range(p), repeat=3) if any(v)]
    pts = [v for v in pts if v[next(i for i in range(3) if v[i])] == 1]
    return np.array(pts, dtype=np.int64)


def _det3(m: np.ndarray) -> np.ndarray:
    return (m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
            - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
            + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0]))


def adjugate3(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.int64)
    adj = np.empty((3, 3), dtype=np.int64)
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
            adj[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return adj


class PSL3(FiniteGroup):
    """PSL(3, p) acting faithfully on the p^2 + p + 1 points of the projective plane."""

    def __init__(self, p: int, max_p: int = MAX_PRIME):
        if p not in (2, 3, 5, 7, 11, 13) and not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if p > max_p:
            raise TooLarge(f"PSL(3,{p}) exceeds the configured limit p <= {max_p}")
        self.p = p
        self.points = projective_points(p)
        mats = np.array(list(itertools.product(range(p), repeat=9)), dtype=np.int64).reshape(-1, 3, 3)
        mats = mats[_det3(mats) % p == 1]
        perms = self._act(mats)
        uniq, first, counts = np.unique(perms, axis=0, return_index=True, return_counts=True)
        self.sl_order = len(mats)
        self.kernel_size = int(counts[0]) if np.array_equal(uniq[0], np.arange(len(self.points))) else 0
        self.matrices = mats[first]
        super().__init__(perms=uniq, labels=[m for m in self.matrices], name=f"PSL(3,{p})")

    def _point_index(self, v: np.ndarray) -> np.ndarray:
        p = self.p
        codes = v[..., 0, :] * p * p + v[..., 1, :] * p + v[..., 2, :]
        lookup = np.full(p ** 3, -1, dtype=np.int64)
        lookup[self.points @ np.array([p * p, p, 1])] = np.arange(len(self.points))
        return lookup[codes]

    def _act(self, mats: np.ndarray) -> np.ndarray:
        imgs = (mats @ self.points.T) % self.p
        return self._point_index(_normalize_columns(imgs, self.p))

    def element(self, matrix) -> int:
        m = np.asarray(matrix, dtype=np.int64) % self.p
        if _det3(m) % self.p == 0:
            raise GroupError("matrix is singular mod p")
        return self.index_of_perm(self._act(m[None])[0])

    def matrix(self, i: int) -> np.ndarray:
        return self.matrices[i]

    def point_index(self, v) -> int:
        v = np.asarray(v, dtype=np.int64).reshape(1, 3, 1) % self.p
        return int(self._point_index(_normalize_columns(v, self.p))[0, 0])

    def hyperplane_points(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.int64)
        return np.flatnonzero((self.points @ w) % self.p == 0)

    def inverse_transpose(self) -> np.ndarray:
        """The automorphism A -> (A^-1)^T as an index permutation."""
        out = np.empty(self.order, dtype=np.int64)
        for i, m in enumerate(self.matrices):
            inv = (adjugate3(m) * pow(int(_det3(m) % self.p), -1, self.p)) % self.p
            out[i] = self.element(inv.T)
        return out


def _is_prime(n: int) -> bool:
    return n > 1 and all(n % k for k in range(2, int(n ** 0.5) + 1))


def build_psl3(p: int, max_p: int = MAX_PRIME) -> PSL3:
    return PSL3(p, max_p=max_p)


# --- subgroups -----------------------------------------------------------------

class SubgroupHandle:
    """Subgroup with its left cosets; ``reps[i]`` is the smallest index in coset i."""

    def __init__(self, parent: FiniteGroup, members: Sequence[int], name: str = "H"):
        self.parent = parent
        self.name = name
        self.members = np.unique(np.asarray(list(members), dtype=np.int64))
        mask = np.zeros(parent.order, dtype=bool)
        mask[self.members] = True
        self.mask = mask
        t = parent.table
        if not mask[parent.identity]:
            raise GroupError(f"{name} does not contain the identity")
        if not mask[t[np.ix_(self.members, self.members)]].all() or not mask[parent.inverse[self.members]].all():
            raise GroupError(f"{name} is not closed")
        if parent.order % len(self.members):
            raise GroupError("subgroup order does not divide the group order")
        coset_of = np.full(parent.order, -1, dtype=np.int64)
        reps = []
        for g in range(parent.order):
            if coset_of[g] < 0:
                coset_of[t[g, self.members]] = len(reps)
                reps.append(g)
        self.coset_of = coset_of
        self.reps = np.array(reps, dtype=np.int64)

    @property
    def order(self) -> int:
        return len(self.members)

    @property
    def index(self) -> int:
        return len(self.reps)

    def __contains__(self, g: int) -> bool:
        return bool(self.mask[g])

    def __repr__(self) -> str:
        return f"<{self.name}: order {self.order}, index {self.index} in {self.parent.name}>"

    def left_translation(self, x: int) -> np.ndarray:
        """Permutation of cosets: gH -> x g H."""
        return self.coset_of[self.parent.table[x, self.reps]]

    @cached_property
    def all_translations(self) -> np.ndarray:
        """Row g is the coset permutation of g."""
        return self.coset_of[self.parent.table[:, self.reps]]

    def conjugate(self, g: int, name: str | None = None) -> SubgroupHandle:
        G = self.parent
        return SubgroupHandle(G, [G.conj(g, h) for h in self.members], name or f"{self.name}^{g}")

    def same_elements(self, other: SubgroupHandle) -> bool:
        return np.array_equal(self.members, other.members)

    def in_parent(self, parent: FiniteGroup) -> SubgroupHandle:
        """The same index set viewed inside an extension that embeds this parent as 0..n-1."""
        return SubgroupHandle(parent, self.members, self.name)


def stabilizer(G: PSL3, point=None, hyperplane=None) -> SubgroupHandle:
    """Stabilizer of a projective point or (set-wise) of a hyperplane w.x = 0."""
    if (point is None) == (hyperplane is None):
        raise ValueError("give exactly one of point / hyperplane")
    if point is not None:
        x = G.point_index(point)
        members = np.flatnonzero(G.perms[:, x] == x)
        return SubgroupHandle(G, members, f"Stab(point {list(point)})")
    hp = G.hyperplane_points(hyperplane)
    if len(hp) != G.p + 1:
        raise ValueError(f"{hyperplane} does not define a hyperplane")
    inside = np.zeros(len(G.points), dtype=bool)
    inside[hp] = True
    members = np.flatnonzero(inside[G.perms[:, hp]].all(axis=1))
    return SubgroupHandle(G, members, f"Stab(hyperplane {list(hyperplane)})")


def subgroups_of_order(G: FiniteGroup, n: int) -> list[SubgroupHandle]:
    """Distinct subgroups of order n generated by at most two elements."""
    cands = [x for x in range(G.order) if n % G.element_orders[x] == 0]
    found: dict[bytes, np.ndarray] = {}
    for i, a in enumerate(cands):
        for b in cands[i:]:
            h = G.closure([a, b], limit=n)
            if len(h) == n:
                found.setdefault(h.tobytes(), h)
    return [SubgroupHandle(G, h, f"S{n}_{k}") for k, h in enumerate(found.values())]


# --- conjugacy and the Sunada condition ----------------------------------------

def conjugacy_classes(G: FiniteGroup) -> list[np.ndarray]:
    """Exact partition into classes, identity class first, then by smallest member."""
    t, inv = G.table, G.inverse
    gs = np.arange(G.order)
    seen = np.zeros(G.order, dtype=bool)
    classes = [np.array([G.identity])]
    seen[G.identity] = True
    for x in range(G.order):
        if not seen[x]:
            cls = np.unique(t[t[gs, x], inv[gs]])
            seen[cls] = True
            classes.append(cls)
    return classes


def cycle_type(perm: Sequence[int]) -> tuple[int, ...]:
    perm = list(perm)
    seen = [False] * len(perm)
    out = []
    for i in range(len(perm)):
        if not seen[i]:
            k, j = 0, i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                k += 1
            out.append(k)
    return tuple(sorted(out, reverse=True))


def cycles(perm: Sequence[int]) -> list[list[int]]:
    perm = list(perm)
    seen = [False] * len(perm)
    out = []
    for i in range(len(perm)):
        if not seen[i]:
            c, j = [], i
            while not seen[j]:
                seen[j] = True
                c.append(j)
                j = perm[j]
            out.append(c)
    return out


def find_conjugator(G: FiniteGroup, H1: SubgroupHandle, H2: SubgroupHandle) -> int | None:
    """First g (by index) with g H1 g^-1 = H2, by exhaustive search."""
    if H1.order != H2.order:
        return None
    t, inv = G.table, G.inverse
    for g in range(G.order):
        if H2.mask[t[t[g, H1.members], inv[g]]].all():
            return g
    return None


@dataclass
class GassmannTriple:
    G: FiniteGroup
    H1: SubgroupHandle
    H2: SubgroupHandle
    sunada_ok: bool
    perm_char_ok: bool
    cycle_types_ok: bool
    conj_in_G: bool
    conjugator: int | None
    class_counts: list[tuple[int, int, int, int]] = field(default_factory=list)
    fixed_points: tuple[np.ndarray, np.ndarray] | None = None

    def to_json(self) -> dict:
        return {
            "group": self.G.name,
            "orders": [self.H1.order, self.H2.order],
            "index": self.H1.index,
            "sunada_ok": self.sunada_ok,
            "perm_char_ok": self.perm_char_ok,
            "cycle_types_ok": self.cycle_types_ok,
            "conj_in_G": self.conj_in_G,
            "conjugator": self.conjugator,
            "classes": [
                {"rep": r, "size": s, "in_H1": a, "in_H2": b} for r, s, a, b in self.class_counts
            ],
        }


def fixed_point_counts(H: SubgroupHandle) -> np.ndarray:
    """Number of cosets fixed by each element: the permutation character of G/H."""
    return (H.all_translations == np.arange(H.index)).sum(axis=1)


def sunada_check(G: FiniteGroup, H1: SubgroupHandle, H2: SubgroupHandle) -> GassmannTriple:
    """Class-by-class intersection counts, permutation characters and conjugacy."""
    if H1.order != H2.order:
        raise OrderMismatch(H1.order, H2.order)
    counts = []
    for cls in conjugacy_classes(G):
        counts.append((int(cls[0]), len(cls), int(H1.mask[cls].sum()), int(H2.mask[cls].sum())))
    sunada_ok = all(a == b for _, _, a, b in counts)
    f1, f2 = fixed_point_counts(H1), fixed_point_counts(H2)
    perm_char_ok = bool(np.array_equal(f1, f2))
    ct_ok = all(
        cycle_type(p1) == cycle_type(p2) for p1, p2 in zip(H1.all_translations.tolist(), H2.all_translations.tolist())
    )
    g = find_conjugator(G, H1, H2)
    return GassmannTriple(G, H1, H2, sunada_ok, perm_char_ok, ct_ok, g is not None, g, counts, (f1, f2))


# --- semidirect extension ------------------------------------------------------

class SemidirectGroup(FiniteGroup):
    """G x| C2 with (g, e)(h, d) = (g sigma^e(h), e + d); (g, e) has index g + e|G|."""

    def __init__(self, base: FiniteGroup, sigma: np.ndarray, name: str | None = None):
        n = base.order
        t = base.table.astype(np.int64)
        sigma = np.asarray(sigma, dtype=np.int64)
        if sorted(sigma.tolist()) != list(range(n)) or not np.array_equal(sigma[t], t[np.ix_(sigma, sigma)]):
            raise NotAutomorphism("sigma is not an automorphism of the base group")
        if not np.array_equal(sigma[sigma], np.arange(n)):
            raise NotInvolution("sigma does not square to the identity")
        table = np.empty((2 * n, 2 * n), dtype=np.int64)
        table[:n, :n] = t
        table[:n, n:] = t + n
        table[n:, :n] = t[:, sigma] + n
        table[n:, n:] = t[:, sigma]
        labels = [(lab, 0) for lab in base.labels] + [(lab, 1) for lab in base.labels]
        super().__init__(table=table, labels=labels, name=name or f"{base.name} x| C2")
        self.base = base
        self.sigma = sigma

    def pair(self, g: int, eps: int) -> int:
        return g + eps * self.base.order

    @property
    def flip(self) -> int:
        """(e, 1)"""
        return self.pair(self.base.identity, 1)


def semidirect_extension(G: FiniteGroup, sigma: np.ndarray) -> SemidirectGroup:
    return SemidirectGroup(G, sigma)


# --- homomorphisms from free groups --------------------------------------------

@dataclass
class FreeGroupHom:
    """phi: F_rank -> group, letter i -> images[i-1]."""

    group: FiniteGroup
    images: list[int]
    surjective: bool = False
    image_order: int = 0

    @property
    def rank(self) -> int:
        return len(self.images)

    def letter(self, x: int) -> int:
        y = self.images[abs(x) - 1]
        return y if x > 0 else int(self.group.inverse[y])

    def __call__(self, w: ReducedWord | Sequence[int]) -> int:
        G = self.group
        out = G.identity
        for x in w:
            out = int(G.table[out, self.letter(x)])
        return out


def hom_from_free(G: FiniteGroup, images: Sequence[int], require_onto: bool = True) -> FreeGroupHom:
    images = [int(x) for x in images]
    sub = G.closure(images)
    hom = FreeGroupHom(G, images, len(sub) == G.order, len(sub))
    if require_onto and not hom.surjective:
        raise NotSurjective(len(sub), G.order)
    return hom


def find_generating_tuple(G: FiniteGroup, size: int = 2, candidates: Sequence[int] | None = None) -> tuple[int, ...]:
    """First tuple in lexicographic index order generating G."""
    pool = range(G.order) if candidates is None else candidates
    for combo in itertools.combinations(pool, size):
        if len(G.closure(combo)) == G.order:
            return combo
    raise NotSurjective(0, G.order)


def coset_action(hom: FreeGroupHom, w: ReducedWord | Sequence[int], H: SubgroupHandle) -> tuple[np.ndarray, tuple[int, ...]]:
    """Left translation by phi(w) on G/H and its cycle type."""
    perm = H.left_translation(hom(w))
    return perm, cycle_type(perm)


@dataclass
class SchreierResult:
    generators: list[ReducedWord]
    transversal: list[tuple[int, ...]]
    edges: list[tuple[int, int]]
    expected_rank: int

    @property
    def rank(self) -> int:
        return len(self.generators)


def schreier_generators(hom: FreeGroupHom, H: SubgroupHandle) -> SchreierResult:
    """Free basis of phi^-1(H) from a shortlex Schreier transversal.

    F acts on the right of G/H by ``C . w = phi(w)^-1 C``; the stabilizer of H
    is phi^-1(H).  The transversal word t_C is shortlex-least with
    ``H . t_C = C``; generators are ``t_C x t_{C.x}^-1`` for nontrivial ones.
    """
    if not hom.surjective:
        raise NotSurjective(hom.image_order or len(hom.group.closure(hom.images)), hom.group.order)
    G = hom.group
    g = hom.rank

    def act(c: int, x: int) -> int:
        return int(H.coset_of[G.table[G.inverse[hom.letter(x)], H.reps[c]]])

    root = int(H.coset_of[G.identity])
    words: dict[int, tuple[int, ...]] = {root: ()}
    order = [root]
    queue = deque([root])
    while queue:
        c = queue.popleft()
        for x in alphabet(g):
            d = act(c, x)
            if d not in words:
                words[d] = words[c] + (x,)
                order.append(d)
                queue.append(d)
    gens, edges = [], []
    for c in order:
        for i in range(1, g + 1):
            d = act(c, i)
            w = free_reduce(words[c] + (i,) + invert_letters(words[d]))
            if w:
                gens.append(ReducedWord(w))
                edges.append((c, i))
    return SchreierResult(gens, [words[c] for c in order], edges, 1 + H.index * (g - 1))


def stallings_index(words: Sequence[Sequence[int]], g: int) -> int | None:
    """Index in F_g of the subgroup generated by ``words`` via Stallings folding.

    Returns the number of vertices of the folded core graph when it is a
    covering of the rank-g rose (finite index), otherwise None.
    """
    parent: list[int] = [0]

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    edges: list[tuple[int, int, int]] = []
    for w in words:
        w = free_reduce(w)
        if not w:
            continue
        prev = 0
        for k, x in enumerate(w):
            if k == len(w) - 1:
                nxt = 0
            else:
                parent.append(len(parent))
                nxt = len(parent) - 1
            edges.append((prev, x, nxt))
            prev = nxt
    changed = True
    while changed:
        changed = False
        seen: dict[tuple[int, int], int] = {}
        for u, x, v in edges:
            u, v = find(u), find(v)
            for key, tgt in (((u, x), v), ((v, -x), u)):
                other = seen.get(key)
                if other is None:
                    seen[key] = tgt
                elif find(other) != find(tgt):
                    parent[find(other)] = find(tgt)
                    changed = True
    verts = {find(v) for e in edges for v in (e[0], e[2])} or {find(0)}
    out = {(find(u), x) for u, x, v in edges} | {(find(v), -x) for u, x, v in edges}
    if all((v, x) in out for v in verts for x in alphabet(g)):
        return len(verts)
    return None


# --- JSON specs ----------------------------------------------------------------

def group_from_spec(spec: dict) -> FiniteGroup:
    kind = spec.get("kind")
    if kind == "psl3":
        return build_psl3(int(spec["p"]), max_p=int(spec.get("max_p", MAX_PRIME)))
    if kind == "semidirect":
        base = group_from_spec(spec["base"])
        auto = spec.get("auto", "inverse-transpose")
        if auto == "inverse-transpose":
            if not isinstance(base, PSL3):
                raise GroupError("inverse-transpose needs a matrix group")
            sigma = base.inverse_transpose()
        elif auto == "identity":
            sigma = np.arange(base.order)
        else:
            raise GroupError(f"unknown automorphism {auto!r}")
        return semidirect_extension(base, sigma)
    raise GroupError(f"unknown group kind {kind!r}")


def _matrix_group(G: FiniteGroup) -> PSL3:
    base = G.base if isinstance(G, SemidirectGroup) else G
    if not isinstance(base, PSL3):
        raise GroupError("element specs by matrix need a PSL(3,p) base")
    return base


def element_from_spec(G: FiniteGroup, spec) -> int:
    if isinstance(spec, int):
        return spec
    if "index" in spec:
        return int(spec["index"])
    base = _matrix_group(G)
    g = base.element(spec["matrix"])
    eps = int(spec.get("eps", 0))
    if eps:
        if not isinstance(G, SemidirectGroup):
            raise GroupError("eps = 1 needs a semidirect group")
        return G.pair(g, 1)
    return g


def element_to_spec(G: FiniteGroup, x: int) -> dict:
    if isinstance(G, SemidirectGroup):
        n = G.base.order
        spec = element_to_spec(G.base, x % n)
        spec["eps"] = x // n
        return spec
    if isinstance(G, PSL3):
        return {"matrix": G.matrix(x).tolist()}
    return {"index": int(x)}


def subgroup_from_spec(G: FiniteGroup, spec: dict) -> SubgroupHandle:
    if "stabilizer" in spec:
        base = _matrix_group(G)
        st = spec["stabilizer"]
        H = stabilizer(base, point=st.get("point"), hyperplane=st.get("hyperplane"))
        return H if base is G else H.in_parent(G)
    if "conjugate" in spec:
        H = subgroup_from_spec(G, spec["conjugate"])
        return H.conjugate(element_from_spec(G, spec["by"]))
    if "generated_by" in spec:
        gens = [element_from_spec(G, e) for e in spec["generated_by"]]
        return SubgroupHandle(G, G.closure(gens), "<gens>")
    if spec.get("whole"):
        return SubgroupHandle(G, range(G.order), G.name)
    raise GroupError(f"cannot parse subgroup spec {spec}")
