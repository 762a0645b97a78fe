"""First homology of a closed genus-g surface and Schottky-structure criteria.

Coordinates are in the symplectic basis (a1, b1, ..., ag, bg) with
``x . y = x^T J y`` and ``a_i . b_i = 1``.  Loops in the fundamental group are
words over a_i (letter 2i-1) and b_i (letter 2i); upper case is the inverse.
"""

from __future__ import annotations

import math
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .groups import (
    FiniteGroup,
    FreeGroupHom,
    SubgroupHandle,
    cycle_type,
    element_from_spec,
    element_to_spec,
    group_from_spec,
    PSL3,
)


class HomologyError(ValueError):
    pass


class GenusMismatch(HomologyError):
    pass


class NotPrimitive(HomologyError):
    pass


class NotDisjoint(HomologyError):
    def __init__(self, i: int, j: int, value: int):
        super().__init__(f"curves {i} and {j} have intersection number {value}")
        self.pair, self.value = (i, j), value


class RelatorViolated(HomologyError):
    pass


def symplectic_form(g: int) -> np.ndarray:
    return np.kron(np.eye(g, dtype=np.int64), np.array([[0, 1], [-1, 0]], dtype=np.int64))


def basis_vector(g: int, name: str) -> np.ndarray:
    """'a3' -> the coordinate vector of a3 in genus g."""
    kind, i = name[0], int(name[1:])
    v = np.zeros(2 * g, dtype=np.int64)
    v[2 * (i - 1) + (kind == "b")] = 1
    return v


def _as_vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.int64)
    if v.ndim != 1 or len(v) % 2:
        raise GenusMismatch(f"expected a vector of even length, got shape {v.shape}")
    return v


def intersection(x, y) -> int:
    x, y = _as_vec(x), _as_vec(y)
    if len(x) != len(y):
        raise GenusMismatch(f"genus {len(x) // 2} vs {len(y) // 2}")
    return int(x @ symplectic_form(len(x) // 2) @ y)


def is_symplectic(m) -> bool:
    m = np.asarray(m, dtype=np.int64)
    J = symplectic_form(len(m) // 2)
    return bool(np.array_equal(m.T @ J @ m, J))


def dehn_twist(d, k: int = 1) -> np.ndarray:
    """Matrix of x -> x + k (x . d) d, the homology action of k twists along d."""
    d = _as_vec(d)
    if reduce(math.gcd, (int(abs(c)) for c in d), 0) != 1:
        raise NotPrimitive(f"{d.tolist()} is not primitive")
    J = symplectic_form(len(d) // 2)
    return np.eye(len(d), dtype=np.int64) + k * np.outer(d, J @ d)


def _rank_mod2(rows: np.ndarray) -> int:
    m = (np.asarray(rows, dtype=np.int64) % 2).astype(np.uint8)
    rank = 0
    for col in range(m.shape[1] if m.size else 0):
        piv = next((r for r in range(rank, len(m)) if m[r, col]), None)
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        for r in range(len(m)):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def check_disjoint(curves: Sequence) -> None:
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            v = intersection(curves[i], curves[j])
            if v:
                raise NotDisjoint(i, j, v)


def jointly_nonseparating(curves: Sequence) -> bool:
    """Mod-2 independence of pairwise disjoint classes."""
    check_disjoint(curves)
    if not len(curves):
        return True
    return _rank_mod2(np.array([_as_vec(c) for c in curves])) == len(curves)


def cover_genus(k: int, g: int) -> int:
    if k < 1 or g < 1:
        raise ValueError("degree and genus must be positive")
    return k * (g - 1) + 1


# --- words -------------------------------------------------------------------------

_TOKEN = re.compile(r"^([abAB])(\d+)(?:\^(\d+))?$")


def parse_word(text: str, g: int) -> tuple[int, ...]:
    """'a1 b1 A1 B1' -> letters; 'b3^2' repeats.  a_i is 2i-1, b_i is 2i, negatives are inverses."""
    out = []
    for tok in text.split():
        m = _TOKEN.match(tok)
        if not m:
            raise ValueError(f"bad token {tok!r}")
        ch, i, rep = m.group(1), int(m.group(2)), int(m.group(3) or 1)
        if not 1 <= i <= g:
            raise GenusMismatch(f"{tok} outside genus {g}")
        letter = 2 * i - 1 + (ch.lower() == "b")
        out += [letter if ch.islower() else -letter] * rep
    return tuple(out)


def word_to_text(letters: Sequence[int]) -> str:
    toks = []
    for x in letters:
        i, is_b = (abs(x) + 1) // 2, abs(x) % 2 == 0
        ch = "b" if is_b else "a"
        toks.append((ch if x > 0 else ch.upper()) + str(i))
    return " ".join(toks)


def abelianize(letters: Sequence[int], g: int) -> np.ndarray:
    v = np.zeros(2 * g, dtype=np.int64)
    for x in letters:
        v[abs(x) - 1] += 1 if x > 0 else -1
    return v


def surface_relator(g: int) -> tuple[int, ...]:
    out = []
    for i in range(1, g + 1):
        a, b = 2 * i - 1, 2 * i
        out += [a, b, -a, -b]
    return tuple(out)


def surface_hom(G: FiniteGroup, images: Sequence[int], g: int) -> FreeGroupHom:
    """Homomorphism from the surface group given images of a1, b1, ..., ag, bg."""
    if len(images) != 2 * g:
        raise GenusMismatch(f"need {2 * g} images")
    sub = G.closure(images)
    hom = FreeGroupHom(G, [int(x) for x in images], len(sub) == G.order, len(sub))
    if hom(surface_relator(g)) != G.identity:
        raise RelatorViolated("the product of commutators does not map to the identity")
    return hom


def lifts_disjointly(word: Sequence[int], hom: FreeGroupHom, H: SubgroupHandle | None = None) -> tuple[bool, int]:
    """Whether the loop lifts to ``degree`` closed curves, and the number of lifts.

    Without H the cover is the regular one with deck group hom.group, where
    the answer is "image trivial".
    """
    x = hom(word)
    if H is None:
        degree = hom.group.order
        n_lifts = degree // hom.group.element_order(x)
    else:
        degree = H.index
        n_lifts = len(cycle_type(H.left_translation(x)))
    return n_lifts == degree, n_lifts


# --- curve configurations ---------------------------------------------------------

@dataclass
class CurveConfig:
    genus: int
    curves: list[np.ndarray]
    words: list[tuple[int, ...] | None]
    tau: np.ndarray
    D: np.ndarray
    base: np.ndarray
    k: int
    hom: FreeGroupHom | None = None
    sigma: np.ndarray | None = None
    basis: np.ndarray | None = None

    @classmethod
    def from_json(cls, obj: dict) -> CurveConfig:
        g = int(obj["genus"])
        basis = np.asarray(obj["basis"], dtype=np.int64) if "basis" in obj else None
        curves, words = [], []
        for c in obj["curves"]:
            w = parse_word(c["word"], g) if c.get("word") else None
            if "coords" in c:
                curves.append(np.asarray(c["coords"], dtype=np.int64))
            elif w is not None:
                ab = abelianize(w, g)
                curves.append(basis @ ab if basis is not None else ab)
            else:
                raise HomologyError("a curve needs coords or a word")
            words.append(w)
        hom = sigma = None
        if "hom" in obj:
            G = group_from_spec(obj["hom"]["group"])
            imgs = obj["hom"]["images"]
            names = [f"{c}{i}" for i in range(1, g + 1) for c in "ab"]
            hom = surface_hom(G, [element_from_spec(G, imgs[n]) if n in imgs else G.identity for n in names], g)
            if isinstance(G, PSL3):
                sigma = G.inverse_transpose()
        return cls(
            g,
            curves,
            words,
            np.asarray(obj["tau"], dtype=np.int64),
            np.asarray(obj["D"]["coords"] if isinstance(obj["D"], dict) else obj["D"], dtype=np.int64),
            np.asarray(obj["base"]["coords"] if isinstance(obj["base"], dict) else obj["base"], dtype=np.int64),
            int(obj["k"]),
            hom,
            sigma,
            basis,
        )


@dataclass
class CurveReport:
    checks: dict[str, bool] = field(default_factory=dict)
    values: dict[str, object] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks[name] = bool(passed)
        if not passed:
            self.failures.append(f"{name}: {detail}" if detail else name)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checks": self.checks,
            "values": self.values,
            "failures": self.failures,
            "note": "curve coordinates, D and tau are a constructed fixture satisfying the stated properties",
        }


def verify_sunada_curve_config(cfg: CurveConfig) -> CurveReport:
    """Check disjointness and non-separation, trivial images, and the cross intersection tau(g1).g5 = k."""
    rep = CurveReport()
    g, n = cfg.genus, 2 * cfg.genus
    tau = cfg.tau
    inv_ok = tau.shape == (n, n) and np.array_equal(tau @ tau, np.eye(n, dtype=np.int64))
    rep.record("tau_involution", inv_ok, "tau^2 != I")
    if not inv_ok:
        return rep
    rep.record("tau_symplectic", is_symplectic(tau), "tau does not preserve the form")
    if any(len(c) != n for c in cfg.curves):
        rep.record("genus", False, "curve coordinates have the wrong length")
        return rep

    # the last curve is the k-fold twist of the base class along D
    try:
        M = dehn_twist(cfg.D, cfg.k)
        twisted = M @ cfg.base
        rep.record("twist_symplectic", is_symplectic(M))
        rep.record("twist_consistent", np.array_equal(twisted, cfg.curves[-1]),
                   f"{cfg.curves[-1].tolist()} != T_D^k(base) = {twisted.tolist()}")
    except NotPrimitive as exc:
        rep.record("twist_consistent", False, str(exc))

    for i, (c, w) in enumerate(zip(cfg.curves, cfg.words)):
        if w is not None:
            ab = abelianize(w, g)
            if cfg.basis is not None:
                ab = cfg.basis @ ab
            rep.record(f"word_matches_coords_{i + 1}", np.array_equal(ab, c), f"{ab.tolist()} != {c.tolist()}")

    # (i) disjoint and jointly non-separating
    try:
        nonsep = jointly_nonseparating(cfg.curves)
        rep.record("disjoint", True)
        rep.record("nonseparating", nonsep, "mod-2 classes are dependent")
    except NotDisjoint as exc:
        rep.record("disjoint", False, str(exc))
        rep.record("nonseparating", False, "not checked")

    # (ii) every curve maps to the identity
    if cfg.hom is not None:
        lifts = []
        for i, w in enumerate(cfg.words):
            if w is None:
                rep.record(f"trivial_image_{i + 1}", False, "no word given")
                continue
            ok, count = lifts_disjointly(w, cfg.hom)
            lifts.append(count)
            rep.record(f"trivial_image_{i + 1}", ok, f"image has order {cfg.hom.group.element_order(cfg.hom(w))}")
        rep.values["lift_counts"] = lifts
        rep.values["hom_surjective"] = cfg.hom.surjective
        if cfg.sigma is not None:
            rep.values["tau_equivariant"] = _tau_equivariant(cfg)
    else:
        rep.record("trivial_images", False, "no homomorphism configured")

    # (iii) cross intersection
    cross = intersection(tau @ cfg.curves[0], cfg.curves[-1])
    rep.values["tau_gamma1_dot_gamma5"] = cross
    rep.record("cross_intersection_equals_k", cross == cfg.k and cross != 0, f"got {cross}, k = {cfg.k}")
    pairs = [(i + 1, j + 1) for i in range(len(cfg.curves)) for j in range(len(cfg.curves))
             if intersection(tau @ cfg.curves[i], cfg.curves[j]) != 0]
    rep.values["nonzero_cross_pairs"] = pairs
    rep.values["distinct_structures"] = bool(pairs)
    return rep


def _tau_equivariant(cfg: CurveConfig) -> bool | None:
    """phi(tau x) = sigma(phi x) on the basis loops, when tau permutes basis vectors."""
    n = 2 * cfg.genus
    tau = cfg.tau if cfg.basis is None else _int_inverse(cfg.basis) @ cfg.tau @ cfg.basis
    if not (np.abs(tau).sum(axis=0) == 1).all() or (tau < 0).any():
        return None
    for j in range(n):
        i = int(np.flatnonzero(tau[:, j])[0])
        x, y = cfg.hom.images[j], cfg.hom.images[i]
        if cfg.sigma[x] != y:
            return False
    return True


# --- default fixture -------------------------------------------------------------

GENUS = 5


def handle_swap(g: int = GENUS) -> np.ndarray:
    """(a1, b1) <-> (a3, b3) and (a2, b2) <-> (a4, b4); a5, b5 fixed."""
    perm = {1: 3, 3: 1, 2: 4, 4: 2, 5: 5}
    t = np.zeros((2 * g, 2 * g), dtype=np.int64)
    for i in range(1, g + 1):
        j = perm.get(i, i)
        t[2 * (j - 1), 2 * (i - 1)] = 1
        t[2 * (j - 1) + 1, 2 * (i - 1) + 1] = 1
    return t


def default_images(G: PSL3, k: int) -> tuple[int, int]:
    """(g1, g2) with ord(g1) | k and <g1, g2, sigma(g1), sigma(g2)> = G, first by index."""
    sigma = G.inverse_transpose()
    for g1 in range(G.order):
        if k % G.element_order(g1):
            continue
        for g2 in range(G.order):
            if len(G.closure([g1, g2, sigma[g1], sigma[g2]])) == G.order:
                return g1, int(g2)
    raise HomologyError(f"no generating images with ord(g1) | {k}")


def default_curve_config(k: int, p: int = 2, basis: np.ndarray | None = None) -> dict:
    """Genus-5 configuration: a1, a2, a4, a5 and the k-fold twist of a3 along b3.

    The surface group maps to PSL(3,p) by a_i -> e, b1 -> g1, b2 -> g2,
    b3 -> sigma(g1), b4 -> sigma(g2), b5 -> e, so tau corresponds to sigma.
    """
    from .groups import build_psl3

    g = GENUS
    G = build_psl3(p)
    g1, g2 = default_images(G, k) if k > 0 else default_images(G, 1)
    sigma = G.inverse_transpose()
    P = np.eye(2 * g, dtype=np.int64) if basis is None else np.asarray(basis, dtype=np.int64)
    words = ["a1", "a2", "a4", "a5", "a3" + (f" b3^{k}" if k > 0 else "")]
    curves = [{"word": w, "coords": (P @ abelianize(parse_word(w, g), g)).tolist()} for w in words]
    cfg = {
        "genus": g,
        "curves": curves,
        "tau": (P @ handle_swap(g) @ _int_inverse(P)).tolist(),
        "D": {"coords": (P @ basis_vector(g, "b3")).tolist()},
        "base": {"coords": (P @ basis_vector(g, "a3")).tolist()},
        "k": k,
        "hom": {
            "group": {"kind": "psl3", "p": p},
            "images": {
                "b1": element_to_spec(G, g1),
                "b2": element_to_spec(G, g2),
                "b3": element_to_spec(G, int(sigma[g1])),
                "b4": element_to_spec(G, int(sigma[g2])),
            },
        },
    }
    if basis is not None:
        cfg["basis"] = P.tolist()
    return cfg


def _int_inverse(P: np.ndarray) -> np.ndarray:
    """Inverse of a symplectic integer matrix: J^-1 P^T J."""
    J = symplectic_form(len(P) // 2)
    return -J @ P.T @ J


def random_symplectic(g: int, rng: np.random.Generator, steps: int = 6) -> np.ndarray:
    """Product of random transvections, an integer symplectic matrix."""
    M = np.eye(2 * g, dtype=np.int64)
    for _ in range(steps):
        i = int(rng.integers(0, 2 * g))
        d = np.zeros(2 * g, dtype=np.int64)
        d[i] = 1
        j = int(rng.integers(0, 2 * g))
        if j != i:
            d[j] = int(rng.integers(-1, 2))
        M = dehn_twist(d, int(rng.choice([-1, 1]))) @ M
    return M
