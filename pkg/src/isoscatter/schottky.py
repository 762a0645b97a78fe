"""Classical Schottky groups: circle pairings, free-group words, limit sets.

Letters are nonzero integers: ``i`` is the i-th generator, ``-i`` its
inverse.  The canonical letter order is ``1 < -1 < 2 < -2 < ...``.
"""

from __future__ import annotations

import json
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .moebius import GeneralizedCircle, MoebiusMap, image_of_circle

DEFAULT_TOL = 1e-9
PAIRING_SAMPLES = 16


class SchottkyError(ValueError):
    pass


class InvalidPairing(SchottkyError):
    def __init__(self, index: int, residual: float, reason: str = "residual"):
        super().__init__(f"generator {index}: {reason} (residual {residual:.3e})")
        self.index = index
        self.residual = residual


class CirclesOverlap(SchottkyError):
    def __init__(self, i: int, j: int, depth: float):
        super().__init__(f"circles {i} and {j} overlap (depth {depth:.3e})")
        self.i, self.j = i, j
        self.depth = depth


class NoBracket(ArithmeticError):
    pass


def letter_key(x: int) -> int:
    return 2 * (abs(x) - 1) + (x < 0)


def alphabet(g: int) -> list[int]:
    """Letters of the rank-g free group in canonical order."""
    return [s * i for i in range(1, g + 1) for s in (1, -1)]


def free_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def cyclic_reduce(letters: Sequence[int]) -> tuple[int, ...]:
    w = free_reduce(letters)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return w[i:j]


def invert_letters(letters: Sequence[int]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(letters))


@dataclass(frozen=True)
class ReducedWord:
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        w = tuple(int(x) for x in self.letters)
        if any(x == 0 for x in w):
            raise ValueError("letter 0 is not a generator")
        for x, y in zip(w, w[1:]):
            if x == -y:
                raise ValueError(f"word {w} is not freely reduced")
        object.__setattr__(self, "letters", w)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    @property
    def cyclically_reduced(self) -> bool:
        return len(self.letters) < 2 or self.letters[0] != -self.letters[-1]

    def inverse(self) -> ReducedWord:
        return ReducedWord(invert_letters(self.letters))

    def __str__(self) -> str:
        return word_to_string(self.letters)


def word_to_string(letters: Sequence[int]) -> str:
    """Letters as 'a', 'b', ... with upper case for inverses ('' for the identity)."""
    out = []
    for x in letters:
        ch = chr(ord("a") + abs(x) - 1)
        out.append(ch.upper() if x < 0 else ch)
    return "".join(out)


def _is_lyndon(w: tuple[int, ...], keys: tuple[int, ...]) -> bool:
    # strictly smaller than every proper rotation; implies aperiodic
    n = len(w)
    for d in range(1, n):
        rot = keys[d:] + keys[:d]
        if rot <= keys:
            return False
    return True


@dataclass(frozen=True)
class PrimitiveClass:
    """Conjugacy class of a primitive element, stored as its minimal rotation."""

    representative: ReducedWord

    @property
    def length(self) -> int:
        return len(self.representative)

    @property
    def letters(self) -> tuple[int, ...]:
        return self.representative.letters

    def __str__(self) -> str:
        return str(self.representative)


def canonical_class(letters: Sequence[int]) -> tuple[tuple[int, ...], int] | None:
    """(minimal primitive root rotation, exponent) of a cyclic word, None for the identity."""
    w = cyclic_reduce(letters)
    n = len(w)
    if n == 0:
        return None
    period = n
    for d in range(1, n):
        if n % d == 0 and w[d:] + w[:d] == w:
            period = d
            break
    root = w[:period]
    best = min((root[i:] + root[:i] for i in range(period)), key=lambda r: [letter_key(x) for x in r])
    return best, n // period


def _reduced_words(g: int, n: int, prefix: tuple[int, ...] = ()) -> Iterator[tuple[int, ...]]:
    letters = alphabet(g)
    if n < len(prefix):
        return
    stack = [prefix]
    # depth-first in canonical order
    while stack:
        w = stack.pop()
        if len(w) == n:
            yield w
            continue
        last = w[-1] if w else 0
        for x in reversed(letters):
            if x != -last:
                stack.append(w + (x,))


def enumerate_reduced_words(g: int, n: int, prefix: Sequence[int] = ()) -> Iterator[ReducedWord]:
    """All reduced words of length exactly n (optionally with a fixed prefix).

    Order is lexicographic in the canonical letter order; there are
    ``2g (2g-1)^(n-1)`` of them without a prefix.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    prefix = free_reduce(prefix)
    for w in _reduced_words(g, n, tuple(prefix)):
        yield ReducedWord(w)


def _primitive_tuples(g: int, n: int, first: int | None = None) -> Iterator[tuple[int, ...]]:
    letters = alphabet(g)
    firsts = letters if first is None else [first]
    for x0 in firsts:
        k0 = letter_key(x0)
        allowed = [x for x in letters if letter_key(x) >= k0]
        stack = [((x0,), (k0,))]
        while stack:
            w, keys = stack.pop()
            if len(w) == n:
                if n > 1 and w[-1] == -w[0]:
                    continue
                if _is_lyndon(w, keys):
                    yield w
                continue
            for x in reversed(allowed):
                if x != -w[-1]:
                    stack.append((w + (x,), keys + (letter_key(x),)))


def primitive_class_tuples(g: int, n_max: int) -> Iterator[tuple[int, ...]]:
    """Canonical representatives as plain tuples, by length then canonical order."""
    for n in range(1, n_max + 1):
        yield from _primitive_tuples(g, n)


def enumerate_primitive_classes(g: int, n_max: int) -> Iterator[PrimitiveClass]:
    """Primitive conjugacy classes of cyclically reduced length <= n_max, each once.

    A cyclic word is a canonical representative iff it is cyclically reduced
    and strictly smaller than all its proper rotations (a Lyndon word), which
    also excludes proper powers.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    for w in primitive_class_tuples(g, n_max):
        yield PrimitiveClass(ReducedWord(w))


@dataclass
class SchottkyData:
    """Rank g classical Schottky group: circle ``2i`` is paired with ``2i+1`` (0-based)."""

    g: int
    circles: list[GeneralizedCircle]
    generators: list[MoebiusMap]

    def __post_init__(self):
        if self.g < 1:
            raise ValueError("rank must be >= 1")
        if len(self.circles) != 2 * self.g or len(self.generators) != self.g:
            raise ValueError(f"rank {self.g} needs {2 * self.g} circles and {self.g} generators")
        if any(c.is_line for c in self.circles):
            raise ValueError("Schottky circles must be genuine circles")

    def letter_map(self, x: int) -> MoebiusMap:
        m = self.generators[abs(x) - 1]
        return m if x > 0 else m.inverse()

    def target_circle(self, x: int) -> GeneralizedCircle:
        """Circle whose interior contains the image of the exterior of the source under x."""
        i = abs(x) - 1
        return self.circles[2 * i + 1] if x > 0 else self.circles[2 * i]

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "circles": [{"cx": c.center.real, "cy": c.center.imag, "r": c.radius} for c in self.circles],
            "generators": [
                {k: [complex(v).real, complex(v).imag] for k, v in zip("abcd", (m.a, m.b, m.c, m.d))}
                for m in self.generators
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> SchottkyData:
        circles = [GeneralizedCircle.circle(complex(c["cx"], c["cy"]), c["r"]) for c in obj["circles"]]
        gens = [MoebiusMap(*(complex(*m[k]) for k in "abcd")) for m in obj["generators"]]
        return cls(int(obj["g"]), circles, gens)

    @classmethod
    def load(cls, path) -> SchottkyData:
        return cls.from_json(json.loads(Path(path).read_text()))


def from_pairings(pairs: Sequence[tuple[complex, float, complex, float]], twists: Sequence[float] | None = None) -> SchottkyData:
    """Schottky data from (c1, r1, c2, r2) circle pairs using the pairing maps of moebius."""
    from .moebius import pairing_map

    twists = twists or [0.0] * len(pairs)
    circles, gens = [], []
    for (c1, r1, c2, r2), tw in zip(pairs, twists):
        circles += [GeneralizedCircle.circle(c1, r1), GeneralizedCircle.circle(c2, r2)]
        gens.append(pairing_map(c1, r1, c2, r2, tw))
    return SchottkyData(len(pairs), circles, gens)


def example_rank2(radius: float = 1.0) -> SchottkyData:
    """Circles of the given radius at -3, 3, -3i, 3i; A(z) = 3 + r^2/(z+3), B(z) = 3i + r^2/(z+3i)."""
    return from_pairings([(-3, radius, 3, radius), (-3j, radius, 3j, radius)])


def example_rank1(twist: float = 0.0) -> SchottkyData:
    return from_pairings([(-3, 1.0, 3, 1.0)], [twist])


@dataclass
class ValidationReport:
    margins: dict[tuple[int, int], float] = field(default_factory=dict)
    residuals: list[float] = field(default_factory=list)
    orientation_ok: list[bool] = field(default_factory=list)
    failures: list[SchottkyError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "min_margin": min(self.margins.values()) if self.margins else None,
            "margins": {f"{i},{j}": m for (i, j), m in self.margins.items()},
            "residuals": self.residuals,
            "orientation_ok": self.orientation_ok,
            "failures": [str(f) for f in self.failures],
        }


def pairing_residual(m: MoebiusMap, source: GeneralizedCircle, target: GeneralizedCircle, n: int = PAIRING_SAMPLES) -> float:
    """Max distance from target of the images of n points sampled on source."""
    return max(abs(target.signed_distance(m(z))) for z in source.sample(n, phase=0.1))


def validate(data: SchottkyData, tol: float = DEFAULT_TOL, strict: bool = True) -> ValidationReport:
    """Check the circle configuration and pairings.

    With ``strict`` the first failure is raised (overlaps before pairings);
    otherwise all failures are collected in the report.
    """
    rep = ValidationReport()
    cs = data.circles
    for i in range(len(cs)):
        for j in range(i + 1, len(cs)):
            margin = abs(cs[i].center - cs[j].center) - cs[i].radius - cs[j].radius
            rep.margins[(i, j)] = margin
            if margin <= tol:
                rep.failures.append(CirclesOverlap(i, j, -margin))
    for i, m in enumerate(data.generators):
        src, dst = cs[2 * i], cs[2 * i + 1]
        res = pairing_residual(m, src, dst)
        img, in_to_in = image_of_circle(m, src)
        rep.residuals.append(res)
        rep.orientation_ok.append(not in_to_in)
        if res >= tol:
            rep.failures.append(InvalidPairing(i + 1, res))
        elif in_to_in:
            rep.failures.append(InvalidPairing(i + 1, res, "interior is not sent to the exterior"))
    if strict and rep.failures:
        raise rep.failures[0]
    return rep


def word_to_map(data: SchottkyData, w: ReducedWord | Sequence[int]) -> MoebiusMap:
    """Product of generators in word order (leftmost letter applied last)."""
    m = MoebiusMap.identity()
    for x in w:
        m = m @ data.letter_map(x)
    return m


@dataclass
class LimitSetSample:
    depth: int
    words: list[tuple[int, ...]]
    centers: np.ndarray
    radii: np.ndarray
    lengths: np.ndarray

    def level(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        sel = self.lengths == d
        return self.centers[sel], self.radii[sel]

    def area(self, d: int | None = None) -> float:
        _, r = self.level(self.depth if d is None else d)
        return float(np.pi * np.sum(r * r))

    @property
    def points(self) -> np.ndarray:
        return self.level(self.depth)[0]


def _disk_images(data: SchottkyData, depth: int):
    # breadth-first: (word, map of word minus last letter applied to the target disk)
    level = []
    for x in alphabet(data.g):
        c = data.target_circle(x)
        level.append(((x,), data.letter_map(x), c))
    yield level
    for _ in range(depth - 1):
        nxt = []
        for w, m, _c in level:
            for y in alphabet(data.g):
                if y == -w[-1]:
                    continue
                img, in_to_in = image_of_circle(m, data.target_circle(y))
                if not in_to_in or img.is_line:
                    raise SchottkyError(f"disk of word {w + (y,)} is not nested")
                nxt.append((w + (y,), m @ data.letter_map(y), img))
        level = nxt
        yield level


def limit_set_sample(data: SchottkyData, depth: int) -> LimitSetSample:
    """Nested disks D_w for all reduced words with 1 <= |w| <= depth.

    D_x is the disk bounded by the target circle of x, and
    D_{w y} = w(D_y); the level-``depth`` disks cover the limit set.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    words, centers, radii, lengths = [], [], [], []
    for d, level in enumerate(_disk_images(data, depth), start=1):
        for w, _m, c in level:
            words.append(w)
            centers.append(c.center)
            radii.append(c.radius)
            lengths.append(d)
    return LimitSetSample(depth, words, np.array(centers), np.array(radii), np.array(lengths))


def delta_estimate(data: SchottkyData, depth: int, tol: float = 1e-12) -> float:
    """Limit-set dimension estimate from the nested disk radii.

    Solves ``sum_{|w|=depth} r_w^s = sum_{|w|=depth-1} r_w^s`` for s in
    [0, 2] by bisection: the level-to-level form of ``sum r_w^s = 1``, which
    is independent of the length unit of the plane.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    sample = limit_set_sample(data, depth)
    log_fine = np.log(sample.level(depth)[1])
    log_coarse = np.log(sample.level(depth - 1)[1])

    def f(s: float) -> float:
        return float(np.sum(np.exp(s * log_fine)) - np.sum(np.exp(s * log_coarse)))

    lo, hi = 0.0, 2.0
    if not (f(lo) >= 0 > f(hi)) or not np.all(np.isfinite(log_fine)):
        raise NoBracket(f"no root in [0, 2]: f(0)={f(lo):.3g}, f(2)={f(hi):.3g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def prefix_blocks(g: int) -> list[int]:
    """Partition of words by first letter, for splitting enumeration across workers."""
    return alphabet(g)


def map_blocks(fn, blocks, threads: int = 1) -> list:
    """Apply fn to each block, serially or on a thread pool; results keep block order."""
    if threads <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))


def primitive_blocks(g: int, n_max: int, threads: int = 1) -> list[tuple[int, ...]]:
    """Primitive class tuples, enumerated per first letter and merged deterministically."""

    def block(x0):
        return [w for n in range(1, n_max + 1) for w in _primitive_tuples(g, n, first=x0)]

    parts = map_blocks(block, prefix_blocks(g), threads)
    out = [w for part in parts for w in part]
    out.sort(key=lambda w: (len(w), [letter_key(x) for x in w]))
    return out


def fundamental_domain_samples(data: SchottkyData, n: int = 64, seed: int = 0) -> list[complex]:
    """Points outside every circle, drawn from a box around the configuration."""
    rng = np.random.default_rng(seed)
    extent = max(abs(c.center) + c.radius for c in data.circles) * 1.5
    pts: list[complex] = []
    while len(pts) < n:
        z = complex(*rng.uniform(-extent, extent, 2))
        if all(c.signed_distance(z) > 0 for c in data.circles):
            pts.append(z)
    return pts


def delta_drift(data: SchottkyData, depths: Sequence[int]) -> list[float]:
    """delta_estimate at each depth, to expose the drift of the refinement scheme."""
    return [delta_estimate(data, d) for d in depths]

