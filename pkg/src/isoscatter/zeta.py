"""Truncated Selberg-type zeta function of a Schottky group and its zeros.

For a spectrum of primitive complex lengths (ell, theta) with weights,

    Z(s) = prod_entries prod_{k,l >= 0, k+l <= k_max} (1 - x)^weight,
    x = exp(i (k - l) theta - (s + k + l) ell).

Every factor vanishes exactly on the lattice
``s = -(k+l) + i((k-l) theta + 2 pi m) / ell``, so zeros of the truncated
product are known in closed form; the argument-principle counter does not use
that, except to refuse contours passing through a zero.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .groups import FreeGroupHom, NotSurjective, SubgroupHandle, cycle_type, schreier_generators
from .moebius import ComplexLength, MoebiusMap, complex_length, wrap_angle
from .schottky import (
    SchottkyData,
    cyclic_reduce,
    free_reduce,
    letter_key,
    map_blocks,
    primitive_blocks,
    primitive_class_tuples,
    word_to_map,
    word_to_string,
)

VANISH_TOL = 1e-14
CONTOUR_MARGIN = 1e-6
RESIDUAL_TOL = 1e-3
GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


class ZetaError(ArithmeticError):
    pass


class FactorVanished(ZetaError):
    def __init__(self, entry: int, k: int, l: int, s: complex):
        super().__init__(f"factor (entry {entry}, k={k}, l={l}) vanishes at s={s}")
        self.entry, self.k, self.l, self.s = entry, k, l, s


class ZeroOnContour(ZetaError):
    def __init__(self, zero: complex, rect: Rect, suggestion: Rect | None = None):
        super().__init__(f"zero near {zero} lies on the boundary of {rect}")
        self.zero, self.rect, self.suggestion = zero, rect, suggestion


class QuadratureDiverged(ZetaError):
    pass


@dataclass(frozen=True)
class SpectrumEntry:
    """One closed geodesic class: complex length, multiplicity, and the base word it comes from.

    ``period`` is the number of times the base word is traversed (1 on the base).
    """

    ell: float
    theta: float
    weight: int = 1
    word: tuple[int, ...] = ()
    period: int = 1

    @property
    def cl(self) -> ComplexLength:
        return ComplexLength(self.ell, self.theta)

    @property
    def word_str(self) -> str:
        return word_to_string(self.word) + (f"^{self.period}" if self.period != 1 else "")

    def sort_key(self):
        return (self.ell, self.theta, len(self.word), [letter_key(x) for x in self.word], self.period)


@dataclass(frozen=True)
class ZetaTruncation:
    n_max: int = 8
    k_max: int = 12

    def __post_init__(self):
        if self.n_max < 1 or self.k_max < 0:
            raise ValueError("truncation parameters must be positive")


@dataclass(frozen=True)
class Rect:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"rectangle is not well ordered: {self}")

    @property
    def corners(self) -> list[complex]:
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    def shifted(self, dre: float, dim: float) -> Rect:
        return Rect(self.re_min + dre, self.re_max + dre, self.im_min + dim, self.im_max + dim)

    def split(self, frac: float) -> tuple[Rect, Rect]:
        """Cut the longer side at the given fraction."""
        if self.width >= self.height:
            x = self.re_min + frac * self.width
            return Rect(self.re_min, x, self.im_min, self.im_max), Rect(x, self.re_max, self.im_min, self.im_max)
        y = self.im_min + frac * self.height
        return Rect(self.re_min, self.re_max, self.im_min, y), Rect(self.re_min, self.re_max, y, self.im_max)


# --- spectra -----------------------------------------------------------------------

def _entries_for_words(data: SchottkyData, words: Sequence[tuple[int, ...]]) -> list[SpectrumEntry]:
    out = []
    for w in words:
        cl = complex_length(word_to_map(data, w))
        out.append(SpectrumEntry(cl.ell, cl.theta, 1, tuple(w), 1))
    return out


def sort_spectrum(entries: Iterable[SpectrumEntry]) -> list[SpectrumEntry]:
    return sorted(entries, key=SpectrumEntry.sort_key)


def length_spectrum(data: SchottkyData, n_max: int, threads: int = 1) -> list[SpectrumEntry]:
    """One entry per primitive class of length <= n_max, sorted by (ell, theta)."""
    words = primitive_blocks(data.g, n_max, threads)
    chunk = max(1, len(words) // (4 * max(threads, 1)))
    blocks = [words[i:i + chunk] for i in range(0, len(words), chunk)]
    parts = map_blocks(lambda b: _entries_for_words(data, b), blocks, threads)
    return sort_spectrum(e for part in parts for e in part)


def lift_spectrum(base: Sequence[SpectrumEntry], hom: FreeGroupHom, H: SubgroupHandle) -> list[SpectrumEntry]:
    """Closed geodesics of the cover attached to phi^-1(H).

    A base class w whose image permutes G/H with m cycles of length c lifts
    to m primitive classes of complex length c (ell, theta).
    """
    if not hom.surjective:
        raise NotSurjective(hom.image_order, hom.group.order)
    out = []
    for e in base:
        if not e.word:
            raise ValueError("base entries must carry their words")
        counts = Counter(cycle_type(H.left_translation(hom(e.word))))
        for c in sorted(counts):
            out.append(SpectrumEntry(c * e.ell, wrap_angle(c * e.theta), e.weight * counts[c], e.word, c * e.period))
    return sort_spectrum(out)


def expand_weights(entries: Iterable[SpectrumEntry]) -> list[tuple[float, float]]:
    return [(e.ell, e.theta) for e in entries for _ in range(e.weight)]


def spectrum_discrepancy(a: Sequence[SpectrumEntry], b: Sequence[SpectrumEntry], tol: float = 1e-12):
    """First unmatched entry between two spectra compared as multisets of (ell, theta, weight).

    Returns None when they agree, else ``(side, index, entry)``.
    """
    pool = sorted(range(len(b)), key=lambda j: b[j].ell)
    ells = np.array([b[j].ell for j in pool])
    used = np.zeros(len(pool), dtype=bool)
    for i, e in enumerate(a):
        lo = np.searchsorted(ells, e.ell - tol, side="left")
        hi = np.searchsorted(ells, e.ell + tol, side="right")
        hit = None
        for k in range(lo, hi):
            f = b[pool[k]]
            if not used[k] and f.weight == e.weight and abs(wrap_angle(f.theta - e.theta)) <= tol:
                hit = k
                break
        if hit is None:
            return ("left", i, e)
        used[hit] = True
    if not used.all():
        k = int(np.flatnonzero(~used)[0])
        return ("right", pool[k], b[pool[k]])
    return None


def multiset_discrepancy(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]], tol: float):
    """Same as spectrum_discrepancy for unweighted (ell, theta) lists."""
    ea = [SpectrumEntry(x, y) for x, y in a]
    eb = [SpectrumEntry(x, y) for x, y in b]
    return spectrum_discrepancy(ea, eb, tol)


@dataclass
class DirectCoverSpectrum:
    lengths: list[tuple[float, float]]
    base_words: list[tuple[int, ...]]
    cover_rank: int
    classes_scanned: int


def cover_spectrum_direct(data: SchottkyData, hom: FreeGroupHom, H: SubgroupHandle, cutoff: int) -> DirectCoverSpectrum:
    """Cover geodesics whose base projection has cyclic length <= cutoff, enumerated in the cover group.

    Works in the free group on the Schreier generators of phi^-1(H): every
    primitive class there of length <= cutoff is substituted back into the
    base alphabet, and its complex length is taken from the product of the
    generator matrices.  A closed path of base length n crosses at most n
    non-tree edges, so classes of length <= cutoff suffice.
    """
    sg = schreier_generators(hom, H)
    r = sg.rank
    gen_words = [w.letters for w in sg.generators]
    gen_maps = [word_to_map(data, w) for w in gen_words]
    gen_inv = [m.inverse() for m in gen_maps]
    lengths, words = [], []
    scanned = 0
    for u in primitive_class_tuples(r, cutoff):
        scanned += 1
        base = []
        for x in u:
            base.extend(gen_words[x - 1] if x > 0 else [-y for y in reversed(gen_words[-x - 1])])
        base = cyclic_reduce(free_reduce(base))
        if len(base) > cutoff:
            continue
        m = MoebiusMap.identity()
        for x in u:
            m = m @ (gen_maps[x - 1] if x > 0 else gen_inv[-x - 1])
        cl = complex_length(m)
        lengths.append((cl.ell, cl.theta))
        words.append(base)
    return DirectCoverSpectrum(lengths, words, r, scanned)


# --- evaluation --------------------------------------------------------------------

@dataclass
class _Terms:
    ell: np.ndarray
    phase: np.ndarray
    m: np.ndarray
    weight: np.ndarray
    entry: np.ndarray
    k: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        self.uniq, self.idx = np.unique(self.ell, return_inverse=True)
        self.const = np.exp(1j * self.phase - self.m * self.ell)

    @classmethod
    def build(cls, spec: Sequence[SpectrumEntry], trunc: ZetaTruncation) -> _Terms:
        kk, ll = np.array([(k, m - k) for m in range(trunc.k_max + 1) for k in range(m + 1)]).reshape(-1, 2).T
        n, p = len(spec), len(kk)
        ell = np.repeat([e.ell for e in spec], p).astype(float)
        theta = np.repeat([e.theta for e in spec], p).astype(float)
        weight = np.repeat([e.weight for e in spec], p).astype(float)
        entry = np.repeat(np.arange(n), p)
        k, l = np.tile(kk, n), np.tile(ll, n)
        return cls(ell, (k - l) * theta, k + l, weight, entry, k, l)

    def x(self, s: np.ndarray) -> np.ndarray:
        """x for each term (rows) at each s (columns).

        Factored as exp(i phase - m ell) * exp(-s ell) so only the distinct
        ells need an exponential per point.
        """
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        return self.const[:, None] * np.exp(-np.outer(self.uniq, s))[self.idx]


def zeta_log(spec: Sequence[SpectrumEntry], s: complex, trunc: ZetaTruncation = ZetaTruncation()) -> complex:
    """log Z(s) as an exactly rounded sum of weight * log1p(-x), a branch of the logarithm."""
    if not spec:
        return 0j
    t = _Terms.build(spec, trunc)
    x = t.x(s)[:, 0]
    gap = np.abs(1 - x)
    bad = np.flatnonzero(gap < VANISH_TOL)
    if len(bad):
        i = bad[0]
        raise FactorVanished(int(t.entry[i]), int(t.k[i]), int(t.l[i]), s)
    terms = t.weight * np.log1p(-x)
    order = np.argsort(np.abs(terms), kind="stable")
    return complex(math.fsum(terms.real[order]), math.fsum(terms.imag[order]))


def zeta_eval(spec: Sequence[SpectrumEntry], s: complex, trunc: ZetaTruncation = ZetaTruncation()) -> complex:
    return complex(np.exp(zeta_log(spec, s, trunc)))


def log_derivative(spec: Sequence[SpectrumEntry], s, trunc: ZetaTruncation = ZetaTruncation(),
                   _terms: _Terms | None = None) -> np.ndarray:
    """Z'/Z at one or many points: sum of weight * ell * x / (1 - x)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if not spec:
        return np.zeros(s_arr.shape, dtype=complex)
    t = _terms or _Terms.build(spec, trunc)
    out = np.empty(s_arr.shape, dtype=complex)
    step = max(1, 2_000_000 // max(len(t.ell), 1))
    for i in range(0, len(s_arr), step):
        x = t.x(s_arr[i:i + step])
        out[i:i + step] = (t.weight * t.ell) @ (x / (1 - x))
    return out


@dataclass
class TruncationInfo:
    """A posteriori diagnostics at a point s."""

    tail_bound: float
    max_modulus: float
    all_contracting: bool


def truncation_info(spec: Sequence[SpectrumEntry], s: complex, trunc: ZetaTruncation = ZetaTruncation()) -> TruncationInfo:
    """Bound on sum |x| over the dropped (k, l) and the largest retained |x|.

    ``|x| < 1`` for every retained factor only holds for Re s > 0; to the left
    it fails, and the flag reports that instead of raising.
    """
    if not spec:
        return TruncationInfo(0.0, 0.0, True)
    sig = s.real
    tail = 0.0
    for e in spec:
        q = math.exp(-e.ell)
        if q >= 1 or sig * e.ell < -700:
            return TruncationInfo(math.inf, math.inf, False)
        # sum_{m > k_max} (m + 1) q^m, closed form
        n = trunc.k_max + 1
        tail += e.weight * math.exp(-sig * e.ell) * q ** n * ((n + 1) - n * q) / (1 - q) ** 2
    max_mod = max(math.exp(-sig * e.ell) for e in spec)
    return TruncationInfo(tail, max_mod, max_mod < 1)


# --- zero counting ---------------------------------------------------------------

def factor_zeros_near(spec: Sequence[SpectrumEntry], trunc: ZetaTruncation, a: complex, b: complex,
                      margin: float) -> complex | None:
    """A zero of some retained factor within ``margin`` of the segment [a, b], if any."""
    lo_re, hi_re = min(a.real, b.real) - margin, max(a.real, b.real) + margin
    lo_im, hi_im = min(a.imag, b.imag) - margin, max(a.imag, b.imag) + margin
    for e in spec:
        spacing = 2 * math.pi / e.ell
        for m in range(trunc.k_max + 1):
            if not lo_re <= -m <= hi_re:
                continue
            for k in range(m + 1):
                base = (2 * k - m) * e.theta / e.ell
                j0 = math.ceil((lo_im - base) / spacing)
                j1 = math.floor((hi_im - base) / spacing)
                for j in range(j0, j1 + 1):
                    z = complex(-m, base + j * spacing)
                    if _segment_distance(z, a, b) < margin:
                        return z
    return None


def _segment_distance(z: complex, a: complex, b: complex) -> float:
    d = b - a
    t = min(1.0, max(0.0, ((z - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(z - (a + t * d))


@dataclass
class ZeroCount:
    count: int
    raw: complex
    residual: float
    panels: int = 0


def _edge_integral(f, a: complex, b: complex, tol: float, max_depth: int) -> tuple[complex, int]:
    """Adaptive composite Gauss-Legendre of f along [a, b] with panel halving.

    A panel is accepted when its one-panel value and the sum over its two
    halves differ by less than its share of tol; the halved values are kept.
    """
    d = b - a
    n0 = max(4, math.ceil(abs(d) / 0.25))
    panels = [(i / n0, (i + 1) / n0, 0) for i in range(n0)]
    total = 0j
    used = 0
    while panels:
        lo = np.array([p[0] for p in panels])
        hi = np.array([p[1] for p in panels])
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        nodes = [(mid[:, None] + half[:, None] * _GL_NODES[None, :]),
                 (0.5 * (lo + mid)[:, None] + 0.5 * half[:, None] * _GL_NODES[None, :]),
                 (0.5 * (mid + hi)[:, None] + 0.5 * half[:, None] * _GL_NODES[None, :])]
        flat = np.concatenate([n.ravel() for n in nodes])
        vals = f(a + flat * d).reshape(3, len(panels), GL_ORDER)
        if not np.all(np.isfinite(vals)):
            raise QuadratureDiverged("non-finite log-derivative on the contour")
        coarse = (vals[0] * _GL_WEIGHTS).sum(axis=1) * half * d
        fine = ((vals[1] + vals[2]) * _GL_WEIGHTS).sum(axis=1) * 0.5 * half * d
        err = np.abs(coarse - fine)
        nxt = []
        for i, p in enumerate(panels):
            used += 1
            if err[i] <= tol * (p[1] - p[0]) or err[i] < 1e-15:
                total += fine[i]
            elif p[2] >= max_depth:
                raise QuadratureDiverged(f"panel [{p[0]:.3g}, {p[1]:.3g}] on {a}->{b} did not converge")
            else:
                nxt += [(p[0], mid[i], p[2] + 1), (mid[i], p[1], p[2] + 1)]
        panels = nxt
    return total, used


def count_zeros(spec: Sequence[SpectrumEntry], rect: Rect, trunc: ZetaTruncation = ZetaTruncation(),
                margin: float = CONTOUR_MARGIN, tol: float = 1e-4, max_depth: int = 40) -> ZeroCount:
    """Number of zeros inside rect via (1/2 pi i) times the contour integral of Z'/Z."""
    corners = rect.corners
    edges = list(zip(corners, corners[1:] + corners[:1]))
    for a, b in edges:
        z = factor_zeros_near(spec, trunc, a, b, margin)
        if z is not None:
            shift = 0.05 * min(rect.width, rect.height)
            raise ZeroOnContour(z, rect, rect.shifted(shift, shift))
    if not spec:
        return ZeroCount(0, 0j, 0.0, 0)
    terms = _Terms.build(spec, trunc)

    def f(s):
        return log_derivative(spec, s, trunc, terms)

    raw, panels = 0j, 0
    for a, b in edges:
        # tol is on the count, i.e. on the integral divided by 2 pi
        val, used = _edge_integral(f, a, b, tol * 2 * math.pi / 4, max_depth)
        raw += val
        panels += used
    raw = raw / (2j * math.pi)
    n = round(raw.real)
    residual = abs(raw - n)
    if residual >= RESIDUAL_TOL:
        raise QuadratureDiverged(f"winding number {raw} is not within {RESIDUAL_TOL} of an integer")
    return ZeroCount(int(n), raw, float(residual), panels)


@dataclass
class ZeroCell:
    center: complex
    multiplicity: int
    rect: Rect
    residual: float = 0.0


SPLIT_FRACTIONS = (0.5, 0.47, 0.53, 0.41, 0.59)


def scan_zeros(spec: Sequence[SpectrumEntry], rect: Rect, trunc: ZetaTruncation = ZetaTruncation(),
               resolution: float = 1e-3, max_cells: int = 100_000) -> list[ZeroCell]:
    """Localize zeros by recursive bisection of the longer side.

    Cells are refined until their diameter drops below ``resolution``; the
    reported point is the cell center and the multiplicity its zero count.
    Split lines that pass through a zero are moved to the next fraction.
    """
    if not spec:
        return []

    def margin_for(r: Rect) -> float:
        return min(CONTOUR_MARGIN, 1e-2 * min(r.width, r.height))

    root = count_zeros(spec, rect, trunc, margin=margin_for(rect))
    out: list[ZeroCell] = []
    stack = [(rect, root)]
    cells = 0
    while stack:
        r, zc = stack.pop()
        cells += 1
        if cells > max_cells:
            raise QuadratureDiverged("scan exceeded its cell budget")
        if zc.count == 0:
            continue
        if r.diameter < resolution:
            out.append(ZeroCell(r.center, zc.count, r, zc.residual))
            continue
        err = None
        for frac in SPLIT_FRACTIONS:
            r1, r2 = r.split(frac)
            try:
                c1 = count_zeros(spec, r1, trunc, margin=margin_for(r1))
                c2 = count_zeros(spec, r2, trunc, margin=margin_for(r2))
            except (ZeroOnContour, QuadratureDiverged) as exc:
                err = exc
                continue
            if c1.count + c2.count != zc.count:
                err = QuadratureDiverged(f"split counts {c1.count}+{c2.count} != {zc.count} in {r}")
                continue
            stack += [(r2, c2), (r1, c1)]
            break
        else:
            raise err
    out.sort(key=lambda c: (c.center.real, c.center.imag))
    return out


def lattice_zeros(spec: Sequence[SpectrumEntry], rect: Rect, trunc: ZetaTruncation = ZetaTruncation(),
                  merge_tol: float = 1e-9) -> list[tuple[complex, int]]:
    """Closed-form zeros of the truncated product inside rect, with multiplicity."""
    pts: list[tuple[complex, int]] = []
    for e in spec:
        spacing = 2 * math.pi / e.ell
        for m in range(trunc.k_max + 1):
            if not rect.re_min < -m < rect.re_max:
                continue
            for k in range(m + 1):
                base = (2 * k - m) * e.theta / e.ell
                j0 = math.ceil((rect.im_min - base) / spacing)
                j1 = math.floor((rect.im_max - base) / spacing)
                for j in range(j0, j1 + 1):
                    z = complex(-m, base + j * spacing)
                    if rect.im_min < z.imag < rect.im_max:
                        pts.append((z, e.weight))
    pts.sort(key=lambda p: (p[0].real, p[0].imag))
    merged: list[list] = []
    for z, w in pts:
        for cell in merged:
            if abs(cell[0] - z) < merge_tol:
                cell[1] += w
                break
        else:
            merged.append([z, w])
    return [(z, w) for z, w in merged]


# --- CSV ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def spectrum_to_csv(entries: Sequence[SpectrumEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ell", "theta", "weight", "word"])
    for e in entries:
        w.writerow([_fmt(e.ell), _fmt(e.theta), e.weight, e.word_str])
    return buf.getvalue()


def _parse_word(text: str) -> tuple[tuple[int, ...], int]:
    word, _, period = text.partition("^")
    letters = tuple((ord(ch) - ord("a") + 1) if ch.islower() else -(ord(ch) - ord("A") + 1) for ch in word)
    return letters, int(period) if period else 1


def spectrum_from_csv(text: str) -> list[SpectrumEntry]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        word, period = _parse_word(r["word"])
        out.append(SpectrumEntry(float(r["ell"]), float(r["theta"]), int(r["weight"]), word, period))
    return out


def zeros_to_csv(zeros: Sequence[ZeroCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im", "multiplicity"])
    for z in zeros:
        w.writerow([_fmt(z.center.real), _fmt(z.center.imag), z.multiplicity])
    return buf.getvalue()


def sample_points(n: int = 20, seed: int = 7, re_range=(1.0, 3.0), im_range=(-5.0, 5.0)) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(*re_range, n) + 1j * rng.uniform(*im_range, n)
