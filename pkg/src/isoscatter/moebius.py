"""Moebius transformations and generalized circles on the Riemann sphere.

Points of the extended plane are Python complex numbers; the point at
infinity is ``INF`` (any complex value with an infinite component is
treated as infinity).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

INF = complex(math.inf, 0.0)

#: Tolerance on |trace^2 - 4| below which classification is refused.
DEGENERACY_TOL = 1e-10


class NearlyDegenerate(ArithmeticError):
    """Trace squared is numerically 4; parabolic versus loxodromic is undecidable."""

    def __init__(self, trace_sq: complex, tol: float):
        super().__init__(f"|trace^2 - 4| = {abs(trace_sq - 4):.3e} < {tol:.1e}")
        self.trace_sq = trace_sq
        self.tol = tol


def is_inf(z: complex) -> bool:
    return cmath.isinf(z)


def wrap_angle(x: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    t = math.remainder(x, 2 * math.pi)
    if t <= -math.pi:
        t += 2 * math.pi
    return t


@dataclass(frozen=True)
class MoebiusMap:
    """z -> (az + b) / (cz + d), normalized to determinant one on construction."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0:
            raise ValueError("singular matrix does not define a Moebius map")
        if det != 1:
            r = cmath.sqrt(det)
            a, b, c, d = a / r, b / r, c / r, d / r
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def _unchecked(cls, a: complex, b: complex, c: complex, d: complex) -> MoebiusMap:
        # products and inverses of det-one matrices; recomputing the det of
        # large entries would only inject cancellation error
        m = object.__new__(cls)
        for k, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(m, k, v)
        return m

    @classmethod
    def identity(cls) -> MoebiusMap:
        return cls(1, 0, 0, 1)

    @classmethod
    def from_array(cls, m) -> MoebiusMap:
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def __matmul__(self, other: MoebiusMap) -> MoebiusMap:
        # (self @ other)(z) == self(other(z))
        return MoebiusMap._unchecked(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> MoebiusMap:
        return MoebiusMap._unchecked(self.d, -self.b, -self.c, self.a)

    def __call__(self, z: complex) -> complex:
        return apply(self, z)

    def pole(self) -> complex:
        """The point sent to infinity."""
        return INF if self.c == 0 else -self.d / self.c

    def is_close(self, other: MoebiusMap, tol: float = 1e-10) -> bool:
        """Projective equality: entrywise within tol up to the sign of the matrix."""
        x, y = self.as_array(), other.as_array()
        return min(np.abs(x - y).max(), np.abs(x + y).max()) <= tol


def apply(m: MoebiusMap, z: complex) -> complex:
    if is_inf(z):
        return INF if m.c == 0 else m.a / m.c
    den = m.c * z + m.d
    if den == 0:
        return INF
    return (m.a * z + m.b) / den


@dataclass(frozen=True)
class GeneralizedCircle:
    """A circle or a line in the plane.

    Circles carry ``center`` and ``radius``; their interior is the open disk.
    Lines are ``{z : Re(conj(normal) * z) = offset}`` with unit ``normal``; the
    interior is the half-plane the normal points into.
    """

    kind: str
    center: complex = 0j
    radius: float = 0.0
    normal: complex = 1 + 0j
    offset: float = 0.0

    def __post_init__(self):
        if self.kind == "circle":
            if not self.radius > 0:
                raise ValueError(f"circle radius must be positive, got {self.radius}")
        elif self.kind == "line":
            n = complex(self.normal)
            if n == 0:
                raise ValueError("line normal must be nonzero")
            object.__setattr__(self, "normal", n / abs(n))
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def circle(cls, center: complex, radius: float) -> GeneralizedCircle:
        return cls("circle", center=complex(center), radius=float(radius))

    @classmethod
    def line(cls, normal: complex, offset: float) -> GeneralizedCircle:
        return cls("line", normal=complex(normal), offset=float(offset))

    @property
    def is_line(self) -> bool:
        return self.kind == "line"

    def signed_distance(self, z: complex) -> float:
        """Negative inside, positive outside, zero on the curve."""
        if is_inf(z):
            return math.inf if not self.is_line else 0.0
        if self.is_line:
            return self.offset - (self.normal.conjugate() * z).real
        return abs(z - self.center) - self.radius

    def contains(self, z: complex) -> bool:
        return self.signed_distance(z) < 0

    def sample(self, n: int, phase: float = 0.0) -> list[complex]:
        """n points on the curve (lines are sampled symmetrically about the foot point)."""
        if self.is_line:
            foot = self.offset * self.normal
            along = 1j * self.normal
            return [foot + along * math.tan(math.pi * ((k + 0.5) / n - 0.5)) for k in range(n)]
        return [self.center + self.radius * cmath.exp(1j * (phase + 2 * math.pi * k / n)) for k in range(n)]

    def disjoint_from(self, other: GeneralizedCircle, tol: float = 0.0) -> bool:
        """Disjoint with disjoint interiors (circles only)."""
        if self.is_line or other.is_line:
            raise ValueError("disjointness is defined for circles only")
        return abs(self.center - other.center) > self.radius + other.radius + tol


def _line_through(z1: complex, z2: complex) -> GeneralizedCircle:
    n = 1j * (z2 - z1)
    n /= abs(n)
    return GeneralizedCircle.line(n, (n.conjugate() * z1).real)


def _circle_through(z1: complex, z2: complex, z3: complex) -> GeneralizedCircle:
    pts = [z for z in (z1, z2, z3) if not is_inf(z)]
    if len(pts) == 2:
        return _line_through(*pts)
    w2, w3 = z2 - z1, z3 - z1
    cross = (w2.conjugate() * w3).imag
    scale = max(abs(w2), abs(w3)) ** 2
    if abs(cross) <= 1e-14 * scale:
        return _line_through(z1, z2 if abs(w2) >= abs(w3) else z3)
    # circumcenter relative to z1
    num = abs(w2) ** 2 * w3 - abs(w3) ** 2 * w2
    u = num / (2j * cross)
    return GeneralizedCircle.circle(z1 + u, abs(u))


def _orient(image: GeneralizedCircle, inside_point: complex) -> tuple[GeneralizedCircle, bool]:
    """For a line image, flip the normal so that inside_point is interior."""
    if image.is_line and image.signed_distance(inside_point) > 0:
        image = GeneralizedCircle.line(-image.normal, -image.offset)
    return image, True


def image_of_circle(m: MoebiusMap, c: GeneralizedCircle, tol: float = 1e-12) -> tuple[GeneralizedCircle, bool]:
    """Image of a generalized circle under m.

    Returns ``(image, interior_to_interior)``.  The flag says whether the
    interior of ``c`` is carried onto the interior of the image.  When the
    image is a line the normal is chosen so that the flag is True.
    """
    pole = m.pole()
    if not c.is_line:
        c0, r = c.center, c.radius
        if is_inf(pole):
            return GeneralizedCircle.circle(apply(m, c0), r * abs(m.a / m.d)), True
        dist = abs(pole - c0)
        u = (pole - c0) / dist if dist > 0 else 1.0
        if abs(dist - r) <= tol * max(1.0, r):
            q1, q2 = c0 + 1j * r * u, c0 - r * u
            return _orient(_line_through(apply(m, q1), apply(m, q2)), apply(m, c0))
        # closed forms for det-one maps; no cancellation for tiny images
        q = m.c * c0 + m.d
        den = abs(q) ** 2 - abs(m.c) ** 2 * r * r
        center = ((m.a * c0 + m.b) * q.conjugate() - m.a * m.c.conjugate() * r * r) / den
        return GeneralizedCircle.circle(center, r / abs(den)), dist > r

    # line input
    n, h = c.normal, c.offset
    foot = h * n
    along = 1j * n
    inner = foot + n
    if is_inf(pole) or abs(c.signed_distance(pole)) <= tol * max(1.0, abs(pole)):
        base = foot if is_inf(pole) else pole
        q1, q2 = base + along, base - along
        return _orient(_line_through(apply(m, q1), apply(m, q2)), apply(m, inner))
    pfoot = foot + ((pole - foot) * along.conjugate()).real * along
    spread = max(abs(pole - pfoot), 1.0)
    image = _circle_through(apply(m, INF), apply(m, pfoot + spread * along), apply(m, pfoot - spread * along))
    if image.is_line:
        return _orient(image, apply(m, inner))
    return image, not c.contains(pole)


@dataclass(frozen=True)
class ComplexLength:
    """Translation length ``ell`` and rotation ``theta`` of a loxodromic element.

    ``ell = 2 log|lam|`` and ``theta = 2 arg(lam)`` (wrapped to (-pi, pi]) for the
    eigenvalue ``lam`` of the determinant-one matrix with ``|lam| > 1``.
    """

    ell: float
    theta: float

    @classmethod
    def from_multiplier(cls, mult: complex) -> ComplexLength:
        return cls(math.log(abs(mult)), wrap_angle(cmath.phase(mult)))

    def power(self, n: int) -> ComplexLength:
        return ComplexLength(n * self.ell, wrap_angle(n * self.theta))

    def distance(self, other: ComplexLength) -> float:
        """Max of the ell gap and the circular theta gap."""
        dtheta = abs(wrap_angle(self.theta - other.theta))
        return max(abs(self.ell - other.ell), dtheta)


@dataclass(frozen=True)
class Classification:
    kind: str  # "identity" | "elliptic" | "parabolic" | "loxodromic"
    fixed_points: tuple[complex, ...] = ()
    multiplier: complex | None = None
    complex_length: ComplexLength | None = None


def _eigen_large(t: complex) -> tuple[complex, complex]:
    disc = cmath.sqrt(t * t - 4)
    lam_p, lam_m = (t + disc) / 2, (t - disc) / 2
    if abs(lam_p) >= abs(lam_m):
        return lam_p, disc
    return lam_m, -disc


def classify(m: MoebiusMap, tol: float = DEGENERACY_TOL) -> Classification:
    """Identity / elliptic / loxodromic classification from the trace.

    For loxodromic maps the fixed points are returned as
    ``(attracting, repelling)`` and the multiplier is the derivative at the
    repelling fixed point, ``lam**2`` with ``|lam| > 1``.
    """
    if abs(m.b) <= tol and abs(m.c) <= tol and abs(m.a - m.d) <= tol:
        return Classification("identity")
    t = m.trace
    t2 = t * t
    if abs(t2 - 4) < tol:
        raise NearlyDegenerate(t2, tol)
    if abs(t2.imag) <= tol * max(1.0, abs(t2)) and 0 <= t2.real < 4:
        return Classification("elliptic")
    lam, disc = _eigen_large(t)
    mult = lam * lam
    if m.c != 0:
        # roots u/c with u = (a - d +- disc)/2 and u+ u- = -bc; take the
        # larger u directly and the other root from the product
        up, um = (m.a - m.d + disc) / 2, (m.a - m.d - disc) / 2
        if abs(up) >= abs(um):
            attracting, repelling = up / m.c, -m.b / up
        else:
            attracting, repelling = -m.b / um, um / m.c
    else:
        finite = m.b / (m.d - m.a)
        attracting, repelling = (INF, finite) if abs(m.a) > abs(m.d) else (finite, INF)
    return Classification("loxodromic", (attracting, repelling), mult, ComplexLength.from_multiplier(mult))


def complex_length(m: MoebiusMap, tol: float = DEGENERACY_TOL) -> ComplexLength:
    cls = classify(m, tol)
    if cls.complex_length is None:
        raise ValueError(f"{cls.kind} element has no complex length")
    return cls.complex_length


def pairing_map(c1: complex, r1: float, c2: complex, r2: float, twist: float = 0.0) -> MoebiusMap:
    """z -> c2 + r1 r2 e^{i twist} / (z - c1).

    Sends the circle (c1, r1) onto (c2, r2), interior to exterior, since
    |A(z) - c2| = r1 r2 / |z - c1|.
    """
    k = r1 * r2 * cmath.exp(1j * twist)
    return MoebiusMap(c2, k - c1 * c2, 1, -c1)
