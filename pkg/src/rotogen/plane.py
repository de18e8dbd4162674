"""Planar geometry: unit vectors, rotations, sectors and the singular set.

Angles are radians.  Vectors are plain length-2 numpy arrays (``Vec2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .catalog import BRACKET_EPS, Family, OrbitTypeSpec, A_theta, sector_ids, theta_star

TWO_PI = 2.0 * math.pi


def vec(x, y) -> np.ndarray:
    return np.array([float(x), float(y)])


def e_dir(phi: float) -> np.ndarray:
    return np.array([math.cos(phi), math.sin(phi)])


def e_perp(phi: float) -> np.ndarray:
    return np.array([-math.sin(phi), math.cos(phi)])


def rotation(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s], [s, c]])


def rotate(psi: float, x) -> np.ndarray:
    return rotation(psi) @ np.asarray(x, dtype=float)


def boundary_values(spec: OrbitTypeSpec, x) -> dict:
    """Signed values ``e(phi_j)^perp . x`` for every ``j``."""
    x0, x1 = float(x[0]), float(x[1])
    return {j: -math.sin(spec.phi[j]) * x0 + math.cos(spec.phi[j]) * x1 for j in spec.J}


def sector_of(spec: OrbitTypeSpec, x) -> Optional[int]:
    """Sector index containing ``x`` (strict inequalities), or ``None``."""
    b = boundary_values(spec, x)
    if spec.family is Family.I:
        return 0 if b[0] > 0.0 else None
    for i in sector_ids(spec):
        if b[i + 1] < 0.0 < b[i]:
            return i
    return None


@dataclass(frozen=True)
class SingularSetReport:
    per_direction: dict
    origin_distance: float
    nearest_kind: str  # "boundary" or "origin"
    nearest_j: Optional[int]
    nearest_distance: float

    @property
    def in_singular_set(self) -> bool:
        return any(v == 0.0 for v in self.per_direction.values())


def singular_report(spec: OrbitTypeSpec, x) -> SingularSetReport:
    b = boundary_values(spec, x)
    r = math.hypot(float(x[0]), float(x[1]))
    j = min(b, key=lambda k: abs(b[k]))
    # Types II-V treat the origin as its own feature; it wins ties.
    if spec.family is not Family.I and r <= abs(b[j]):
        return SingularSetReport(b, r, "origin", None, r)
    return SingularSetReport(b, r, "boundary", j, abs(b[j]))


def min_boundary_distance(spec: OrbitTypeSpec, x) -> float:
    return min(abs(v) for v in boundary_values(spec, x).values())


@dataclass(frozen=True)
class Frame:
    """Rigid motion ``x = R(offset) diag(1, det) (u, v)``.

    Startup problems are posed in frame coordinates ``(u, v)`` where the
    relevant singular line is the ``u``-axis and the curve lives in ``v > 0``.
    A reflection (``det = -1``) reverses orientation, which flips the sign of
    the curvature term, so the mean curvature seen in the frame is ``det * H``.
    """

    offset: float
    det: int = 1

    def to_frame(self, x):
        x = np.asarray(x, dtype=float)
        c, s = math.cos(self.offset), math.sin(self.offset)
        u = c * x[..., 0] + s * x[..., 1]
        v = -s * x[..., 0] + c * x[..., 1]
        return u, self.det * v

    def from_frame(self, u, v):
        u = np.asarray(u, dtype=float)
        v = self.det * np.asarray(v, dtype=float)
        c, s = math.cos(self.offset), math.sin(self.offset)
        return np.stack([c * u - s * v, s * u + c * v], axis=-1)

    def angle_from_frame(self, beta):
        return self.offset + self.det * beta

    def angle_to_frame(self, alpha):
        return self.det * (alpha - self.offset)

    def line_angle(self, phi: float) -> float:
        """Direction of the line through the origin at angle ``phi``, in frame, mod pi."""
        a = math.fmod(self.det * (phi - self.offset), math.pi)
        if a < 0.0:
            a += math.pi
        if math.pi - a < 1e-15:
            a = 0.0
        return a


def frame_lines(spec: OrbitTypeSpec, frame: Frame) -> list:
    """``(psi_j, n_j)`` pairs for every singular line, in frame angles mod pi."""
    return [(frame.line_angle(spec.phi[j]), spec.mult[j]) for j in spec.J]


def normalize_angle(a: float, base: float = -math.pi) -> float:
    """Map ``a`` into ``[base, base + 2 pi)``."""
    a = math.fmod(a - base, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    return base + a


@dataclass(frozen=True)
class Cone:
    """Open planar cone between consecutive rays of the singular lines.

    ``sector`` is the index of the matching sector when the cone *is* that
    sector, and ``antipodal`` marks cones that are the point reflection of
    one.  ``theta`` is the zero of the cotangent sum inside the cone (``None``
    for Type I, which has no origin case).
    """

    index: int
    lo: float
    hi: float
    lower_j: int
    upper_j: int
    sector: Optional[int]
    antipodal: bool
    theta: Optional[float]

    def contains_angle(self, a: float) -> bool:
        a = normalize_angle(a, self.lo)
        return self.lo < a < self.hi


def _bisect_A(spec, lo, hi):
    lo, hi = lo + BRACKET_EPS, hi - BRACKET_EPS
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if A_theta(spec, mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(1.0, abs(mid)):
            break
    return min((lo, hi), key=lambda t: abs(A_theta(spec, t)))


def cones(spec: OrbitTypeSpec) -> list:
    """All cones of the plane, ordered counterclockwise starting at ``phi_min``."""
    rays = []
    for j in spec.J:
        rays.append((spec.phi[j], j, False))
        rays.append((spec.phi[j] + math.pi, j, True))
    base = rays[0][0]
    rays.sort(key=lambda r: normalize_angle(r[0], base))
    out = []
    sectors = set(sector_ids(spec)) if spec.family is not Family.I else set()
    for k, (a, j, flipped) in enumerate(rays):
        b, j2, _ = rays[(k + 1) % len(rays)]
        lo = normalize_angle(a, base)
        hi = normalize_angle(b, lo)
        if hi <= lo:
            hi += TWO_PI
        sector = None
        if spec.family is Family.I:
            sector, antipodal = (None, True) if flipped else (0, False)
        else:
            if not flipped and j in sectors and j2 == j + 1:
                sector = j
            antipodal = flipped and j in sectors and j2 == j + 1
        theta = None
        if spec.family is not Family.I:
            if sector is not None:
                theta = theta_star(spec, sector)
            elif antipodal:
                theta = theta_star(spec, j) + math.pi
            else:
                theta = _bisect_A(spec, lo, hi)
        out.append(Cone(k, lo, hi, j, j2, sector, antipodal, theta))
    return out


def cone_of(spec: OrbitTypeSpec, x, table=None) -> Optional[Cone]:
    """Cone containing ``x``, or ``None`` on the singular set."""
    if x[0] == 0.0 and x[1] == 0.0:
        return None
    a = math.atan2(x[1], x[0])
    for c in table if table is not None else cones(spec):
        if c.contains_angle(a):
            return c
    return None


def antipodal_cone(table: list, cone: Cone) -> Cone:
    target = normalize_angle(cone.lo + math.pi + 1e-9, table[0].lo)
    for c in table:
        if c.contains_angle(target):
            return c
    raise AssertionError("antipodal cone not found")
