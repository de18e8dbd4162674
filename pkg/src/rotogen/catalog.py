"""Orbit-type catalog for codimension-two generalized rotational hypersurfaces.

Each of the five families is described by an index set ``J``, a set of
angles ``phi[j]`` and multiplicities ``mult[j]``.  The generating curve lives
in the plane and the lines through the origin in the directions ``phi[j]``
form the singular set of the governing ODE.

The module also provides the cotangent sum

    A(theta) = sum_j n_j cot(theta - phi_j)

together with its roots ``theta_i`` (one per sector) and the quadratic
identity ``sum_j n_j cot^2(theta_i - phi_j) = gamma (n - 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Optional

from .errors import ParameterError, PoleError

POLE_TOL = 1e-12
BRACKET_EPS = 1e-9
ROOT_TOL = 1e-13


class Family(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"


@dataclass(frozen=True)
class OrbitTypeSpec:
    """Immutable description of one orbit type.

    Attributes
    ----------
    family : Family
        One of the five families.
    variant : str
        Opaque group / representation label, e.g. ``"SO(3),R5"``.
    params : Mapping[str, int]
        Family parameters (``n`` for I, ``ell, m`` for II, ``n0`` for III
        and V, ``k, ell`` and possibly ``m`` for IV).
    J : tuple of int
        Ordered index set.
    phi : Mapping[int, float]
        Angle of each singular line, strictly increasing in ``j``.
    mult : Mapping[int, int]
        Multiplicity of each singular line.
    n : int
        Ambient dimension.
    """

    family: Family
    variant: str
    params: Mapping[str, int]
    J: tuple
    phi: Mapping[int, float]
    mult: Mapping[int, int]
    n: int

    def __post_init__(self):
        if len(self.J) == 0:
            raise ParameterError("J must be nonempty")
        if tuple(sorted(self.J)) != tuple(self.J):
            raise ParameterError("J must be ordered")
        angles = [self.phi[j] for j in self.J]
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ParameterError("phi must be strictly increasing")
        if any(not (-math.pi / 2 < a <= math.pi / 2) for a in angles):
            raise ParameterError("phi must lie in (-pi/2, pi/2]")
        if any(self.mult[j] < 1 for j in self.J):
            raise ParameterError("multiplicities must be positive")
        if sum(self.mult[j] for j in self.J) != self.n - 2:
            raise ParameterError("sum of multiplicities must equal n - 2")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "phi", MappingProxyType(dict(self.phi)))
        object.__setattr__(self, "mult", MappingProxyType(dict(self.mult)))

    def __hash__(self):
        return hash((self.family.value, self.variant, tuple(sorted(self.params.items()))))

    @property
    def gamma(self) -> int:
        return len(self.J) - 1

    @property
    def angles(self) -> tuple:
        return tuple(self.phi[j] for j in self.J)

    @property
    def mults(self) -> tuple:
        return tuple(self.mult[j] for j in self.J)

    @property
    def label(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"Type {self.family.value} {self.variant}" + (f" [{extra}]" if extra else "")


def _build(family, variant, params, J, step, mults, n):
    phi = {j: j * step for j in J}
    return OrbitTypeSpec(family, variant, params, tuple(J), phi, dict(zip(J, mults)), n)


def type_I(n: int) -> OrbitTypeSpec:
    if n < 3:
        raise ParameterError(f"Type I needs n >= 3, got {n}")
    return _build(Family.I, f"O({n - 1}),R{n}", {"n": n}, [0], 0.0, [n - 2], n)


def type_II(ell: int, m: int) -> OrbitTypeSpec:
    if ell < 1 or m < 1:
        raise ParameterError(f"Type II needs ell, m >= 1, got ell={ell}, m={m}")
    variant = f"O({ell + 1})xO({m + 1}),R{ell + m + 2}"
    return _build(Family.II, variant, {"ell": ell, "m": m}, [0, 1], math.pi / 2, [m, ell], ell + m + 2)


TYPE_III_VARIANTS = {1: "SO(3),R5", 2: "SU(3),R8", 4: "Sp(3),R14", 8: "F4,R26"}
TYPE_V_VARIANTS = {1: "SO(4),R8", 2: "G2,R14"}


def type_III(n0: int) -> OrbitTypeSpec:
    if n0 not in TYPE_III_VARIANTS:
        raise ParameterError(f"Type III multiplicity must be one of 1, 2, 4, 8, got {n0}")
    return _build(Family.III, TYPE_III_VARIANTS[n0], {"n0": n0}, [-1, 0, 1], math.pi / 3,
                  [n0] * 3, 3 * n0 + 2)


def type_V(n0: int) -> OrbitTypeSpec:
    if n0 not in TYPE_V_VARIANTS:
        raise ParameterError(f"Type V multiplicity must be 1 or 2, got {n0}")
    return _build(Family.V, TYPE_V_VARIANTS[n0], {"n0": n0}, list(range(-2, 4)), math.pi / 6,
                  [n0] * 6, 6 * n0 + 2)


TYPE_IV_FIXED = {
    "SO(5),R10": (2, 2),
    "U(5),R20": (5, 4),
    "U(1)xSpin(10),R32": (9, 6),
}
# The same representation is also written with Sp(10) in some sources.
TYPE_IV_ALIASES = {"U(1)xSp(10),R32": "U(1)xSpin(10),R32"}
TYPE_IV_FAMILIES = ("SO(2)xSO(m)", "S(U(2)xU(m))", "Sp(2)xSp(m)")


def type_IV_km(k: int, ell: int, variant: Optional[str] = None, m: Optional[int] = None) -> OrbitTypeSpec:
    """Type IV spec directly from multiplicities ``k`` (j = 0, 2) and ``ell`` (j = +-1)."""
    if k < 1 or ell < 1:
        raise ParameterError(f"Type IV needs k, ell >= 1, got k={k}, ell={ell}")
    n = 2 * k + 2 * ell + 2
    params = {"k": k, "ell": ell}
    if m is not None:
        params["m"] = m
    return _build(Family.IV, variant or f"k={k},ell={ell}", params, [-1, 0, 1, 2], math.pi / 4,
                  [ell, k, ell, k], n)


def type_IV(variant: str, m: Optional[int] = None) -> OrbitTypeSpec:
    """Type IV spec from a variant label; parametric families need ``m``."""
    variant = TYPE_IV_ALIASES.get(variant, variant)
    if variant in TYPE_IV_FIXED:
        k, ell = TYPE_IV_FIXED[variant]
        return type_IV_km(k, ell, variant)
    if m is None:
        raise ParameterError(f"Type IV variant {variant!r} needs m")
    if variant == "SO(2)xSO(m)":
        k, ell, dim = m - 2, 1, 2 * m
    elif variant == "S(U(2)xU(m))":
        k, ell, dim = 2 * m - 3, 2, 4 * m
    elif variant == "Sp(2)xSp(m)":
        k, ell, dim = 4 * m - 5, 4, 8 * m
    else:
        valid = ", ".join(list(TYPE_IV_FIXED) + list(TYPE_IV_FAMILIES))
        raise ParameterError(f"unknown Type IV variant {variant!r}; valid: {valid}")
    if k < 1:
        raise ParameterError(f"Type IV variant {variant} needs a larger m (got m={m})")
    spec = type_IV_km(k, ell, variant.replace("m", str(m)) + f",R{dim}", m)
    assert spec.n == dim
    return spec


def builtin_types(max_ell: int = 3, max_m: int = 3, max_type_iv_m: int = 4) -> list:
    """One spec per classified pair, with the parametric families sampled.

    Type II is enumerated for ``1 <= ell <= max_ell``, ``1 <= m <= max_m`` and
    the parametric Type IV families for every admissible ``m <= max_type_iv_m``.
    """
    out = [type_I(n) for n in (3, 4, 5)]
    out += [type_II(ell, m) for ell in range(1, max_ell + 1) for m in range(1, max_m + 1)]
    out += [type_III(n0) for n0 in TYPE_III_VARIANTS]
    out += [type_IV(v) for v in TYPE_IV_FIXED]
    for fam in TYPE_IV_FAMILIES:
        for m in range(2, max_type_iv_m + 1):
            try:
                out.append(type_IV(fam, m))
            except ParameterError:
                continue
    out += [type_V(n0) for n0 in TYPE_V_VARIANTS]
    return out


def sector_ids(spec: OrbitTypeSpec) -> tuple:
    """Valid sector indices: ``(0,)`` for Type I, ``J minus max J`` otherwise."""
    if spec.family is Family.I:
        return (0,)
    return tuple(spec.J[:-1])


def _check_sector(spec, i):
    if spec.family is Family.I:
        raise ParameterError("Type I has no origin case and no theta_i")
    if i not in sector_ids(spec):
        raise ParameterError(f"sector {i} invalid for {spec.label}; valid: {sector_ids(spec)}")


def sector_bounds(spec: OrbitTypeSpec, i: int) -> tuple:
    """Angles ``(phi_i, phi_{i+1})`` bounding sector ``i``."""
    if spec.family is Family.I:
        return (0.0, math.pi)
    _check_sector(spec, i)
    return (spec.phi[i], spec.phi[i + 1])


def A_two_arg(spec: OrbitTypeSpec, alpha: float, beta: float) -> float:
    """``sum_j n_j cos(alpha - phi_j) / sin(beta - phi_j)``."""
    total = 0.0
    for j in spec.J:
        s = math.sin(beta - spec.phi[j])
        if abs(s) < POLE_TOL:
            raise PoleError(f"angle {beta!r} is on the line phi_{j} = {spec.phi[j]!r}")
        total += spec.mult[j] * math.cos(alpha - spec.phi[j]) / s
    return total


def A_theta(spec: OrbitTypeSpec, theta: float) -> float:
    """Cotangent sum ``sum_j n_j cot(theta - phi_j)``."""
    return A_two_arg(spec, theta, theta)


def theta_star(spec: OrbitTypeSpec, sector: int) -> float:
    """Unique zero of ``A`` inside sector ``i``, by bisection.

    ``A`` decreases from ``+inf`` to ``-inf`` across the open interval, so a
    plain bisection on ``(phi_i + eps, phi_{i+1} - eps)`` always converges.
    """
    _check_sector(spec, sector)
    lo, hi = spec.phi[sector] + BRACKET_EPS, spec.phi[sector + 1] - BRACKET_EPS
    f_lo = A_theta(spec, lo)
    if f_lo <= 0.0 or A_theta(spec, hi) >= 0.0:
        raise ParameterError("A does not change sign on the sector")
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = A_theta(spec, mid)
        if f == 0.0 or (abs(f) <= ROOT_TOL and hi - lo < 1e-15):
            break
        if f > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * max(1.0, abs(mid)):
            break
    # Bisection ends at the float bracket; pick whichever end is closest to zero.
    best = min((lo, mid, hi), key=lambda t: abs(A_theta(spec, t)))
    return best


def closed_form_theta(spec: OrbitTypeSpec, sector: int) -> Optional[float]:
    """Closed form of ``theta_i`` where one is established, else ``None``.

    Type IV is deliberately left without a closed form.
    """
    if spec.family is Family.II and sector == 0:
        return math.atan(math.sqrt(spec.mult[0] / spec.mult[1]))
    if spec.family in (Family.III, Family.V) and sector in sector_ids(spec):
        return 0.5 * (spec.phi[sector] + spec.phi[sector + 1])
    return None


def gamma_identity(spec: OrbitTypeSpec, sector: int) -> float:
    """``sum_j n_j cot^2(theta_i - phi_j)``; equals ``gamma (n - 2)``."""
    th = theta_star(spec, sector)
    return math.fsum(spec.mult[j] / math.tan(th - spec.phi[j]) ** 2 for j in spec.J)
