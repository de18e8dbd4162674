"""Startup at a boundary line of the singular set (perpendicular contact).

In a frame where the contact line is the ``u``-axis, the contact point is
``(u0, 0)`` and the curve lies in ``v > 0``, write the curve as a graph
``u = u(v)`` with ``q = du/dv`` and ``q(0) = 0``.  Multiplying the equation
by ``v^(n_c)`` and integrating gives the fixed-point problem

    q = K_{n_c}[ -n_c q^3
                 + v (1 + q^2) sum_{j != c} n_j (q cos psi_j + sin psi_j)
                                            / (u sin psi_j - v cos psi_j)
                 + v (n - 1) (1 + q^2)^(3/2) H~ ]

with ``u = u0 + integral q`` and ``K`` from :mod:`rotogen.quadrature`.  The
branch sign ``sigma = +1`` means ``v`` increases with ``s``.  ``H~`` is
``sigma * det * H(s(v))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .catalog import Family, OrbitTypeSpec, sector_ids
from .errors import ParameterError, PatchTooLarge, StartupFailure
from .fixedpoint import picard, weighted_norm
from .hfield import HField, SignedH
from .integrator import CurveState
from .plane import Frame, frame_lines
from .quadrature import cumulative, kernel

N_DEFAULT = 512
M_DEFAULT = 10.0
V_FLOOR = 1e-10
DENOM_SHRINK = 0.5


@dataclass(frozen=True)
class BoundaryStartupProblem:
    """Local problem at a contact point.

    ``frame`` places the contact line on the ``u``-axis with the curve in
    ``v > 0``; ``contact_j`` is the index of that line.  ``branch`` is the
    sign of ``dv/ds`` and ``s_star`` the arclength at the contact.
    """

    spec: OrbitTypeSpec
    frame: Frame
    contact_j: int
    u0: float
    h: HField
    branch: int = 1
    s_star: float = 0.0
    V: Optional[float] = None
    M: float = M_DEFAULT
    N: int = N_DEFAULT
    sector: Optional[int] = None
    side: str = "lower"

    def __post_init__(self):
        if self.branch not in (-1, 1):
            raise ParameterError("branch must be +1 or -1")
        if self.spec.family is not Family.I and self.u0 == 0.0:
            raise ParameterError("contact point must not be the origin")
        if self.N % 2 or self.N < 8:
            raise ParameterError("N must be even and at least 8")

    @classmethod
    def for_sector(cls, spec, sector, side, u0, h, branch=1, s_star=0.0, **kw):
        """Contact on the lower (``phi_i``) or upper (``phi_{i+1}``) edge of a sector."""
        if spec.family is Family.I:
            if sector != 0 or side != "lower":
                raise ParameterError("Type I has a single sector 0 with its lower edge")
            return cls(spec, Frame(0.0, 1), 0, float(u0), h, branch, s_star, sector=0, side=side, **kw)
        if sector not in sector_ids(spec):
            raise ParameterError(f"sector {sector} invalid; valid: {sector_ids(spec)}")
        if u0 <= 0.0:
            raise ParameterError("u0 must be positive for Types II-V")
        if side == "lower":
            frame, j = Frame(spec.phi[sector], 1), sector
        elif side == "upper":
            frame, j = Frame(spec.phi[sector + 1], -1), sector + 1
        else:
            raise ParameterError(f"side must be 'lower' or 'upper', got {side!r}")
        return cls(spec, frame, j, float(u0), h, branch, s_star, sector=sector, side=side, **kw)

    @property
    def n_c(self) -> int:
        return self.spec.mult[self.contact_j]

    @property
    def signed_h(self) -> SignedH:
        return SignedH(self.h, self.branch * self.frame.det)

    def other_lines(self):
        return [(psi, m) for j, (psi, m) in zip(self.spec.J, frame_lines(self.spec, self.frame))
                if j != self.contact_j]

    def default_V(self) -> float:
        others = self.other_lines()
        if not others:
            return 0.1
        gap = min(abs(math.sin(psi)) for psi, _ in others)
        return 0.1 * min(abs(self.u0) * gap, 1.0)


@dataclass
class StartupSeries:
    """Converged local solution on the grid ``v_k = k V / N``."""

    problem: object
    v: np.ndarray
    q: np.ndarray
    V: float
    M: float
    iterations: int
    contraction: float
    norm: float
    u: np.ndarray = field(default=None)
    s: np.ndarray = field(default=None)
    attempts: list = field(default_factory=list)

    @property
    def diagnostics(self) -> dict:
        return {"V": self.V, "M": self.M, "iterations": self.iterations,
                "contraction": self.contraction, "norm": self.norm,
                "halvings": len(self.attempts)}


def _state_arrays(problem, q, V):
    v = np.linspace(0.0, V, problem.N + 1)
    u = problem.u0 + cumulative(q, V)
    w = np.sqrt(1.0 + q * q)
    s = problem.s_star + problem.branch * cumulative(w, V)
    return v, u, s


def phi_map(problem: BoundaryStartupProblem, q, V: Optional[float] = None):
    """One application of the fixed-point map on the grid of radius ``V``."""
    V = problem.default_V() if V is None else V
    q = np.asarray(q, dtype=float)
    v, u, s = _state_arrays(problem, q, V)
    w2 = 1.0 + q * q
    nc = problem.n_c
    g = -nc * q**3
    lines = problem.other_lines()
    if lines:
        acc = np.zeros_like(q)
        for psi, m in lines:
            sp, cp = math.sin(psi), math.cos(psi)
            den = u * sp - v * cp
            if np.any(np.abs(den) < DENOM_SHRINK * abs(problem.u0 * sp)):
                raise PatchTooLarge(f"patch V={V:g} approaches the line at frame angle {psi:g}")
            acc += m * (q * cp + sp) / den
        g = g + v * w2 * acc
    Ht = problem.signed_h.eval_array(s)
    g = g + v * (problem.spec.n - 1) * w2**1.5 * Ht
    return kernel(problem.N, float(nc))(g)


def _effective_M(M, first, v):
    """``M`` must dominate the solution; grow it past the first iterate if needed."""
    return max(M, 4.0 * weighted_norm(first, v))


def solve_boundary(problem: BoundaryStartupProblem, q0=None) -> StartupSeries:
    """Picard iteration with automatic patch shrinking.

    ``V`` starts at ``problem.V`` (or the default) and is halved whenever the
    iteration does not contract with factor below 0.5, leaves the ball of
    radius ``M`` or the patch reaches another line.  ``M`` is raised to four
    times the norm of the first iterate when that is larger.
    """
    V = problem.V if problem.V is not None else problem.default_V()
    attempts = []
    M = None
    while V >= V_FLOOR:
        v = np.linspace(0.0, V, problem.N + 1)
        start = np.zeros(problem.N + 1) if q0 is None else np.asarray(q0(v), dtype=float)
        try:
            if M is None:
                M = _effective_M(problem.M, phi_map(problem, start, V), v)
            res = picard(lambda q: phi_map(problem, q, V), start, v, M)
        except PatchTooLarge as exc:
            attempts.append({"V": V, "reason": str(exc)})
            V *= 0.5
            continue
        if res.converged and res.contraction < 0.5 and res.norm <= M:
            q = res.value
            _, u, s = _state_arrays(problem, q, V)
            return StartupSeries(problem, v, q, V, M, res.iterations, res.contraction,
                                 res.norm, u, s, attempts)
        attempts.append({"V": V, "reason": res.reason or f"contraction {res.contraction:.3g}"})
        V *= 0.5
    raise StartupFailure("boundary startup did not contract for any admissible V",
                         {"attempts": attempts, "u0": problem.u0})


def contraction_estimate(problem: BoundaryStartupProblem, V: float) -> float:
    """Empirical contraction factor of the map at a fixed patch radius."""
    v = np.linspace(0.0, V, problem.N + 1)
    res = picard(lambda q: phi_map(problem, q, V), np.zeros(problem.N + 1), v, problem.M)
    return res.contraction


def reconstruct_boundary(problem: BoundaryStartupProblem, series: StartupSeries,
                         upto: Optional[int] = None) -> list:
    """Curve states for nodes ``0..upto`` (default: all), in order of increasing ``v``."""
    k = problem.N if upto is None else upto
    v, q, u, s = series.v[:k + 1], series.q[:k + 1], series.u[:k + 1], series.s[:k + 1]
    pts = problem.frame.from_frame(u, v)
    sig = problem.branch
    beta = np.arctan2(sig * np.ones_like(q), sig * q)
    tau = problem.frame.angle_from_frame(beta)
    out = []
    for i in range(len(v)):
        out.append(CurveState(float(s[i]), float(pts[i, 0]), float(pts[i, 1]), float(tau[i])))
    # the contact point and the perpendicular tangent are set exactly
    c, sn = math.cos(problem.frame.offset), math.sin(problem.frame.offset)
    tau0 = problem.frame.offset + problem.frame.det * sig * math.pi / 2
    out[0] = CurveState(problem.s_star, problem.u0 * c, problem.u0 * sn, tau0)
    return out


def verify_perpendicular_approach(spec: OrbitTypeSpec, tail, j: Optional[int] = None,
                                  min_samples: int = 20) -> dict:
    """Extrapolate ``e(phi_j) . x'`` to zero distance from line ``j``.

    Returns a dict with ``limit``, ``error``, ``angle_limit`` (the
    extrapolated tangent angle) and ``inconclusive``.  Tails that do not
    approach a single line monotonically, or that head for the origin,
    are inconclusive.
    """
    pts = np.array([[p.x, p.y] for p in tail])
    tau = np.array([p.tau for p in tail])
    result = {"limit": math.nan, "error": math.nan, "angle_limit": math.nan,
              "inconclusive": True, "j": j}
    if len(tail) < min_samples:
        result["reason"] = "too few samples"
        return result
    if j is None:
        last = pts[-1]
        j = min(spec.J, key=lambda k: abs(-math.sin(spec.phi[k]) * last[0] + math.cos(spec.phi[k]) * last[1]))
        result["j"] = j
    phi = spec.phi[j]
    d = np.abs(-math.sin(phi) * pts[:, 0] + math.cos(phi) * pts[:, 1])
    if not np.all(np.diff(d) < 0.0):
        result["reason"] = "distance to the line is not monotone decreasing"
        return result
    r = np.hypot(pts[:, 0], pts[:, 1])
    if spec.family is not Family.I and d[-1] > 0.05 * r[-1]:
        result["reason"] = "tail approaches the origin, not a boundary point"
        return result
    c = np.cos(tau - phi)
    lim2 = np.polyfit(d, c, 3)[-1]
    lim1 = np.polyfit(d, c, 2)[-1]
    # limit of the tangent angle on the same side as the tail
    s_sign = np.sign(np.sin(tau[-1] - phi)) or 1.0
    angle = phi + s_sign * math.acos(max(-1.0, min(1.0, lim2)))
    result.update(limit=float(lim2), error=float(abs(lim2 - lim1)), angle_limit=float(angle),
                  inconclusive=False, reason="")
    return result
