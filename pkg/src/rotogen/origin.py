"""Startup at the origin.

In the frame of a cone (lower edge on the ``u``-axis) the curve leaves the
origin along the angle ``theta`` where the cotangent sum vanishes.  With
``c = cot(theta)``, ``q = du/dv = c + r`` and ``rho = v^-1 integral r``,

    v r' + (n - 2) r + gamma (n - 2) rho = F1 + ... + F5,
    v rho' - r + rho = 0.

The linear part has eigenvalues ``lam+-`` and is diagonalised by ``P``; the
diagonal ("hat") system is solved by Picard iteration of

    r^ = K_{lam+}[p^11 F],   rho^ = K_{lam-}[p^21 F],

in complex arithmetic.  The real solution is recovered as
``(r, rho) = P (r^, rho^)``; its imaginary part must vanish.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .catalog import Family, OrbitTypeSpec, sector_ids
from .errors import ConsistencyError, ParameterError, PatchTooLarge, StartupFailure
from .boundary import _effective_M
from .fixedpoint import picard, weighted_norm
from .hfield import HField, SignedH
from .integrator import CurveState
from .plane import Cone, Frame, cones, frame_lines
from .quadrature import cumulative, kernel

N_DEFAULT = 512
M_DEFAULT = 10.0
V_DEFAULT = 0.1
V_FLOOR = 1e-10
IMAG_TOL = 1e-10
DENOM_SHRINK = 0.5


def eigen_data(gamma: int, n: int):
    """``(lam_plus, lam_minus, P, P_inv)`` for ``[[n-2, gamma(n-2)], [-1, 1]]``.

    Columns of ``P`` are eigenvectors scaled to unit first component.
    """
    if n < 3 or gamma < 1:
        raise ParameterError("need n >= 3 and gamma >= 1")
    disc = n * n - 2 * (2 * gamma + 3) * n + 8 * gamma + 9
    root = cmath.sqrt(disc)
    lp = (n - 1 + root) / 2
    lm = (n - 1 - root) / 2
    g = gamma * (n - 2)
    P = np.array([[1.0, 1.0], [(lp - n + 2) / g, (lm - n + 2) / g]], dtype=complex)
    det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    Pinv = np.array([[P[1, 1], -P[0, 1]], [-P[1, 0], P[0, 0]]]) / det
    if disc >= 0:
        return lp.real, lm.real, P.real.copy(), Pinv.real.copy()
    return lp, lm, P, Pinv


@dataclass(frozen=True)
class OriginStartupProblem:
    """Local problem at the origin for one cone.

    ``branch = +1`` means ``s`` increases with ``v`` (leaving the origin);
    ``s_star`` is the arclength at the origin.
    """

    spec: OrbitTypeSpec
    cone: Cone
    h: HField
    branch: int = 1
    s_star: float = 0.0
    V: Optional[float] = None
    M: float = M_DEFAULT
    N: int = N_DEFAULT

    def __post_init__(self):
        if self.spec.family is Family.I:
            raise ParameterError("Type I has no origin case")
        if self.cone.theta is None:
            raise ParameterError("cone has no origin angle")
        if self.branch not in (-1, 1):
            raise ParameterError("branch must be +1 or -1")
        if self.N % 2 or self.N < 8:
            raise ParameterError("N must be even and at least 8")

    @classmethod
    def for_sector(cls, spec, sector, h, branch=1, s_star=0.0, **kw):
        if spec.family is Family.I:
            raise ParameterError("Type I has no origin case")
        if sector not in sector_ids(spec):
            raise ParameterError(f"sector {sector} invalid; valid: {sector_ids(spec)}")
        cone = next(c for c in cones(spec) if c.sector == sector)
        return cls(spec, cone, h, branch, s_star, **kw)

    @property
    def frame(self) -> Frame:
        return Frame(self.cone.lo, 1)

    @property
    def theta_bar(self) -> float:
        return self.cone.theta - self.cone.lo

    @property
    def gamma(self) -> int:
        return self.spec.gamma

    @property
    def signed_h(self) -> SignedH:
        return SignedH(self.h, self.branch)

    def lines(self):
        return frame_lines(self.spec, self.frame)

    def default_V(self) -> float:
        return V_DEFAULT


def f_terms(problem: OriginStartupProblem, r, rho, v, Ht):
    """The five nonlinear terms, transcribed term by term.

    ``Ht`` is the signed curvature at the nodes.  Works on scalars and on
    arrays, real or complex.
    """
    n, gam = problem.spec.n, problem.gamma
    tb = problem.theta_bar
    c = 1.0 / math.tan(tb)
    s2 = math.sin(tb) ** 2
    csc2 = 1.0 / s2
    F1 = -(n - 2) * r**2 * (r + 2 * c) * s2
    F2 = -gam * (n - 2) * r * rho * (r + 2 * c) * s2
    quad = r**2 + 2 * r * c + csc2
    S3 = 0.0
    S4 = 0.0
    for psi, m in problem.lines():
        a = math.sin(tb - psi)
        den = a - rho * math.sin(psi) * math.sin(tb)
        if np.any(np.abs(den) < DENOM_SHRINK * abs(a)):
            raise PatchTooLarge("origin patch reaches a singular line")
        S3 = S3 + m * s2 * math.cos(psi) * math.sin(psi) / (a * den)
        S4 = S4 + m * s2 * math.sin(psi) ** 2 * math.cos(tb - psi) / (a * a * den)
    F3 = -r * rho * quad * S3
    F4 = -(rho**2) * quad * S4
    F5 = (n - 1) * ((c + r) ** 2 + 1) ** 1.5 * Ht * v
    return F1, F2, F3, F4, F5


def _arclength(problem, r, V):
    q = 1.0 / math.tan(problem.theta_bar) + np.real(r)
    return problem.s_star + problem.branch * cumulative(np.sqrt(1.0 + q * q), V)


def _F(problem, r, rho, v, V):
    s = _arclength(problem, r, V)
    Ht = problem.signed_h.eval_array(s)
    return sum(f_terms(problem, r, rho, v, Ht))


def psi_hat(problem: OriginStartupProblem, hat, V: Optional[float] = None):
    """One application of the diagonalised map to ``hat = [r^, rho^]``."""
    V = problem.default_V() if V is None else V
    lp, lm, P, Pinv = eigen_data(problem.gamma, problem.spec.n)
    v = np.linspace(0.0, V, problem.N + 1)
    r = P[0, 0] * hat[0] + P[0, 1] * hat[1]
    rho = P[1, 0] * hat[0] + P[1, 1] * hat[1]
    F = _F(problem, r, rho, v, V)
    return np.array([kernel(problem.N, lp)(Pinv[0, 0] * F), kernel(problem.N, lm)(Pinv[1, 0] * F)])


def psi_direct(problem: OriginStartupProblem, r, V: Optional[float] = None):
    """The un-diagonalised map ``r -> K_{n-2}[-gamma (n-2) K_1[r] + F]``."""
    V = problem.default_V() if V is None else V
    n, gam = problem.spec.n, problem.gamma
    v = np.linspace(0.0, V, problem.N + 1)
    rho = kernel(problem.N, 1.0)(r)
    F = _F(problem, r, rho, v, V)
    return kernel(problem.N, float(n - 2))(-gam * (n - 2) * rho + F)


def psi_bar(problem: OriginStartupProblem, r):
    """Principal part ``r -> K_{n-2}[-gamma (n-2) K_1[r]]`` of the direct map."""
    n, gam = problem.spec.n, problem.gamma
    rho = kernel(problem.N, 1.0)(r)
    return kernel(problem.N, float(n - 2))(-gam * (n - 2) * rho)


@dataclass
class RRhoSeries:
    problem: object
    v: np.ndarray
    r: np.ndarray
    rho: np.ndarray
    r_hat: np.ndarray
    rho_hat: np.ndarray
    lam_plus: complex
    lam_minus: complex
    P: np.ndarray
    P_inv: np.ndarray
    V: float
    M: float
    iterations: int
    contraction: float
    norm: float
    imag_max: float
    u: np.ndarray = None
    s: np.ndarray = None
    attempts: list = field(default_factory=list)

    @property
    def diagnostics(self) -> dict:
        return {"V": self.V, "M": self.M, "iterations": self.iterations,
                "contraction": self.contraction, "norm": self.norm,
                "imag_max": self.imag_max, "halvings": len(self.attempts),
                "lambda_plus": [float(np.real(self.lam_plus)), float(np.imag(self.lam_plus))],
                "lambda_minus": [float(np.real(self.lam_minus)), float(np.imag(self.lam_minus))]}


def _hat_start(problem, V, start):
    z = np.zeros((2, problem.N + 1), dtype=complex)
    if start is None:
        return z
    lp, lm, P, Pinv = eigen_data(problem.gamma, problem.spec.n)
    v = np.linspace(0.0, V, problem.N + 1)
    r0, rho0 = start(v)
    z[0] = Pinv[0, 0] * r0 + Pinv[0, 1] * rho0
    z[1] = Pinv[1, 0] * r0 + Pinv[1, 1] * rho0
    return z


def solve_origin(problem: OriginStartupProblem, start=None) -> RRhoSeries:
    """Picard iteration of the hat map with the same ``V`` policy as at a boundary.

    ``start`` optionally maps the grid to an initial ``(r, rho)`` pair.
    """
    V = problem.V if problem.V is not None else problem.default_V()
    lp, lm, P, Pinv = eigen_data(problem.gamma, problem.spec.n)
    attempts = []
    M = None
    while V >= V_FLOOR:
        v = np.linspace(0.0, V, problem.N + 1)
        try:
            z0 = _hat_start(problem, V, start)
            if M is None:
                M = _effective_M(problem.M, psi_hat(problem, z0, V), v)
            res = picard(lambda z: psi_hat(problem, z, V), z0, v, M)
        except PatchTooLarge as exc:
            attempts.append({"V": V, "reason": str(exc)})
            V *= 0.5
            continue
        if res.converged and res.contraction < 0.5 and res.norm <= M:
            z = res.value
            r = P[0, 0] * z[0] + P[0, 1] * z[1]
            rho = P[1, 0] * z[0] + P[1, 1] * z[1]
            imag = float(max(np.max(np.abs(np.imag(r))), np.max(np.abs(np.imag(rho)))))
            if imag >= IMAG_TOL:
                raise ConsistencyError(f"origin startup produced imaginary parts up to {imag:.3g}")
            r, rho = np.real(r).astype(float), np.real(rho).astype(float)
            c = 1.0 / math.tan(problem.theta_bar)
            u = v * (c + rho)
            s = _arclength(problem, r, V)
            return RRhoSeries(problem, v, r, rho, z[0], z[1], lp, lm, P, Pinv, V, M,
                              res.iterations, res.contraction, res.norm, imag, u, s, attempts)
        attempts.append({"V": V, "reason": res.reason or f"contraction {res.contraction:.3g}"})
        V *= 0.5
    raise StartupFailure("origin startup did not contract for any admissible V", {"attempts": attempts})


def solve_origin_direct(problem: OriginStartupProblem, V: Optional[float] = None, max_iter=2000):
    """Plain Picard iteration of the un-diagonalised map (contracts when gamma <= 2)."""
    V = problem.default_V() if V is None else V
    v = np.linspace(0.0, V, problem.N + 1)
    res = picard(lambda r: psi_direct(problem, r, V), np.zeros(problem.N + 1), v, problem.M,
                 max_iter=max_iter)
    rho = kernel(problem.N, 1.0)(res.value)
    return res, rho


def reconstruct_origin(problem: OriginStartupProblem, series: RRhoSeries,
                       upto: Optional[int] = None) -> list:
    """Curve states for nodes ``0..upto`` in order of increasing ``v``."""
    k = problem.N if upto is None else upto
    c = 1.0 / math.tan(problem.theta_bar)
    v, r, u, s = series.v[:k + 1], series.r[:k + 1], series.u[:k + 1], series.s[:k + 1]
    q = c + r
    pts = problem.frame.from_frame(u, v)
    sig = problem.branch
    tau = problem.frame.angle_from_frame(np.arctan2(sig * np.ones_like(q), sig * q))
    out = [CurveState(float(s[i]), float(pts[i, 0]), float(pts[i, 1]), float(tau[i]))
           for i in range(len(v))]
    tau0 = problem.cone.theta if sig > 0 else problem.cone.theta - math.pi
    out[0] = CurveState(problem.s_star, 0.0, 0.0, tau0)
    return out


def _wrap_near(a, ref):
    return ref + math.remainder(a - ref, 2 * math.pi)


def verify_origin_approach(spec: OrbitTypeSpec, tail, theta: Optional[float] = None,
                           min_samples: int = 20) -> dict:
    """Extrapolate the polar angle of ``x`` and the (outward) tangent angle to ``|x| = 0``."""
    result = {"position_angle": math.nan, "tangent_angle": math.nan, "error": math.nan,
              "inconclusive": True}
    if len(tail) < min_samples:
        result["reason"] = "too few samples"
        return result
    pts = np.array([[p.x, p.y] for p in tail])
    r = np.hypot(pts[:, 0], pts[:, 1])
    if not np.all(np.diff(r) < 0.0):
        result["reason"] = "distance to the origin is not monotone decreasing"
        return result
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    ref = ang[-1] if theta is None else theta
    ang = np.array([_wrap_near(a, ref) for a in ang])
    # compare the outward tangent with the ray angle; a tail traversed in
    # increasing s points at the origin and is flipped
    flip = math.pi if tail[-1].s > tail[0].s else 0.0
    tan_out = np.array([_wrap_near(p.tau + flip, ref) for p in tail])
    pa = np.polyfit(r, ang, 3)[-1]
    pa2 = np.polyfit(r, ang, 2)[-1]
    ta = np.polyfit(r, tan_out, 3)[-1]
    ta2 = np.polyfit(r, tan_out, 2)[-1]
    result.update(position_angle=float(pa), tangent_angle=float(ta),
                  error=float(max(abs(pa - pa2), abs(ta - ta2))), inconclusive=False, reason="")
    return result


def wz_diagnostics(problem: OriginStartupProblem, tail):
    """``w = v/u`` and ``z = v'/u'`` in the cone frame along a tail."""
    pts = np.array([[p.x, p.y] for p in tail])
    u, v = problem.frame.to_frame(pts)
    tau = np.array([p.tau for p in tail])
    beta = problem.frame.angle_to_frame(tau)
    return v / u, np.sin(beta) / np.cos(beta)
