"""Global generating curves: regular integration stitched through ``S``.

When a regular integration reaches the trigger zone of a boundary line, the
contact point is refined so that the local solution through it matches the
last regular state, and the curve is continued on the other side of the line
with the same tangent (the far half is the mirror of a local solution in the
reflected frame).  At the origin the curve continues into the antipodal cone,
again with a continuous tangent.  Startup patches hand over to the regular
integrator at half their radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .boundary import BoundaryStartupProblem, reconstruct_boundary, solve_boundary, verify_perpendicular_approach
from .catalog import Family, OrbitTypeSpec
from .errors import ParameterError, RotogenError, StartupFailure, StepFailure
from .hfield import HField
from .integrator import CurveState, Tolerances, integrate, residual
from .origin import OriginStartupProblem, reconstruct_origin, solve_origin, verify_origin_approach
from .plane import Frame, antipodal_cone, cone_of, cones, sector_of

MAX_EVENTS = 10_000
MATCH_ITER = 12
ORIGIN_ALIGN = 0.2


@dataclass(frozen=True)
class RegularInit:
    x: float
    y: float
    tau: float
    s: float = 0.0


@dataclass(frozen=True)
class BoundaryInit:
    sector: int
    side: str
    u0: float


@dataclass(frozen=True)
class OriginInit:
    sector: int


Init = Union[RegularInit, BoundaryInit, OriginInit]


@dataclass
class Segment:
    provenance: str  # regular | boundary_startup | origin_startup
    samples: list
    info: dict = field(default_factory=dict)


@dataclass
class GeneratingCurve:
    spec: OrbitTypeSpec
    h: HField
    window: tuple
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    error: Optional[RotogenError] = None
    startups: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None

    def samples(self):
        """All samples in increasing ``s`` with their segment provenance."""
        out = []
        for seg in self.segments:
            for p in seg.samples:
                if out and p.s <= out[-1][0].s:
                    continue
                out.append((p, seg.provenance))
        return out

    @property
    def states(self) -> list:
        return [p for p, _ in self.samples()]

    @property
    def total_span(self) -> tuple:
        st = self.states
        return (st[0].s, st[-1].s) if st else (math.nan, math.nan)


def _cut(samples, s_end, dirn):
    """Drop samples past ``s_end`` and close the list with an interpolated state."""
    keep = [p for p in samples if (s_end - p.s) * dirn >= 0.0]
    if len(keep) == len(samples) or not keep:
        return keep
    if keep[-1].s == s_end:
        return keep
    lo = max(0, len(keep) - 2)
    pts = samples[lo:min(len(samples), len(keep) + 2)]
    ss = np.array([p.s for p in pts])
    deg = len(pts) - 1
    vals = []
    for attr in ("x", "y", "tau"):
        coeff = np.polyfit(ss - s_end, np.array([getattr(p, attr) for p in pts]), deg)
        vals.append(float(coeff[-1]))
    return keep + [CurveState(float(s_end), *vals)]


def _past(s, s_end, dirn):
    return (s - s_end) * dirn >= 0.0


def _approach_tail(samples, key, count=40):
    """Longest suffix (at most ``count``) on which ``key`` decreases strictly."""
    vals = [key(p) for p in samples]
    k = len(vals) - 1
    while k > 0 and vals[k - 1] > vals[k] and len(vals) - k < count:
        k -= 1
    return samples[k:]


class _Marcher:
    def __init__(self, spec, h, tol, max_events):
        self.spec = spec
        self.h = h
        self.tol = tol
        self.max_events = max_events
        self.events = []
        self.startups = []
        self.table = cones(spec) if spec.family is not Family.I else None

    # -- boundary -------------------------------------------------------
    def cross_boundary(self, ev, dirn, tail):
        spec, h = self.spec, self.h
        st = ev.state
        j = ev.j
        phi = spec.phi[j]
        b = -math.sin(phi) * st.x + math.cos(phi) * st.y
        det_a = 1 if b > 0.0 else -1
        frame_a = Frame(phi, det_a)
        u_t, v_t = frame_a.to_frame(np.array([st.x, st.y]))
        u_t, v_t = float(u_t), float(v_t)
        sig_a = -int(dirn)
        u0 = float(math.cos(phi) * ev.x_est[0] + math.sin(phi) * ev.x_est[1])
        s_star = float(ev.s_est)
        half = None
        for _ in range(MATCH_ITER):
            prob = BoundaryStartupProblem(spec, frame_a, j, u0, h, sig_a, s_star, V=2.0 * v_t)
            ser = solve_boundary(prob)
            if ser.V != 2.0 * v_t:
                raise StartupFailure("approach patch had to shrink below the trigger distance",
                                     {"V": ser.V, "v_t": v_t})
            half = prob.N // 2
            du = u_t - ser.u[half]
            ds = st.s - ser.s[half]
            u0 += du
            s_star += ds
            if abs(du) <= 1e-15 * (1.0 + abs(u0)) and abs(ds) <= 1e-15 * (1.0 + abs(s_star)):
                break
        prob_a = BoundaryStartupProblem(spec, frame_a, j, u0, h, sig_a, s_star, V=2.0 * v_t)
        ser_a = solve_boundary(prob_a)
        approach = reconstruct_boundary(prob_a, ser_a, upto=prob_a.N // 2)[::-1]

        prob_f = BoundaryStartupProblem(spec, Frame(phi, -det_a), j, u0, h, int(dirn), s_star)
        ser_f = solve_boundary(prob_f)
        far = reconstruct_boundary(prob_f, ser_f, upto=prob_f.N // 2)

        perp = verify_perpendicular_approach(spec, _approach_tail(tail + approach[:-1],
                                                                  lambda p: abs(-math.sin(phi) * p.x + math.cos(phi) * p.y)), j)
        event = {
            "kind": "boundary", "j": j, "s": float(s_star),
            "x": [approach[-1].x, approach[-1].y], "u0": float(u0), "direction": int(dirn),
            "junction_gap": math.hypot(approach[0].x - st.x, approach[0].y - st.y),
            "tangent_gap": abs(math.remainder(approach[0].tau - st.tau, 2 * math.pi)),
            "perpendicular_limit": perp["limit"], "perpendicular_error": perp["error"],
            "approach": ser_a.diagnostics, "far": ser_f.diagnostics,
        }
        self.startups += [("boundary", ser_a.diagnostics), ("boundary", ser_f.diagnostics)]
        info = {"j": j, "frame": [phi, det_a], "u0": u0}
        segs = [Segment("boundary_startup", approach, dict(info, half="approach")),
                Segment("boundary_startup", far, dict(info, half="far", frame=[phi, -det_a]))]
        return segs, event

    # -- origin ---------------------------------------------------------
    def cross_origin(self, ev, dirn, tail):
        spec, h = self.spec, self.h
        st = ev.state
        cone = cone_of(spec, (st.x, st.y), self.table)
        r_t = math.hypot(st.x, st.y)
        inward = -(math.cos(st.tau) * st.x + math.sin(st.tau) * st.y) / r_t
        ang = math.atan2(st.y, st.x)
        if (cone is None or inward < math.cos(ORIGIN_ALIGN)
                or abs(math.remainder(ang - cone.theta, 2 * math.pi)) > ORIGIN_ALIGN):
            raise StartupFailure("curve passes close to the origin without approaching it along an "
                                 "origin angle; the near-origin passage is not resolved",
                                 {"s": st.s, "x": [st.x, st.y], "tau": st.tau})
        sig_a = -int(dirn)
        frame = Frame(cone.lo, 1)
        _, v_t = frame.to_frame(np.array([st.x, st.y]))
        v_t = float(v_t)
        s_star = st.s + dirn * r_t
        for _ in range(4):
            prob_a = OriginStartupProblem(spec, cone, h, sig_a, s_star, V=2.0 * v_t)
            ser_a = solve_origin(prob_a)
            if ser_a.V != 2.0 * v_t:
                raise StartupFailure("origin approach patch had to shrink", {"V": ser_a.V, "v_t": v_t})
            s_star += st.s - ser_a.s[prob_a.N // 2]
        prob_a = OriginStartupProblem(spec, cone, h, sig_a, s_star, V=2.0 * v_t)
        ser_a = solve_origin(prob_a)
        approach = reconstruct_origin(prob_a, ser_a, upto=prob_a.N // 2)[::-1]
        far_cone = antipodal_cone(self.table, cone)
        prob_f = OriginStartupProblem(spec, far_cone, h, int(dirn), s_star)
        ser_f = solve_origin(prob_f)
        far = reconstruct_origin(prob_f, ser_f, upto=prob_f.N // 2)
        check = verify_origin_approach(spec, _approach_tail(tail + approach[:-1],
                                                            lambda p: math.hypot(p.x, p.y)), cone.theta)
        event = {
            "kind": "origin", "cone": cone.index, "theta": cone.theta, "s": float(s_star),
            "direction": int(dirn), "far_cone": far_cone.index, "antipodal": True,
            "junction_gap": math.hypot(approach[0].x - st.x, approach[0].y - st.y),
            "tangent_gap": abs(math.remainder(approach[0].tau - st.tau, 2 * math.pi)),
            "position_angle": check["position_angle"], "tangent_angle": check["tangent_angle"],
            "approach": ser_a.diagnostics, "far": ser_f.diagnostics,
        }
        self.startups += [("origin", ser_a.diagnostics), ("origin", ser_f.diagnostics)]
        segs = [Segment("origin_startup", approach, {"cone": cone.index, "half": "approach"}),
                Segment("origin_startup", far, {"cone": far_cone.index, "half": "far", "antipodal": True})]
        return segs, event

    # -- main loop ------------------------------------------------------
    def march(self, state, s_end, dirn):
        segs = []
        error = None
        while not _past(state.s, s_end, dirn):
            samples, ev = integrate(self.spec, self.h, state, s_end, self.tol)
            segs.append(Segment("regular", samples))
            if ev.kind == "reached_end":
                break
            if ev.kind == "step_failure":
                error = StepFailure(f"regular integration failed at s={ev.state.s!r}: {ev.message}")
                break
            if len(self.events) >= self.max_events:
                error = StepFailure(f"event cap of {self.max_events} reached at s={ev.state.s!r}")
                break
            try:
                if ev.kind == "boundary_approach":
                    new, event = self.cross_boundary(ev, dirn, samples)
                else:
                    new, event = self.cross_origin(ev, dirn, samples)
            except RotogenError as exc:
                error = exc
                break
            self.events.append(event)
            for seg in new:
                cut = _cut(seg.samples, s_end, dirn)
                if cut:
                    segs.append(Segment(seg.provenance, cut, seg.info))
                if len(cut) < len(seg.samples) or (cut and cut[-1].s == s_end):
                    return segs, error
            state = segs[-1].samples[-1]
        return segs, error


def _startup_segments(spec, h, init, tol):
    """Forward and backward startup halves for a singular initial condition."""
    if isinstance(init, BoundaryInit):
        fwd = BoundaryStartupProblem.for_sector(spec, init.sector, init.side, init.u0, h, 1, 0.0)
        f = fwd.frame
        bwd = BoundaryStartupProblem(spec, Frame(f.offset, -f.det), fwd.contact_j, fwd.u0, h, -1, 0.0,
                                     sector=init.sector, side=init.side)
        out = []
        for prob in (fwd, bwd):
            ser = solve_boundary(prob)
            out.append((reconstruct_boundary(prob, ser, upto=prob.N // 2), ser.diagnostics,
                        {"j": prob.contact_j, "frame": [prob.frame.offset, prob.frame.det], "u0": prob.u0}))
        kind = "boundary_startup"
    else:
        fwd = OriginStartupProblem.for_sector(spec, init.sector, h, 1, 0.0)
        table = cones(spec)
        bwd = OriginStartupProblem(spec, antipodal_cone(table, fwd.cone), h, -1, 0.0)
        out = []
        for prob in (fwd, bwd):
            ser = solve_origin(prob)
            out.append((reconstruct_origin(prob, ser, upto=prob.N // 2), ser.diagnostics,
                        {"cone": prob.cone.index, "antipodal": prob.cone.antipodal}))
        kind = "origin_startup"
    return kind, out


def solve_global(spec: OrbitTypeSpec, h: HField, init: Init, window, tol: Tolerances = Tolerances(),
                 max_events: int = MAX_EVENTS) -> GeneratingCurve:
    """Continue the solution through the singular set over ``window``.

    Errors during continuation do not raise; they are stored in
    ``curve.error`` alongside the partial curve.
    """
    s_min, s_max = float(window[0]), float(window[1])
    if not s_min < s_max:
        raise ParameterError("empty window")
    curve = GeneratingCurve(spec, h, (s_min, s_max))
    marcher = _Marcher(spec, h, tol, max_events)
    back, fwd = [], []
    err_b = err_f = None

    if isinstance(init, RegularInit):
        if not s_min <= init.s <= s_max:
            raise ParameterError("window must contain the initial arclength")
        start = CurveState(float(init.s), float(init.x), float(init.y), float(init.tau))
        if sector_of(spec, (start.x, start.y)) is None and cone_of(spec, (start.x, start.y),
                                                                   marcher.table if marcher.table else None) is None:
            raise ParameterError("initial point lies on the singular set")
        if start.s < s_max:
            fwd, err_f = marcher.march(start, s_max, 1.0)
        if start.s > s_min:
            back, err_b = marcher.march(start, s_min, -1.0)
        if not fwd:
            fwd = [Segment("regular", [start])]
    elif isinstance(init, (BoundaryInit, OriginInit)):
        if spec.family is Family.I and isinstance(init, OriginInit):
            raise ParameterError("Type I has no origin case")
        if not s_min <= 0.0 <= s_max:
            raise ParameterError("window must contain s = 0 for singular initial data")
        kind, halves = _startup_segments(spec, h, init, tol)
        (f_samples, f_diag, f_info), (b_samples, b_diag, b_info) = halves
        marcher.startups += [(kind.split("_")[0], f_diag), (kind.split("_")[0], b_diag)]
        marcher.events.append({"kind": "initial_" + kind.split("_")[0], "s": 0.0,
                               "x": [f_samples[0].x, f_samples[0].y], "forward": f_diag,
                               "backward": b_diag})
        for samples, info, s_end, dirn, dest in ((f_samples, f_info, s_max, 1.0, fwd),
                                                  (b_samples, b_info, s_min, -1.0, back)):
            cut = _cut(samples, s_end, dirn)
            dest.append(Segment(kind, cut, info))
            if len(cut) == len(samples) and cut[-1].s != s_end:
                more, err = marcher.march(cut[-1], s_end, dirn)
                dest.extend(more)
                if dirn > 0:
                    err_f = err
                else:
                    err_b = err
    else:
        raise ParameterError(f"unknown initial condition {init!r}")

    for seg in reversed(back):
        curve.segments.append(Segment(seg.provenance, seg.samples[::-1], seg.info))
    curve.segments.extend(fwd)
    curve.events = sorted(marcher.events, key=lambda e: e["s"])
    curve.startups = marcher.startups
    curve.error = err_f or err_b
    return curve


def stitch_check(curve: GeneratingCurve, threshold: float = 1e-6, exclusion: float = 1e-3) -> dict:
    """Junction gaps between consecutive segments and per-segment residuals."""
    junctions = []
    segs = [s for s in curve.segments if s.samples]
    for a, b in zip(segs, segs[1:]):
        p, q = a.samples[-1], b.samples[0]
        junctions.append({
            "s": p.s, "s_gap": abs(q.s - p.s),
            "position_gap": math.hypot(q.x - p.x, q.y - p.y),
            "tangent_gap": abs(math.remainder(q.tau - p.tau, 2 * math.pi)),
            "from": a.provenance, "to": b.provenance,
        })
    residuals = []
    for seg in segs:
        if len(seg.samples) >= 5:
            residuals.append(residual(curve.spec, curve.h, seg.samples, exclusion))
        else:
            residuals.append(0.0)
    max_gap = max([max(j["position_gap"], j["tangent_gap"]) for j in junctions], default=0.0)
    kinds = {}
    for e in curve.events:
        kinds[e["kind"]] = kinds.get(e["kind"], 0) + 1
    return {"junctions": junctions, "max_gap": max_gap, "segment_residuals": residuals,
            "max_residual": max(residuals, default=0.0), "events": kinds,
            "ok": max_gap < threshold, "flagged": max_gap >= threshold}
