"""Run configuration, CSV/JSON/SVG output.

Config files are flat UTF-8 text, one ``key = value`` per line, ``#``
starts a comment.  Keys::

    type    = II ell=1 m=1          family followed by name=value params
    H       = constant:0            or polynomial:c0,c1,..  table:s,h;s,h;..
                                    expr:<expression>  or a bare expression
    init    = origin:0              or boundary:<sector>,<lower|upper>,<u0>
                                    or regular:<x>,<y>,<tau>[,<s0>]
    window  = -1, 1
    csv     = out.csv               optional, default <config stem>.csv
    json    = out.json              optional
    svg     = out.svg               optional
    rtol, atol, h_min, h_max, singular_trigger, sample_ds, max_events

Numbers in the CSV are written with 17 significant digits, which
round-trips binary64 exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import catalog
from .catalog import Family, OrbitTypeSpec
from .continuation import (MAX_EVENTS, BoundaryInit, GeneratingCurve, OriginInit, RegularInit,
                           stitch_check)
from .errors import ConfigError, HFieldError, ParameterError, RotogenError
from .hfield import ConstantH, HField, PolynomialH, TableH, parse_h
from .integrator import Tolerances, residual_profile
from .plane import sector_of

CSV_HEADER = ("s", "x", "y", "tau", "sector", "residual", "provenance")
TOLERANCE_KEYS = {"rtol": "rel", "atol": "abs", "h_min": "h_min", "h_max": "h_max",
                  "singular_trigger": "singular_trigger", "sample_ds": "sample_ds"}
VALID_KEYS = ("type", "H", "init", "window", "csv", "json", "svg", "max_events") + tuple(TOLERANCE_KEYS)
REQUIRED_KEYS = ("type", "H", "init", "window")


@dataclass
class RunConfig:
    spec: OrbitTypeSpec
    h: HField
    init: object
    window: tuple
    tolerances: Tolerances = field(default_factory=Tolerances)
    max_events: int = MAX_EVENTS
    csv: Optional[str] = None
    json: Optional[str] = None
    svg: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ConfigError("empty window", key="window")


@dataclass(frozen=True)
class CurveRecord:
    s: float
    x: float
    y: float
    tau: float
    sector: int
    residual: float
    provenance: str


# -- parsing ----------------------------------------------------------------

def _int_param(key, val):
    try:
        return int(val)
    except ValueError:
        raise ParameterError(f"parameter {key} must be an integer, got {val!r}") from None


def parse_type(tokens) -> OrbitTypeSpec:
    """``["II", "ell=1", "m=1"]`` and similar to a catalog spec."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    if not tokens:
        raise ParameterError("missing orbit type")
    fam = tokens[0].upper()
    params = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ParameterError(f"type parameter {tok!r} is not of the form name=value")
        k, v = tok.split("=", 1)
        params[k.strip()] = v.strip()
    allowed = {"I": {"n"}, "II": {"ell", "m"}, "III": {"n0"}, "V": {"n0"},
               "IV": {"variant", "m", "k", "ell"}}
    if fam not in allowed:
        raise ParameterError(f"unknown family {tokens[0]!r}; valid: I, II, III, IV, V")
    extra = set(params) - allowed[fam]
    if extra:
        raise ParameterError(f"unknown parameter(s) {sorted(extra)} for Type {fam}; "
                             f"valid: {sorted(allowed[fam])}")
    try:
        if fam == "I":
            return catalog.type_I(_int_param("n", params["n"]))
        if fam == "II":
            return catalog.type_II(_int_param("ell", params["ell"]), _int_param("m", params["m"]))
        if fam == "III":
            return catalog.type_III(_int_param("n0", params["n0"]))
        if fam == "V":
            return catalog.type_V(_int_param("n0", params["n0"]))
        m = _int_param("m", params["m"]) if "m" in params else None
        if "variant" in params:
            return catalog.type_IV(params["variant"], m)
        return catalog.type_IV_km(_int_param("k", params["k"]), _int_param("ell", params["ell"]), m=m)
    except KeyError as exc:
        raise ParameterError(f"Type {fam} needs parameter {exc.args[0]}") from None


def _floats(text, key, line):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}", line, key) from None


def parse_hfield(text: str, line=None) -> HField:
    """H with an optional ``kind:`` prefix; anything else is an expression."""
    kind, sep, payload = text.partition(":")
    kind = kind.strip()
    if sep and kind == "constant":
        vals = _floats(payload, "H", line)
        if len(vals) != 1:
            raise ConfigError("constant needs one value", line, "H")
        return ConstantH(vals[0])
    if sep and kind == "polynomial":
        return PolynomialH(tuple(_floats(payload, "H", line)))
    if sep and kind == "table":
        rows = [_floats(r, "H", line) for r in payload.split(";") if r.strip()]
        if any(len(r) != 2 for r in rows):
            raise ConfigError("table rows must be s,H pairs separated by ';'", line, "H")
        return TableH(tuple(r[0] for r in rows), tuple(r[1] for r in rows))
    if sep and kind in ("expr", "expression"):
        return parse_h(payload.strip())
    return parse_h(text.strip())


def parse_init(text: str, line=None):
    kind, sep, payload = text.partition(":")
    kind = kind.strip()
    parts = [p.strip() for p in payload.split(",")] if sep else []
    try:
        if kind == "origin" and len(parts) == 1:
            return OriginInit(int(parts[0]))
        if kind == "boundary" and len(parts) == 3:
            return BoundaryInit(int(parts[0]), parts[1], float(parts[2]))
        if kind == "regular" and len(parts) in (3, 4):
            return RegularInit(*[float(p) for p in parts])
    except ValueError:
        pass
    raise ConfigError("init must be origin:<sector>, boundary:<sector>,<side>,<u0> "
                      "or regular:<x>,<y>,<tau>[,<s0>]", line, "init")


def parse_config_text(text: str, source: Optional[str] = None) -> RunConfig:
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key = value, got {body!r}", lineno)
        key, val = (t.strip() for t in body.split("=", 1))
        if key not in VALID_KEYS:
            raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(VALID_KEYS)}", lineno, key)
        if key in raw:
            raise ConfigError("duplicate key", lineno, key)
        if not val:
            raise ConfigError("empty value", lineno, key)
        raw[key] = val
        lines[key] = lineno
    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    try:
        spec = parse_type(raw["type"])
    except ParameterError as exc:
        raise ConfigError(str(exc), lines["type"], "type") from None
    try:
        h = parse_hfield(raw["H"], lines["H"])
    except HFieldError as exc:
        raise ConfigError(str(exc), lines["H"], "H") from None
    init = parse_init(raw["init"], lines["init"])
    window = _floats(raw["window"], "window", lines["window"])
    if len(window) != 2:
        raise ConfigError("window needs two numbers", lines["window"], "window")
    if not window[0] < window[1]:
        raise ConfigError("empty window", lines["window"], "window")
    tol_kw = {}
    for key, attr in TOLERANCE_KEYS.items():
        if key in raw:
            vals = _floats(raw[key], key, lines[key])
            if len(vals) != 1:
                raise ConfigError("expected one number", lines[key], key)
            tol_kw[attr] = vals[0]
    try:
        tol = Tolerances(**tol_kw)
    except ValueError as exc:
        raise ConfigError(str(exc), key="tolerances") from None
    max_events = MAX_EVENTS
    if "max_events" in raw:
        try:
            max_events = int(raw["max_events"])
        except ValueError:
            raise ConfigError("expected an integer", lines["max_events"], "max_events") from None
    return RunConfig(spec, h, init, tuple(window), tol, max_events,
                     raw.get("csv"), raw.get("json"), raw.get("svg"), source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text, str(path))


# -- records and CSV ----------------------------------------------------------

def _provenance_code(seg) -> str:
    if seg.provenance == "boundary_startup":
        return f"boundary_startup:{seg.info.get('j')}"
    if seg.provenance == "origin_startup":
        return f"origin_startup:{seg.info.get('cone')}"
    return "regular"


def curve_records(curve: GeneratingCurve) -> list:
    """One record per emitted sample, in increasing ``s``."""
    spec, h = curve.spec, curve.h
    out = []
    last_s = -math.inf
    for seg in curve.segments:
        if len(seg.samples) >= 5:
            res, _ = residual_profile(spec, h, seg.samples)
        else:
            res = np.full(len(seg.samples), np.nan)
        code = _provenance_code(seg)
        for p, r in zip(seg.samples, res):
            if p.s <= last_s:
                continue
            last_s = p.s
            sec = sector_of(spec, (p.x, p.y))
            out.append(CurveRecord(p.s, p.x, p.y, p.tau, -1 if sec is None else int(sec), float(r), code))
    return out


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([_fmt(r.s), _fmt(r.x), _fmt(r.y), _fmt(r.tau), str(r.sector),
                        _fmt(r.residual), r.provenance])


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {rows[0]!r}")
    return [CurveRecord(float(a), float(b), float(c), float(d), int(e), float(f), g)
            for a, b, c, d, e, f, g in rows[1:]]


# -- JSON -------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj if obj is None or isinstance(obj, str) else str(obj)


def theta_table(spec: OrbitTypeSpec) -> list:
    if spec.family is Family.I:
        return []
    rows = []
    for i in catalog.sector_ids(spec):
        lo, hi = catalog.sector_bounds(spec, i)
        rows.append({"sector": i, "lo": lo, "hi": hi, "theta": catalog.theta_star(spec, i),
                     "closed_form": catalog.closed_form_theta(spec, i),
                     "gamma_identity": catalog.gamma_identity(spec, i)})
    return rows


def spec_dict(spec: OrbitTypeSpec) -> dict:
    return {"family": spec.family.value, "variant": spec.variant, "params": dict(spec.params),
            "n": spec.n, "gamma": spec.gamma, "phi": list(spec.angles), "mult": list(spec.mults),
            "label": spec.label}


def error_dict(exc: BaseException) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "key", "offset", "diagnostics"):
        if getattr(exc, attr, None) is not None:
            out[attr] = getattr(exc, attr)
    return out


def diagnostics(config: RunConfig, curve: Optional[GeneratingCurve], error=None) -> dict:
    init = config.init
    out = {
        "type": spec_dict(config.spec),
        "H": config.h.to_text(),
        "init": {"kind": type(init).__name__.replace("Init", "").lower(), **init.__dict__},
        "window": list(config.window),
        "theta_table": theta_table(config.spec),
        "error": None if error is None else error_dict(error),
    }
    if curve is not None:
        st = stitch_check(curve)
        out["events"] = curve.events
        out["startups"] = [{"kind": k, **d} for k, d in curve.startups]
        out["contraction_factors"] = [d["contraction"] for _, d in curve.startups]
        out["lambdas"] = [[d["lambda_plus"], d["lambda_minus"]] for k, d in curve.startups if k == "origin"]
        out["stitch"] = {k: st[k] for k in ("max_gap", "max_residual", "segment_residuals", "events", "ok")}
        out["segments"] = [{"provenance": s.provenance, "samples": len(s.samples),
                            "s": [s.samples[0].s, s.samples[-1].s] if s.samples else None}
                           for s in curve.segments]
        out["total_span"] = list(curve.total_span)
    return _clean(out)


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1, allow_nan=False)
        fh.write("\n")


# -- SVG --------------------------------------------------------------------

SVG_SIZE = 800
SVG_MARGIN = 0.05


def svg_points(records, size=SVG_SIZE, margin=SVG_MARGIN):
    """Polyline vertices in viewport coordinates (``y`` up) and ``(cx, cy, scale)``.

    The origin is included in the bounding box so its marker is always visible.
    """
    xs = np.array([r.x for r in records] + [0.0])
    ys = np.array([r.y for r in records] + [0.0])
    span = max(np.ptp(xs), np.ptp(ys), 1e-12)
    scale = size * (1.0 - 2.0 * margin) / span
    cx, cy = 0.5 * (xs.max() + xs.min()), 0.5 * (ys.max() + ys.min())
    return [(size / 2 + scale * (r.x - cx), size / 2 - scale * (r.y - cy)) for r in records], (cx, cy, scale)


def write_svg(path, records, spec: OrbitTypeSpec) -> None:
    pts, (cx, cy, scale) = svg_points(records)
    c = SVG_SIZE / 2
    ox, oy = c - scale * cx, c + scale * cy
    reach = 2.0 * SVG_SIZE
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
             f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
             f'<rect width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>']
    for phi in spec.angles:
        for a in (phi, phi + math.pi):
            x2, y2 = ox + reach * math.cos(a), oy - reach * math.sin(a)
            parts.append(f'<line x1="{ox:.3f}" y1="{oy:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                         'stroke="gray" stroke-dasharray="6,4"/>')
    parts.append(f'<circle cx="{ox:.3f}" cy="{oy:.3f}" r="4" fill="black"/>')
    poly = " ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
    parts.append(f'<polyline fill="none" stroke="navy" stroke-width="1.5" points="{poly}"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def read_svg_points(path) -> list:
    text = Path(path).read_text(encoding="utf-8")
    start = text.index('points="') + len('points="')
    body = text[start:text.index('"', start)]
    return [tuple(float(v) for v in p.split(",")) for p in body.split()]


__all__ = ["CSV_HEADER", "CurveRecord", "RunConfig", "curve_records", "diagnostics", "load_config",
           "parse_config_text", "parse_hfield", "parse_init", "parse_type", "read_csv", "read_svg_points",
           "svg_points", "theta_table", "write_csv", "write_json", "write_svg", "RotogenError"]
