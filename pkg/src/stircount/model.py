"""System definitions: Hamiltonians, bond currents, and driving protocols.

The 3-site ring has basis order (|0>, |1>, |2>) and Hamiltonian

    H = [[u,  c1, c2],
         [c1, 0,  1 ],
         [c2, 1,  0 ]]

with the |1>-|2> hopping fixed to 1, which sets the time unit.  The 2-site
reduction replaces the (|1>+|2>)/sqrt(2) sector by a single level at +1:
H = [[u, c], [c, 1]].  Transport is counted on the 0->1 (or 0->2) bond with
the sign convention that positive current flows out of site 0, which makes
the two-bond continuity identity exact.

Derived quantities of the two-level reduction:

    effective coupling   c      = (c1 + c2) / sqrt(2)
    splitting ratio      lambda = c1 / (c1 + c2)

lambda may exceed 1 or go negative; that signals an induced circulating
current rather than an error.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateSplit, InvalidBond, NoCrossing, TimeOutOfRange
from .linalg import eig_hermitian

SQRT2 = math.sqrt(2.0)
COUPLING_WARN_THRESHOLD = 0.2


@dataclass(frozen=True)
class SystemSpec:
    """A 2-site or 3-site system; the reference hopping fixes the units."""

    sites: int = 3
    reference_hopping: float = 1.0

    def __post_init__(self):
        if self.sites not in (2, 3):
            raise ValueError(f"sites must be 2 or 3, got {self.sites}")
        if self.reference_hopping != 1.0:
            raise ValueError("reference hopping is fixed to 1 (time unit)")


@dataclass(frozen=True)
class DrivingProtocol:
    """Time-dependent parameter tracks u(t), c1(t), c2(t).

    Protocols are immutable; evaluation at a time is pure.  ``breakpoints``
    lists interior times where the tracks have kinks so that integrators can
    align step boundaries with them.  ``meta`` carries preset bookkeeping
    (half-cycle splitting ratios, crossing-time hints, period).
    """

    u: Callable[[float], float]
    c1: Callable[[float], float]
    c2: Callable[[float], float]
    t_start: float
    t_end: float
    label: str = ""
    kind: str = "Custom"
    params: dict = field(default_factory=dict)
    breakpoints: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise ValueError("t_end must exceed t_start")
        ts = np.linspace(self.t_start, self.t_end, 257)
        cmax = max(max(abs(self.c1(t)) for t in ts), max(abs(self.c2(t)) for t in ts))
        if cmax > COUPLING_WARN_THRESHOLD:
            warnings.warn(
                f"couplings reach {cmax:.3g} > {COUPLING_WARN_THRESHOLD}; the "
                "small-coupling (two-level) regime is not guaranteed",
                stacklevel=3,
            )

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def _check_time(self, t: float) -> None:
        slack = 1e-9 * max(1.0, self.duration)
        if t < self.t_start - slack or t > self.t_end + slack:
            raise TimeOutOfRange(
                f"t={t} outside protocol window [{self.t_start}, {self.t_end}]"
            )


def _tukey(x: float, edge: float) -> float:
    """Raised-cosine tapered plateau on [0, 1]: 0 at the ends, 1 in the middle."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    if edge <= 0.0:
        return 1.0
    if x < edge:
        s = math.sin(0.5 * math.pi * x / edge)
        return s * s
    if x > 1.0 - edge:
        s = math.sin(0.5 * math.pi * (1.0 - x) / edge)
        return s * s
    return 1.0


def linear_ramp_lz(
    c: float,
    udot: float,
    u_span: float | None = None,
    *,
    sites: int = 2,
    lam: float = 1.0,
    edge_frac: float = 0.15,
    window_factor: float = 40.0,
    label: str = "",
) -> DrivingProtocol:
    """Linear sweep of u through the avoided crossing at u = 1.

    u(t) rises at rate ``udot`` and crosses 1 at mid-protocol; the full sweep
    width is ``u_span`` (default ``2 * window_factor * c``, wide enough that
    the asymptotic crossing formula applies).  Couplings sit on a raised-
    cosine tapered plateau that vanishes at both ends, so the protocol starts
    and ends with exact site-basis eigenstates; the plateau holds the
    effective coupling at ``c`` through the crossing region.

    For ``sites=2`` the single bond carries ``c`` directly.  For ``sites=3``
    the two bonds split the effective coupling according to ``lam``.
    """
    if udot <= 0.0:
        raise ValueError("udot must be positive")
    if c < 0.0:
        raise ValueError("c must be non-negative")
    span = 2.0 * window_factor * c if u_span is None else float(u_span)
    if span <= 0.0:
        raise ValueError("u_span must be positive")
    duration = span / udot
    u_lo = 1.0 - 0.5 * span

    def u(t: float) -> float:
        return u_lo + udot * t

    if sites == 2:
        c1_max, c2_max = c, 0.0
    elif sites == 3:
        c1_max = SQRT2 * c * lam
        c2_max = SQRT2 * c * (1.0 - lam)
    else:
        raise ValueError("sites must be 2 or 3")

    def c1(t: float) -> float:
        return c1_max * _tukey(t / duration, edge_frac)

    def c2(t: float) -> float:
        return c2_max * _tukey(t / duration, edge_frac)

    params = {
        "kind": "LinearRampLZ",
        "c": c,
        "udot": udot,
        "u_span": span,
        "lambda_ccw": lam,
        "edge_frac": edge_frac,
        "sites": sites,
    }
    meta = {
        "c_eff": c,
        "udot": udot,
        "lam": lam,
        "sites": sites,
        "crossing_hint": (0.5 * duration,),
    }
    return DrivingProtocol(
        u, c1, c2, 0.0, duration,
        label=label or "LinearRampLZ", kind="LinearRampLZ", params=params,
        breakpoints=(edge_frac * duration, (1.0 - edge_frac) * duration),
        meta=meta,
    )


def stir_cycle(
    c_eff: float,
    lam_ccw: float,
    lam_cw: float,
    udot: float,
    *,
    dwell: float = 0.0,
    u_delta: float = 0.5,
    edge_frac: float = 0.25,
    label: str = "",
) -> DrivingProtocol:
    """One pumping period: raise u through 1 and lower it back.

    The first half-cycle routes the passage with splitting ratio ``lam_ccw``,
    the second with ``lam_cw``; both share the same tapered coupling envelope
    scaled so the effective coupling equals ``c_eff`` at each crossing.  u(t)
    sweeps triangularly over [1 - u_delta, 1 + u_delta] at rate ``udot`` with
    an optional ``dwell`` hold at the top, between the two crossings (the
    dwell tunes the dynamical-phase difference of the crossings).  Couplings
    vanish during the dwell and at the period boundaries, so the protocol
    concatenates periodically without kinks in the couplings.
    """
    if udot <= 0.0:
        raise ValueError("udot must be positive")
    if dwell < 0.0:
        raise ValueError("dwell must be non-negative")
    if not (0.0 < u_delta < 1.5):
        raise ValueError("u_delta must lie in (0, 1.5) to stay clear of u = -1")
    t_leg = 2.0 * u_delta / udot
    period = 2.0 * t_leg + dwell
    u_lo = 1.0 - u_delta
    u_hi = 1.0 + u_delta
    c1_ccw = SQRT2 * c_eff * lam_ccw
    c2_ccw = SQRT2 * c_eff * (1.0 - lam_ccw)
    c1_cw = SQRT2 * c_eff * lam_cw
    c2_cw = SQRT2 * c_eff * (1.0 - lam_cw)
    t_fall = t_leg + dwell

    def u(t: float) -> float:
        if t <= t_leg:
            return u_lo + udot * t
        if t <= t_fall:
            return u_hi
        return u_hi - udot * (t - t_fall)

    def c1(t: float) -> float:
        if t <= t_leg:
            return c1_ccw * _tukey(t / t_leg, edge_frac)
        if t <= t_fall:
            return 0.0
        return c1_cw * _tukey((t - t_fall) / t_leg, edge_frac)

    def c2(t: float) -> float:
        if t <= t_leg:
            return c2_ccw * _tukey(t / t_leg, edge_frac)
        if t <= t_fall:
            return 0.0
        return c2_cw * _tukey((t - t_fall) / t_leg, edge_frac)

    params = {
        "kind": "StirCycle",
        "c": c_eff,
        "udot": udot,
        "lambda_ccw": lam_ccw,
        "lambda_cw": lam_cw,
        "dwell": dwell,
        "u_delta": u_delta,
        "edge_frac": edge_frac,
    }
    bp = [edge_frac * t_leg, (1.0 - edge_frac) * t_leg, t_leg]
    if dwell > 0.0:
        bp.append(t_fall)
    bp += [t_fall + edge_frac * t_leg, t_fall + (1.0 - edge_frac) * t_leg]
    meta = {
        "c_eff": c_eff,
        "udot": udot,
        "lam_ccw": lam_ccw,
        "lam_cw": lam_cw,
        "sites": 3,
        "period": period,
        "u_delta": u_delta,
        "dwell": dwell,
        "crossing_hint": (0.5 * t_leg, t_fall + 0.5 * t_leg),
    }
    return DrivingProtocol(
        u, c1, c2, 0.0, period,
        label=label or "StirCycle", kind="StirCycle", params=params,
        breakpoints=tuple(bp), meta=meta,
    )


def protocol_digest(proto: DrivingProtocol) -> str:
    """Stable identifier of a protocol: preset parameters when available,
    otherwise the label and window (custom tracks are not hashable)."""
    import hashlib
    import json

    if proto.params:
        payload = json.dumps(proto.params, sort_keys=True)
    else:
        payload = json.dumps(
            {"kind": proto.kind, "label": proto.label,
             "t_start": proto.t_start, "t_end": proto.t_end},
            sort_keys=True,
        )
    return "sha256:" + hashlib.sha256(payload.encode()).hexdigest()


def protocol_to_dict(proto: DrivingProtocol) -> dict:
    """Serializable preset parameters; custom protocols are not serializable."""
    if proto.kind == "Custom" or not proto.params:
        raise ValueError("only preset protocols (LinearRampLZ/StirCycle) serialize")
    return dict(proto.params)


def protocol_from_dict(d: dict) -> DrivingProtocol:
    kind = d.get("kind")
    if kind == "LinearRampLZ":
        return linear_ramp_lz(
            float(d["c"]), float(d["udot"]),
            u_span=float(d["u_span"]) if "u_span" in d else None,
            sites=int(d.get("sites", 2)),
            lam=float(d.get("lambda_ccw", 1.0)),
            edge_frac=float(d.get("edge_frac", 0.15)),
        )
    if kind == "StirCycle":
        return stir_cycle(
            float(d["c"]), float(d["lambda_ccw"]), float(d["lambda_cw"]),
            float(d["udot"]),
            dwell=float(d.get("dwell", 0.0)),
            u_delta=float(d.get("u_delta", 0.5)),
            edge_frac=float(d.get("edge_frac", 0.25)),
        )
    raise ValueError(f"unknown protocol kind {kind!r}")


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def hamiltonian(spec: SystemSpec, proto: DrivingProtocol, t: float) -> np.ndarray:
    """Instantaneous Hamiltonian in the site basis (Hermitian by construction)."""
    proto._check_time(t)
    u = proto.u(t)
    c1 = proto.c1(t)
    if spec.sites == 2:
        return np.array([[u, c1], [c1, 1.0]], dtype=complex)
    c2 = proto.c2(t)
    return np.array(
        [[u, c1, c2], [c1, 0.0, 1.0], [c2, 1.0, 0.0]], dtype=complex
    )


def current_operator(
    spec: SystemSpec, proto: DrivingProtocol, t: float, bond: int = 1
) -> np.ndarray:
    """Bond-current operator; ``bond`` is the site the measured bond feeds.

    Positive expectation value means particles flowing from site 0 toward
    site ``bond``.  The 2-site system has only bond 1.
    """
    proto._check_time(t)
    if spec.sites == 2:
        if bond != 1:
            raise InvalidBond("a 2-site system has only the 0->1 bond")
        c1 = proto.c1(t)
        return np.array([[0.0, 1j * c1], [-1j * c1, 0.0]], dtype=complex)
    if bond not in (1, 2):
        raise InvalidBond(f"bond must be 1 or 2, got {bond}")
    c = proto.c1(t) if bond == 1 else proto.c2(t)
    out = np.zeros((3, 3), dtype=complex)
    out[0, bond] = 1j * c
    out[bond, 0] = -1j * c
    return out


def splitting_ratio(c1: float, c2: float) -> float:
    """c1 / (c1 + c2); may exceed 1 or be negative (circulating current)."""
    s = c1 + c2
    if s == 0.0:
        raise DegenerateSplit("c1 + c2 = 0: no avoided crossing opens")
    return c1 / s


def effective_coupling(c1: float, c2: float) -> float:
    """(c1 + c2) / sqrt(2): the single coupling of the reduced two-level problem."""
    return (c1 + c2) / SQRT2


# ---------------------------------------------------------------------------
# Adiabaticity diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrossingInfo:
    t: float
    udot: float
    c_eff: float
    p_lz: float
    t_lz: float


@dataclass(frozen=True)
class AdiabaticityReport:
    """Scale estimates deciding whether the two-level adiabatic picture holds.

    The picture needs a separation of probabilities: leakage into the far
    level (a smooth-driving, off-resonant process with scale exp(-Omega*t_p))
    must be much smaller than the crossing transition probability, which in
    turn must be small.  Ratio threshold for "much smaller" is 0.1.
    """

    crossings: tuple
    p_lz: float
    p_fgr: float
    omega: float
    t_p: float
    t_lz: float
    fgr_negligible: bool
    lz_small: bool
    timescales_separated: bool

    @property
    def adiabatic(self) -> bool:
        return self.fgr_negligible and self.lz_small


def lz_probability_scale(c: float, udot: float) -> float:
    """exp(-2 pi c^2 / |udot|), the crossing transition probability."""
    return math.exp(-2.0 * math.pi * c * c / abs(udot))


def adiabaticity_report(
    proto: DrivingProtocol, spec: SystemSpec | None = None, samples: int = 4097
) -> AdiabaticityReport:
    """Estimate crossing and leakage probabilities for a protocol.

    Crossings are located where u(t) sweeps through 1; at each one the local
    sweep rate and effective coupling feed the closed-form transition
    probability.  The leakage scale uses the time-averaged mean level
    spacing.  Raises :class:`NoCrossing` when u never reaches 1.
    """
    if spec is None:
        spec = SystemSpec(sites=int(proto.meta.get("sites", 3)))
    ts = np.linspace(proto.t_start, proto.t_end, samples)
    us = np.array([proto.u(t) for t in ts])
    rel = us - 1.0
    crossings = []
    for i in range(len(ts) - 1):
        if rel[i] == 0.0 or (rel[i] < 0.0) != (rel[i + 1] < 0.0):
            if rel[i + 1] == 0.0 and i + 1 < len(ts) - 1:
                continue  # counted at the next interval's left edge
            # linear interpolation for the crossing time
            denom = rel[i + 1] - rel[i]
            tc = ts[i] if denom == 0.0 else ts[i] - rel[i] * (ts[i + 1] - ts[i]) / denom
            h = 0.5 * (ts[1] - ts[0])
            udot_c = (proto.u(min(tc + h, proto.t_end)) - proto.u(max(tc - h, proto.t_start))) / (
                min(tc + h, proto.t_end) - max(tc - h, proto.t_start)
            )
            if udot_c == 0.0:
                continue
            if spec.sites == 2:
                c_eff = abs(proto.c1(tc))
            else:
                c_eff = abs(effective_coupling(proto.c1(tc), proto.c2(tc)))
            p = lz_probability_scale(c_eff, udot_c)
            t_lz = c_eff / abs(udot_c) if c_eff > 0.0 else 0.0
            crossings.append(CrossingInfo(float(tc), float(udot_c), c_eff, p, t_lz))
    if not crossings:
        raise NoCrossing("u(t) never crosses 1 on this protocol")
    # Mean level spacing, time-averaged over a coarse sample of the window.
    spacing = []
    for t in np.linspace(proto.t_start, proto.t_end, 65):
        es = eig_hermitian(hamiltonian(spec, proto, float(t)))
        spacing.append((es.eigenvalues[-1] - es.eigenvalues[0]) / (spec.sites - 1))
    omega = float(np.mean(spacing))
    t_p = proto.duration
    p_lz = max(c.p_lz for c in crossings)
    t_lz = max(c.t_lz for c in crossings)
    p_fgr = math.exp(-omega * t_p)
    return AdiabaticityReport(
        crossings=tuple(crossings),
        p_lz=p_lz,
        p_fgr=p_fgr,
        omega=omega,
        t_p=t_p,
        t_lz=t_lz,
        fgr_negligible=p_fgr <= 0.1 * p_lz,
        lz_small=p_lz <= 0.1,
        timescales_separated=t_p >= 10.0 * t_lz,
    )
