"""Return-amplitude analysis: rate functions, geometric phases, fixed points,
critical momenta and times, and the dynamic topological order parameter.

A quench shows a dynamical transition when some momentum sector passes through
a zero of G_k(t). Zeros can only sit at momenta where the two two-mode weights
balance, which in turn requires band-population fixed points of both kinds to
exist; between fixed points the Pancharatnam geometric phase winds by a
quantized amount that jumps at the critical times.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .backend import phase_increments, two_mode_table
from .errors import (
    ConfigError,
    IllDefinedPhaseError,
    PhysicsError,
    TrivialQuenchError,
    UndefinedDynamicPhaseError,
    UnresolvedPhaseJumpError,
)
from .floquet import eigensystem_arrays
from .lattice import MomentumGrid, TimeGrid, normalize_angle
from .quench import (
    LoschmidtField,
    QuenchSpec,
    SectorTable,
    initial_state,
    loschmidt_field,
    overlaps,
)

FIXED_POINT_CUT = 0.05       # grid minima below this are candidate zeros
FIXED_POINT_ACCEPT = 1e-8
FIXED_POINT_DEDUP = 1e-6
TRIVIAL_WEIGHT_MAX = 1e-10   # an overlap channel this flat is a non-quench
PHASE_JUMP_GUARD = np.pi - 0.1
DTOP_REFINE_POINTS = 16
DTOP_REFINE_DEPTH = 3
ENERGY_IMAG_TOL = 1e-9


def _wrap(x):
    """Wrap to (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(x)))


@dataclass(frozen=True)
class RateTrace:
    """Return rate g(t) = -(2/N) sum_k ln |G_k(t)|; +inf marks an exact zero."""

    spec: QuenchSpec
    times: np.ndarray
    values: np.ndarray

    def kinks(self, factor: float = 10.0) -> np.ndarray:
        """Times where the discrete second difference is an outlier against
        the median, the nonanalyticity signature on a uniform grid."""
        d2 = np.abs(np.diff(self.values, 2))
        med = np.median(d2)
        if not np.isfinite(med) or med == 0:
            med = np.mean(d2[np.isfinite(d2)]) or 1.0
        hits = np.nonzero(d2 > factor * med)[0] + 1
        # collapse runs of adjacent flagged samples to the local maximum
        out = []
        i = 0
        while i < hits.size:
            j = i
            while j + 1 < hits.size and hits[j + 1] - hits[j] <= 2:
                j += 1
            run = hits[i:j + 1]
            out.append(run[np.argmax(d2[run - 1])])
            i = j + 1
        return self.times[np.array(out, dtype=int)] if out else np.array([])


def rate_function(source, grid: MomentumGrid | None = None,
                  tgrid: TimeGrid | None = None) -> RateTrace:
    """Intensive return rate from a quench spec or a precomputed field."""
    if isinstance(source, LoschmidtField):
        field = source
    elif isinstance(source, QuenchSpec):
        field = loschmidt_field(source, grid, tgrid)
    else:
        raise ConfigError(f"cannot take a rate from {type(source).__name__}")
    mags = np.abs(field.values)
    n = mags.shape[0]
    with np.errstate(divide="ignore"):
        logs = np.log(mags)
    g = -(2.0 / n) * logs.sum(axis=0)
    g[np.any(mags == 0, axis=0)] = np.inf
    return RateTrace(field.spec, field.times, g)


def dynamic_phase(table: SectorTable, times) -> np.ndarray:
    """Dynamical phase per momentum sector, (n_k, n_t).

    Linear in t with rate Re[A - B] Re[E]; for mixtures that reduces to the
    (2p - 1)-weighted band imbalance. Needs a real quasienergy spectrum.
    """
    if not table.energy_is_real:
        raise UndefinedDynamicPhaseError(
            "quasienergies are complex; the dynamical phase has no meaning here")
    rate = (table.A - table.B).real * table.energy.real
    return rate[:, None] * np.asarray(times, dtype=float)[None, :]


def pgp(table: SectorTable, times) -> np.ndarray:
    """Pancharatnam geometric phase arg G - phi_dyn, wrapped to (-pi, pi]."""
    g = table.loschmidt(times)
    return _wrap(np.angle(g) - dynamic_phase(table, times))


class _Evaluator:
    """Continuous-momentum access to the overlap data of one quench."""

    def __init__(self, spec: QuenchSpec):
        self.spec = spec
        self.loss_f = spec.loss if spec.regime == "nonunitary" else 0.0
        self.psi0 = initial_state(spec).kets[0]

    def raw(self, ks):
        ks = np.atleast_1d(np.asarray(ks, dtype=float))
        es = eigensystem_arrays(self.spec.final_angles, self.loss_f, ks)
        ct_p = es["chi_p"] @ self.psi0
        ct_m = es["chi_m"] @ self.psi0
        b_p = es["psi_p"] @ self.psi0.conj()
        b_m = es["psi_m"] @ self.psi0.conj()
        return ct_p, ct_m, b_p, b_m, es["energy"]

    def coeffs(self, ks):
        """Two-mode weights A (e^{+iEt}) and B (e^{-iEt}) plus E."""
        ct_p, ct_m, b_p, b_m, energy = self.raw(ks)
        if self.spec.regime == "nonunitary":
            return b_m * ct_m, b_p * ct_p, energy
        a = np.abs(ct_m) ** 2
        b = np.abs(ct_p) ** 2
        if self.spec.regime == "mixed":
            p = self.spec.mix_p
            return (p * a + (1 - p) * b).astype(complex), \
                   (p * b + (1 - p) * a).astype(complex), energy
        return a.astype(complex), b.astype(complex), energy

    def ct_value(self, k: float, kind: str) -> complex:
        ct_p, ct_m, _, _, _ = self.raw(k)
        return complex((ct_m if kind == "minus" else ct_p)[0])

    def ct_abs(self, k: float, kind: str) -> float:
        return abs(self.ct_value(k, kind))

    def weight_h(self, k: float) -> float:
        """weight_minus - weight_plus; its zeros are the critical momenta."""
        ct_p, ct_m, b_p, b_m, _ = self.raw(k)
        if self.spec.regime == "nonunitary":
            return float(np.abs(b_m * ct_m)[0] - np.abs(b_p * ct_p)[0])
        return float((np.abs(ct_m) ** 2 - np.abs(ct_p) ** 2)[0])

    def energy_at(self, k: float) -> complex:
        return complex(self.raw(k)[4][0])

    def z(self, ks, t: float) -> np.ndarray:
        """G e^{-i phi_dyn}, whose phase is the PGP, along a momentum path."""
        A, B, energy = self.coeffs(ks)
        if np.abs(energy.imag).max() > ENERGY_IMAG_TOL:
            raise UndefinedDynamicPhaseError(
                "complex quasienergies on the path; geometric phase undefined")
        e = energy.real
        g = A * np.exp(1j * e * t) + B * np.exp(-1j * e * t)
        return g * np.exp(-1j * (A - B).real * e * t)


@dataclass(frozen=True)
class FixedPoint:
    k: float
    kind: str      # which overlap channel vanishes: "minus" kills the
                   # e^{+iEt} weight, "plus" the e^{-iEt} weight
    residual: float


@dataclass(frozen=True)
class FixedPointSet:
    spec: QuenchSpec
    points: tuple

    @property
    def ks(self) -> np.ndarray:
        return np.array([p.k for p in self.points])

    @property
    def kinds(self) -> tuple:
        return tuple(p.kind for p in self.points)

    def segments(self):
        """Cyclic intervals between consecutive fixed points; the last wraps
        past the zone edge."""
        ks = self.ks
        if ks.size < 2:
            return []
        segs = [(ks[i], ks[i + 1]) for i in range(ks.size - 1)]
        segs.append((ks[-1], ks[0] + 2 * np.pi))
        return segs


def find_fixed_points(spec: QuenchSpec, grid: MomentumGrid | None = None) -> FixedPointSet:
    """Momenta where the prepared state lies entirely in one band.

    Grid minima of each overlap channel are polished to machine precision;
    only zeros below a hard acceptance threshold count. A channel that
    vanishes identically means the quench does not change the state at all.
    """
    grid = grid or MomentumGrid()
    ev = _Evaluator(spec)
    ct_p, ct_m, _, _, _ = ev.raw(grid.samples)
    ks = grid.samples
    h = grid.spacing
    found = []
    for kind, raw_vals in (("plus", ct_p), ("minus", ct_m)):
        vals = np.abs(raw_vals)
        if vals.max() < TRIVIAL_WEIGHT_MAX:
            raise TrivialQuenchError(
                f"the {kind} overlap vanishes at every momentum; nothing is quenched")
        local = (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1)) \
            & (vals < FIXED_POINT_CUT)
        # the overlap is real up to a k-smooth phase, so a zero squeezed
        # between samples still flips the aligned sign across the interval;
        # catches dips narrower than the grid spacing near PT boundaries
        rel = np.angle(np.roll(raw_vals, -1) * np.conj(raw_vals))
        flip = (np.abs(rel) > np.pi / 2) & (vals > 0) \
            & ~local & ~np.roll(local, -1)
        for i in np.nonzero(flip)[0]:
            drn = complex(raw_vals[(i + 1) % len(ks)] - raw_vals[i])
            if abs(drn) == 0.0:
                continue
            signed = lambda k: (ev.ct_value(k, kind) * drn.conjugate()).real
            lo, hi = signed(ks[i]), signed(ks[i] + h)
            if lo * hi < 0:
                k0 = brentq(signed, ks[i], ks[i] + h, xtol=1e-13)
                fun = ev.ct_abs(k0, kind)
                if fun < FIXED_POINT_ACCEPT:
                    found.append(FixedPoint(float(normalize_angle(k0)), kind,
                                            float(fun)))
        for i in np.nonzero(local)[0]:
            res = minimize_scalar(lambda k: ev.ct_abs(k, kind),
                                  bounds=(ks[i] - h, ks[i] + h), method="bounded",
                                  options={"xatol": 1e-12})
            k0, fun = float(res.x), float(res.fun)
            # bounded search bottoms out near sqrt(eps)*|k| on shallow zeros;
            # project onto the local gradient direction, which is linear
            # through a simple zero, and bisect that instead
            drn = ev.ct_value(k0 + h, kind) - ev.ct_value(k0 - h, kind)
            if abs(drn) > 0.0:
                signed = lambda k: (ev.ct_value(k, kind)
                                    * drn.conjugate()).real
                lo, hi = signed(k0 - h), signed(k0 + h)
                if lo * hi < 0:
                    k1 = brentq(signed, k0 - h, k0 + h, xtol=1e-13)
                    f1 = ev.ct_abs(k1, kind)
                    if f1 < fun:
                        k0, fun = k1, f1
            if fun < FIXED_POINT_ACCEPT:
                found.append(FixedPoint(float(normalize_angle(k0)), kind,
                                        float(fun)))
    found.sort(key=lambda p: p.k)
    # circular dedup, including the +-pi seam
    kept = []
    for p in found:
        dup = any(abs(normalize_angle(p.k - q.k)) < FIXED_POINT_DEDUP for q in kept)
        if not dup:
            kept.append(p)
    return FixedPointSet(spec, tuple(kept))


@dataclass(frozen=True)
class CriticalMomentum:
    k: float
    energy: float
    t0: float      # first critical time pi / (2 E)


@dataclass(frozen=True)
class CriticalSet:
    spec: QuenchSpec
    fixed_points: FixedPointSet
    criticals: tuple
    t_max: float

    @property
    def ks(self) -> np.ndarray:
        return np.array([c.k for c in self.criticals])

    @property
    def time_scales(self) -> np.ndarray:
        """Distinct t0 values, ascending."""
        out = []
        for c in sorted(self.criticals, key=lambda c: c.t0):
            if not out or abs(c.t0 - out[-1]) > 1e-9:
                out.append(c.t0)
        return np.array(out)

    @property
    def critical_times(self) -> np.ndarray:
        """All odd multiples (2n-1) t0 up to t_max, merged across momenta."""
        ts = []
        for c in self.criticals:
            n = 1
            while (2 * n - 1) * c.t0 <= self.t_max + 1e-12:
                ts.append((2 * n - 1) * c.t0)
                n += 1
        ts.sort()
        out = []
        for t in ts:
            if not out or abs(t - out[-1]) > 1e-9:
                out.append(t)
        return np.array(out)


def find_critical(spec: QuenchSpec, grid: MomentumGrid | None = None,
                  t_max: float = 7.0,
                  fixed_points: FixedPointSet | None = None) -> CriticalSet:
    """Critical momenta: weight-balance zeros between fixed points of
    opposite kind, each carrying its periodic ladder of critical times."""
    fps = fixed_points if fixed_points is not None else find_fixed_points(spec, grid)
    ev = _Evaluator(spec)
    criticals = []
    pts = fps.points
    for i in range(len(pts)):
        lo = pts[i]
        hi = pts[(i + 1) % len(pts)]
        if lo.kind == hi.kind:
            continue
        k_lo = lo.k + 1e-9
        k_hi = (hi.k if i + 1 < len(pts) else hi.k + 2 * np.pi) - 1e-9
        if k_hi <= k_lo:
            continue
        f_lo, f_hi = ev.weight_h(k_lo), ev.weight_h(k_hi)
        if f_lo * f_hi > 0:
            continue
        kc = brentq(ev.weight_h, k_lo, k_hi, xtol=1e-12)
        e = ev.energy_at(kc).real
        if e <= 1e-12:
            raise PhysicsError(f"vanishing quasienergy at critical momentum {kc}")
        criticals.append(CriticalMomentum(float(normalize_angle(kc)), float(e),
                                          float(np.pi / (2 * e))))
    criticals.sort(key=lambda c: c.k)
    kept = []
    for c in criticals:
        if not any(abs(normalize_angle(c.k - q.k)) < 1e-9 for q in kept):
            kept.append(c)
    return CriticalSet(spec, fps, tuple(kept), t_max)


def _sector_winding(ev: _Evaluator, k_lo: float, k_hi: float, t: float,
                    n: int, depth: int) -> float:
    ks = np.linspace(k_lo, k_hi, n + 1)
    z = ev.z(ks, t)
    if np.abs(z).min() < 1e-12:
        raise IllDefinedPhaseError(
            f"G vanishes on the sector at t = {t}; phase winding undefined")
    inc = phase_increments(z)
    total = 0.0
    for j in range(inc.size):
        if abs(inc[j]) > PHASE_JUMP_GUARD:
            if depth >= DTOP_REFINE_DEPTH:
                raise UnresolvedPhaseJumpError(
                    f"phase step {inc[j]:.3f} rad persists after refinement at t = {t}")
            total += _sector_winding(ev, ks[j], ks[j + 1], t,
                                     DTOP_REFINE_POINTS, depth + 1)
        else:
            total += inc[j]
    return total


def dtop(spec: QuenchSpec, t: float, sector: int = 1, resolution: int = 256,
         fixed_points: FixedPointSet | None = None) -> float:
    """Geometric-phase winding across one fixed-point sector at time t.

    Sectors are numbered from 1 in momentum order; each is bounded by two
    consecutive fixed points and the phase at the ends is pinned, so for pure
    preparations the value is an integer away from critical times.
    """
    fps = fixed_points if fixed_points is not None else find_fixed_points(spec)
    segs = fps.segments()
    if not segs:
        raise PhysicsError("fewer than two fixed points; no winding sectors exist")
    if not 1 <= sector <= len(segs):
        raise ConfigError(f"sector must be in 1..{len(segs)}, got {sector}")
    lo, hi = segs[sector - 1]
    ev = _Evaluator(spec)
    return _sector_winding(ev, lo, hi, t, resolution, 0) / (2 * np.pi)


@dataclass(frozen=True)
class DtopTrace:
    spec: QuenchSpec
    sector: int
    times: np.ndarray
    values: np.ndarray

    @property
    def quantized(self) -> bool:
        v = self.values[np.isfinite(self.values)]
        return bool(np.all(np.abs(v - np.round(v)) < 0.05))


def dtop_trace(spec: QuenchSpec, sector: int, times,
               resolution: int = 256,
               fixed_points: FixedPointSet | None = None) -> DtopTrace:
    """Order-parameter trace over a time grid.

    Bulk evaluation reuses one momentum table for all times; only times whose
    raw increments cross the jump guard are redone with local refinement.
    """
    fps = fixed_points if fixed_points is not None else find_fixed_points(spec)
    segs = fps.segments()
    if not segs:
        raise PhysicsError("fewer than two fixed points; no winding sectors exist")
    if not 1 <= sector <= len(segs):
        raise ConfigError(f"sector must be in 1..{len(segs)}, got {sector}")
    lo, hi = segs[sector - 1]
    times = np.asarray(times, dtype=float)
    ev = _Evaluator(spec)
    ks = np.linspace(lo, hi, resolution + 1)
    A, B, energy = ev.coeffs(ks)
    if np.abs(energy.imag).max() > ENERGY_IMAG_TOL:
        raise UndefinedDynamicPhaseError(
            "complex quasienergies on the sector; geometric phase undefined")
    e = energy.real
    g = two_mode_table(A, B, energy.real + 0j, times)
    z = g * np.exp(-1j * np.outer((A - B).real * e, times))
    inc = np.angle(z[1:, :] * np.conj(z[:-1, :]))
    vals = inc.sum(axis=0) / (2 * np.pi)
    bad = np.abs(z).min(axis=0) < 1e-12
    rough = (np.abs(inc).max(axis=0) > PHASE_JUMP_GUARD) & ~bad
    for j in np.nonzero(bad)[0]:
        vals[j] = np.nan
    for j in np.nonzero(rough)[0]:
        try:
            vals[j] = _sector_winding(ev, lo, hi, times[j], resolution, 0) / (2 * np.pi)
        except IllDefinedPhaseError:
            vals[j] = np.nan
    return DtopTrace(spec, sector, times, vals)


@dataclass(frozen=True)
class DqptEvent:
    t_c: float
    signals_agreeing: int
    sources: tuple


@dataclass(frozen=True)
class DqptReport:
    spec: QuenchSpec
    events: tuple
    rate_dips: np.ndarray
    predicted: np.ndarray
    dtop_jumps: np.ndarray

    @property
    def has_dqpt(self) -> bool:
        return any(e.signals_agreeing >= 2 for e in self.events)


def detect_dqpt(spec: QuenchSpec, grid: MomentumGrid | None = None,
                tgrid: TimeGrid | None = None, dip_cut: float = 0.05,
                window: float = 0.05) -> DqptReport:
    """Reconcile three independent transition signatures.

    (1) times where min_k |G| dips toward zero, (2) the predicted ladder of
    critical times, (3) jumps of the sector order parameter across those
    times. Candidates within the agreement window merge into one event.
    """
    grid = grid or MomentumGrid()
    tgrid = tgrid or TimeGrid()
    field = loschmidt_field(spec, grid, tgrid)
    minabs = np.abs(field.values).min(axis=0)
    below = minabs < dip_cut
    dips = []
    i = 0
    while i < below.size:
        if below[i]:
            j = i
            while j + 1 < below.size and below[j + 1]:
                j += 1
            seg = slice(i, j + 1)
            dips.append(float(field.times[seg][np.argmin(minabs[seg])]))
            i = j + 1
        else:
            i += 1

    try:
        crit = find_critical(spec, grid, t_max=float(field.times[-1]))
        predicted = [float(t) for t in crit.critical_times]
        fps = crit.fixed_points
        n_sectors = len(fps.segments())
    except (TrivialQuenchError, PhysicsError):
        predicted, fps, n_sectors = [], None, 0

    jumps = []
    if n_sectors and predicted:
        for t_c in predicted:
            if t_c - 0.1 <= 0:
                continue
            jumped = False
            for m in range(1, n_sectors + 1):
                try:
                    before = dtop(spec, t_c - 0.1, m, fixed_points=fps)
                    after = dtop(spec, t_c + 0.1, m, fixed_points=fps)
                except (IllDefinedPhaseError, UndefinedDynamicPhaseError):
                    continue
                if abs(after - before) > 0.25:
                    jumped = True
                    break
            if jumped:
                jumps.append(t_c)

    tagged = sorted([(t, "rate_dip") for t in dips]
                    + [(t, "predicted") for t in predicted]
                    + [(t, "dtop_jump") for t in jumps])
    events = []
    i = 0
    while i < len(tagged):
        j = i
        while j + 1 < len(tagged) and tagged[j + 1][0] - tagged[j][0] <= window:
            j += 1
        group = tagged[i:j + 1]
        srcs = tuple(sorted({s for _, s in group}))
        anchor = next((t for t, s in group if s == "predicted"),
                      float(np.mean([t for t, _ in group])))
        events.append(DqptEvent(float(anchor), len(srcs), srcs))
        i = j + 1
    return DqptReport(spec, tuple(events), np.array(dips), np.array(predicted),
                      np.array(jumps))


def analysis_report(spec: QuenchSpec, grid: MomentumGrid | None = None,
                    tgrid: TimeGrid | None = None,
                    dtop_resolution: int = 256) -> dict:
    """Everything the command line serializes for one quench, as plain types."""
    grid = grid or MomentumGrid()
    tgrid = tgrid or TimeGrid()
    out = {
        "regime": spec.regime,
        "initial_angles": [spec.initial_angles.theta1, spec.initial_angles.theta2],
        "final_angles": [spec.final_angles.theta1, spec.final_angles.theta2],
        "loss": spec.loss,
    }
    if spec.mix_p is not None:
        out["mix_p"] = spec.mix_p

    trace = rate_function(spec, grid, tgrid)
    out["rate_function"] = [{"t": float(t), "g": (float(g) if np.isfinite(g) else None)}
                            for t, g in zip(trace.times, trace.values)]

    try:
        crit = find_critical(spec, grid, t_max=float(tgrid.samples[-1]))
    except TrivialQuenchError as err:
        out["trivial_quench"] = str(err)
        out["fixed_points"] = []
        out["critical_momenta"] = []
        out["time_scales"] = []
        out["critical_times"] = []
        out["dtop_traces"] = []
    else:
        fps = crit.fixed_points
        out["fixed_points"] = [{"k": p.k, "kind": p.kind} for p in fps.points]
        out["critical_momenta"] = [c.k for c in crit.criticals]
        out["time_scales"] = [float(t) for t in crit.time_scales]
        out["critical_times"] = [float(t) for t in crit.critical_times]
        traces = []
        if fps.segments():
            for m in range(1, len(fps.segments()) + 1):
                tr = dtop_trace(spec, m, tgrid.samples, dtop_resolution, fixed_points=fps)
                traces.append({
                    "m": m,
                    "t": [float(t) for t in tr.times],
                    "value": [(float(v) if np.isfinite(v) else None) for v in tr.values],
                })
        out["dtop_traces"] = traces

    report = detect_dqpt(spec, grid, tgrid)
    out["dqpt_events"] = [{"t_c": e.t_c, "signals_agreeing": e.signals_agreeing}
                          for e in report.events]
    return out
