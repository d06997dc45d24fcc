"""Interference-based readout of the walk and its Monte Carlo error budget.

The return amplitude is measured site by site: each evolved spinor component
interferes with a static reference copy of the prepared coin state, the two
paths are projected onto circular and diagonal analyzer settings, and the
click probabilities recombine linearly into the complex observable

    Pbar(x, t) = i (P11 - P1/2 - P21 + P2/2) + (P12 - P1/2 + P22 - P2/2),

whose momentum transform is G_k(t). Noise enters as uniform wave-plate angle
errors, uniform path-transmission imbalance, analyzer dephasing, and Poisson
counting; error bars come from extreme deviations over many noisy replays.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .lattice import MomentumGrid, coin_matrix, validate_density_matrix
from .quench import QuenchSpec, evolve_position, initial_state, _step_params
from .analysis import _Evaluator, find_fixed_points

U_CIRC = np.array([1.0, -1.0j]) / np.sqrt(2.0)
U_DIAG = np.array([1.0, 1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class ErrorModel:
    """Noise budget of the optical setup.

    Angle and transmission errors are drawn uniformly on +-tolerance; eta is
    the analyzer dephasing rate applied at the recombination stage.
    """

    wp_angle_tol: float = np.deg2rad(0.1)
    path_loss_tol: float = 0.02
    total_coincidences: int = 40000
    dephasing_eta: float = 0.97
    mc_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.wp_angle_tol < 0 or self.path_loss_tol < 0:
            raise ConfigError("tolerances must be nonnegative")
        if not 0 <= self.dephasing_eta <= 1:
            raise ConfigError(f"eta must be in [0, 1], got {self.dephasing_eta}")
        if self.total_coincidences < 0:
            raise ConfigError("coincidence total must be nonnegative")

    def silent(self) -> "ErrorModel":
        """Same sample count with every noise source switched off; a zero
        coincidence total stands for unlimited counts (no shot noise)."""
        return ErrorModel(0.0, 0.0, 0, 1.0, self.mc_samples, self.seed)


def dephase(rho: np.ndarray, eta: float) -> np.ndarray:
    """Phase-damping channel eta rho + (1 - eta) sz rho sz; keeps the
    diagonal, scales coherences by 2 eta - 1."""
    if not 0 <= eta <= 1:
        raise ConfigError(f"eta must be in [0, 1], got {eta}")
    validate_density_matrix(rho)
    out = rho.copy()
    out[0, 1] *= 2 * eta - 1
    out[1, 0] *= 2 * eta - 1
    return out


@dataclass(frozen=True)
class MeasurementProbs:
    """Analyzer click probabilities at one lattice site and time.

    p11/p21: circular-basis clicks in paths 1 and 2, p12/p22 the diagonal
    ones; p1/p2 are the circular-setting path totals.
    """

    x: int
    t: int
    p11: float
    p12: float
    p21: float
    p22: float
    p1: float
    p2: float


def reconstruct_pbar(m: MeasurementProbs) -> complex:
    return complex(1j * (m.p11 - m.p1 / 2 - m.p21 + m.p2 / 2)
                   + (m.p12 - m.p1 / 2 + m.p22 - m.p2 / 2))


@dataclass(frozen=True)
class PerturbedRun:
    """One noisy replay of the apparatus: per-step plate angles, analyzer
    basis errors, and the four sub-arm transmissions."""

    spec: QuenchSpec
    plate_angles: np.ndarray      # (n_steps, 4) actual angles
    basis_deltas: np.ndarray      # (4,) analyzer rotations: circ1, diag1, circ2, diag2
    transmissions: np.ndarray     # (4,) evolved1, ref1, ref2, evolved2


def perturb_protocol(spec: QuenchSpec, error_model: ErrorModel,
                     rng: np.random.Generator, n_steps: int = 7) -> PerturbedRun:
    """Draw one apparatus realization.

    Every half-wave-plate angle of every step gets its own uniform error;
    lossless walks have three plates per step, so the second mid column stays
    exact there. Draw order is fixed: plates, analyzer bases, transmissions.
    """
    base = _step_params(spec.final_angles,
                        spec.loss if spec.regime == "nonunitary" else 0.0)
    plates = np.tile(np.array(base[:4]), (n_steps, 1))
    d = rng.uniform(-error_model.wp_angle_tol, error_model.wp_angle_tol,
                    (n_steps, 4))
    if spec.is_unitary:
        d[:, 2] = 0.0
    basis = rng.uniform(-error_model.wp_angle_tol, error_model.wp_angle_tol, 4)
    trans = 1.0 + rng.uniform(-error_model.path_loss_tol,
                              error_model.path_loss_tol, 4)
    return PerturbedRun(spec, plates + d, basis, trans)


def poisson_counts(probabilities, total_coincidences: int,
                   rng: np.random.Generator):
    """Replace each probability by a Poisson draw over the expected total."""
    if total_coincidences <= 0:
        raise ConfigError("counting statistics need a positive total")
    p = np.asarray(probabilities, dtype=float)
    return rng.poisson(np.clip(p, 0.0, None) * total_coincidences) / total_coincidences


def _projected(r11, r22, r12, u) -> np.ndarray:
    """<u| rho |u> for arrays of 2x2 arm matrices given by entries."""
    return (np.abs(u[0]) ** 2 * r11 + np.abs(u[1]) ** 2 * r22
            + 2 * np.real(np.conj(u[0]) * u[1] * r12))


def _setting_probs(spec: QuenchSpec, n_steps: int, run: PerturbedRun | None,
                   eta: float):
    """Per time step, the eight outcome probabilities of the four analyzer
    settings, vectorized over lattice sites.

    Returns {t: (sites, probs (8, nx))} with rows ordered
    (p11, p11', p12, p12', p21, p21', p22, p22').
    """
    evo = evolve_position(spec, n_steps,
                          plate_angles=None if run is None else run.plate_angles)
    init = initial_state(spec)
    coh = 2 * eta - 1
    if run is None:
        t_ev1 = t_rf1 = t_rf2 = t_ev2 = 1.0
        u_c1, u_d1, u_c2, u_d2 = U_CIRC, U_DIAG, U_CIRC, U_DIAG
    else:
        t_ev1, t_rf1, t_rf2, t_ev2 = run.transmissions
        u_c1 = coin_matrix(run.basis_deltas[0]) @ U_CIRC
        u_d1 = coin_matrix(run.basis_deltas[1]) @ U_DIAG
        u_c2 = coin_matrix(run.basis_deltas[2]) @ U_CIRC
        u_d2 = coin_matrix(run.basis_deltas[3]) @ U_DIAG
    norm1 = (t_ev1 + t_rf1) / 2
    norm2 = (t_rf2 + t_ev2) / 2

    out = {}
    for t in range(n_steps + 1):
        sites = evo.sites(t)
        nx = sites.size
        # weighted arm matrices; path 1 interferes the evolved H component
        # with the reference H amplitude, path 2 the reference V with the
        # evolved V (the reference copy is flat across the window)
        a11 = np.zeros(nx)
        a22 = np.zeros(nx)
        a12 = np.zeros(nx, dtype=complex)
        b11 = np.zeros(nx)
        b22 = np.zeros(nx)
        b12 = np.zeros(nx, dtype=complex)
        for w, ket, hist in zip(init.weights, init.kets, evo.histories):
            amp = hist[t].amplitudes
            v1 = np.sqrt(t_ev1) * amp[0]
            v2 = np.sqrt(t_rf1) * ket[0] * np.ones(nx, dtype=complex)
            a11 += w * np.abs(v1) ** 2
            a22 += w * np.abs(v2) ** 2
            a12 += w * v1 * np.conj(v2)
            w1 = np.sqrt(t_rf2) * ket[1] * np.ones(nx, dtype=complex)
            w2 = np.sqrt(t_ev2) * amp[1]
            b11 += w * np.abs(w1) ** 2
            b22 += w * np.abs(w2) ** 2
            b12 += w * w1 * np.conj(w2)
        a11, a22, a12 = a11 / norm1, a22 / norm1, coh * a12 / norm1
        b11, b22, b12 = b11 / norm2, b22 / norm2, coh * b12 / norm2
        p1_tot = a11 + a22
        p2_tot = b11 + b22
        p11 = _projected(a11, a22, a12, u_c1)
        p12 = _projected(a11, a22, a12, u_d1)
        p21 = _projected(b11, b22, b12, u_c2)
        p22 = _projected(b11, b22, b12, u_d2)
        out[t] = (sites, np.stack([p11, p1_tot - p11, p12, p1_tot - p12,
                                   p21, p2_tot - p21, p22, p2_tot - p22]))
    return out


def _assemble(sites, probs, t) -> list:
    rows = []
    p1 = probs[0] + probs[1]
    p2 = probs[4] + probs[5]
    for j, x in enumerate(sites):
        rows.append(MeasurementProbs(int(x), t, float(probs[0, j]),
                                     float(probs[2, j]), float(probs[4, j]),
                                     float(probs[6, j]), float(p1[j]),
                                     float(p2[j])))
    return rows


def simulate_measurement_probs(spec: QuenchSpec, x: int, t: int,
                               error_free: bool = True,
                               error_model: ErrorModel | None = None,
                               rng: np.random.Generator | None = None) -> MeasurementProbs:
    """Click probabilities for one site and step.

    error_free gives the ideal analyzer (no dephasing, no draws); otherwise
    the model's dephasing applies, plus one apparatus draw and a Poisson pass
    when an rng is supplied.
    """
    if t < 0 or t != int(t):
        raise ConfigError("t must be a nonnegative integer step count")
    model = error_model or ErrorModel()
    eta = 1.0 if error_free else model.dephasing_eta
    run = None
    if not error_free and rng is not None:
        run = perturb_protocol(spec, model, rng, t if t > 0 else 1)
    fields = _setting_probs(spec, int(t), run, eta)
    sites, probs = fields[int(t)]
    if not error_free and rng is not None and model.total_coincidences > 0:
        probs = poisson_counts(probs, model.total_coincidences, rng)
    hit = np.nonzero(sites == x)[0]
    if hit.size == 0:
        raise ConfigError(f"site {x} outside the step-{t} window")
    rows = _assemble(sites, probs, int(t))
    return rows[int(hit[0])]


@dataclass(frozen=True)
class ErrorBarResult:
    """Asymmetric per-time error bars around the noiseless center.

    The bar below the point is set by the largest upward excursion of the
    noisy replays and vice versa.
    """

    rows: tuple  # (quantity, t, center, err_plus, err_minus)
    n_samples: int
    seed: int

    def for_quantity(self, quantity: str):
        return [r for r in self.rows if r[0] == quantity]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "t", "center", "err_plus", "err_minus",
                        "n_samples", "seed"])
            for q, t, c, ep, em in self.rows:
                w.writerow([q, f"{t:.12g}", f"{c:.12g}", f"{ep:.12g}",
                            f"{em:.12g}", self.n_samples, self.seed])


def _pbar_from_probs(probs) -> np.ndarray:
    p1 = probs[0] + probs[1]
    p2 = probs[4] + probs[5]
    return (1j * (probs[0] - p1 / 2 - probs[4] + p2 / 2)
            + (probs[2] - p1 / 2 + probs[6] - p2 / 2))


def monte_carlo_errorbars(spec: QuenchSpec, quantity: str,
                          error_model: ErrorModel | None = None,
                          n_steps: int = 7, sector: int = 1,
                          positions=(0,),
                          grid: MomentumGrid | None = None,
                          dtop_points: int = 512) -> ErrorBarResult:
    """Error bars for a measured quantity over integer steps.

    quantity is one of "rate_function", "dtop" (one sector, labeled
    dtop_m<sector>), or "pbar" (labeled re/im_pbar_x<position>). Each sample
    replays the full measurement with fresh apparatus draws and Poisson
    counting; lossy walks keep only the counting noise. Sample i runs on seed
    XOR i, so the sweep parallelizes without changing results.
    """
    model = error_model or ErrorModel()
    if model.mc_samples < 100:
        raise ConfigError("mc_samples must be at least 100")
    if quantity not in ("rate_function", "dtop", "pbar"):
        raise ConfigError(f"unknown quantity {quantity!r}")
    grid = grid or MomentumGrid(256)
    poisson_only = spec.regime == "nonunitary"
    eta = model.dephasing_eta

    # momentum transforms, one matrix per step (and per winding sector)
    steps = list(range(n_steps + 1))
    ref_fields = _setting_probs(spec, n_steps, None, 1.0)
    fourier = {}
    sector_fourier = {}
    if quantity == "rate_function":
        for t in steps:
            fourier[t] = np.exp(-1j * np.outer(grid.samples, ref_fields[t][0]))
    elif quantity == "dtop":
        fps = find_fixed_points(spec)
        segs = fps.segments()
        if not segs:
            raise ConfigError("no winding sectors exist for this quench")
        if not 1 <= sector <= len(segs):
            raise ConfigError(f"sector must be in 1..{len(segs)}, got {sector}")
        lo, hi = segs[sector - 1]
        ks = np.linspace(lo, hi, dtop_points + 1)
        ev = _Evaluator(spec)
        A, B, energy = ev.coeffs(ks)
        dyn_rate = (A - B).real * energy.real
        for t in steps:
            sector_fourier[t] = np.exp(-1j * np.outer(ks, ref_fields[t][0]))

    def measure(fields, with_poisson, rng):
        """Quantity values keyed (label, t) for one replay."""
        vals = {}
        for t in steps:
            sites, probs = fields[t]
            if with_poisson and model.total_coincidences > 0:
                probs = poisson_counts(probs, model.total_coincidences, rng)
            pbar = _pbar_from_probs(probs)
            if quantity == "rate_function":
                g = fourier[t] @ pbar
                mag = np.abs(g)
                if np.any(mag == 0):
                    vals[("rate_function", t)] = np.inf
                else:
                    vals[("rate_function", t)] = float(
                        -(2.0 / mag.size) * np.log(mag).sum())
            elif quantity == "dtop":
                g = sector_fourier[t] @ pbar
                z = g * np.exp(-1j * dyn_rate * t)
                inc = np.angle(z[1:] * np.conj(z[:-1]))
                vals[(f"dtop_m{sector}", t)] = float(inc.sum() / (2 * np.pi))
            else:
                for x in positions:
                    hit = np.nonzero(sites == x)[0]
                    z = complex(pbar[hit[0]]) if hit.size else 0.0j
                    vals[(f"re_pbar_x{x}", t)] = z.real
                    vals[(f"im_pbar_x{x}", t)] = z.imag
        return vals

    center = measure(ref_fields, False, None)

    hi_dev = {key: 0.0 for key in center}
    lo_dev = {key: 0.0 for key in center}
    for i in range(model.mc_samples):
        rng = np.random.default_rng(model.seed ^ i)
        if poisson_only:
            fields = ref_fields
        else:
            run = perturb_protocol(spec, model, rng, n_steps)
            fields = _setting_probs(spec, n_steps, run, eta)
        sample = measure(fields, True, rng)
        for key, v in sample.items():
            d = v - center[key]
            if not np.isfinite(d):
                continue
            if d > hi_dev[key]:
                hi_dev[key] = d
            if d < lo_dev[key]:
                lo_dev[key] = d

    rows = []
    for key in center:
        q, t = key
        rows.append((q, float(t), float(center[key]),
                     float(-lo_dev[key]) + 0.0, float(hi_dev[key]) + 0.0))
    rows.sort(key=lambda r: (r[0], r[1]))
    return ErrorBarResult(tuple(rows), model.mc_samples, model.seed)
