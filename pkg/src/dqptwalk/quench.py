"""Quench protocols: sudden switch of the coin angles at t = 0.

The walker starts in an eigenstate of a flat-band preparation walk (momentum
independent by construction), then evolves under a different walk. Everything
downstream reduces to the two-mode amplitude per momentum sector,

    G_k(t) = A_k e^{i E_k t} + B_k e^{-i E_k t},

where E_k is the quasienergy of the post-quench walk and A, B collect the
band overlap data of the prepared state. Mixed preparations average the two
pure-state amplitudes; lossy walks use the biorthogonal left vectors, so A
and B are no longer real or positive.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .backend import two_mode_table, walk_step
from .errors import ConfigError, InvalidInitialProtocolError
from .floquet import (
    bloch_coefficients,
    bloch_nonunitary,
    diagonalize,
    eigensystem_arrays,
    floquet_matrix,
)
from .lattice import CoinAngles, MomentumGrid, PositionState, TimeGrid

FLAT_BAND_TOL = 1e-10

_REGIMES = ("pure", "mixed", "nonunitary")


def _coerce_angles(value) -> CoinAngles:
    if isinstance(value, CoinAngles):
        return value
    return CoinAngles(*value)


@dataclass(frozen=True)
class QuenchSpec:
    """Preparation walk, evolution walk, and the preparation regime.

    regime "pure": single eigenstate of the lossless preparation walk.
    regime "mixed": classical mixture of both preparation eigenstates with
    weight mix_p on the lower band. regime "nonunitary": both walks carry the
    same loss and the prepared state is the right eigenvector of the lossy
    preparation walk.
    """

    initial_angles: CoinAngles
    final_angles: CoinAngles
    loss: float = 0.0
    regime: str = "pure"
    mix_p: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "initial_angles", _coerce_angles(self.initial_angles))
        object.__setattr__(self, "final_angles", _coerce_angles(self.final_angles))
        if self.regime not in _REGIMES:
            raise ConfigError(f"regime must be one of {_REGIMES}, got {self.regime!r}")
        if self.regime == "nonunitary":
            if not 0 < self.loss < 1:
                raise ConfigError(f"nonunitary regime needs loss in (0, 1), got {self.loss}")
        elif self.loss != 0:
            raise ConfigError(f"{self.regime} regime is lossless, got loss {self.loss}")
        if self.regime == "mixed":
            if self.mix_p is None or not 0 <= self.mix_p <= 1:
                raise ConfigError(f"mixed regime needs mix_p in [0, 1], got {self.mix_p}")
        elif self.mix_p is not None:
            raise ConfigError(f"mix_p only applies to the mixed regime")
        _require_flat_band(self.initial_angles, self.initial_loss)

    @property
    def initial_loss(self) -> float:
        return self.loss if self.regime == "nonunitary" else 0.0

    @property
    def is_unitary(self) -> bool:
        return self.regime != "nonunitary"


def _require_flat_band(angles: CoinAngles, l: float) -> None:
    """The prepared eigenstate must not depend on momentum: the preparation
    walk's Bloch vector has to be constant across the zone."""
    ks = np.linspace(-np.pi, np.pi, 17)
    parts = bloch_coefficients(angles, l, ks)
    spread = max(float(np.ptp(p)) for p in parts)
    if spread > FLAT_BAND_TOL:
        raise InvalidInitialProtocolError(
            f"preparation walk disperses (Bloch spread {spread:.2e}); "
            f"eigenstates are momentum dependent at angles ({angles.theta1}, {angles.theta2})"
        )


@dataclass(frozen=True)
class InitialState:
    kets: np.ndarray      # (m, 2) unit kets
    weights: np.ndarray   # (m,) summing to 1

    def density_matrix(self) -> np.ndarray:
        rho = np.zeros((2, 2), dtype=complex)
        for w, ket in zip(self.weights, self.kets):
            rho += w * np.outer(ket, ket.conj())
        return rho


def _phase_fixed(ket: np.ndarray) -> np.ndarray:
    ket = ket / np.linalg.norm(ket)
    piv = ket[np.argmax(np.abs(ket))]
    return ket * (abs(piv) / piv)


def initial_state(spec: QuenchSpec) -> InitialState:
    """Prepared coin state(s). The kets come from the lower branch of the
    preparation walk (and the upper one for mixtures), momentum independent
    because the band is flat."""
    b = bloch_nonunitary(spec.initial_angles, spec.initial_loss, 0.0)
    es = diagonalize(b)
    psi_m = _phase_fixed(es.right_minus)
    if spec.regime == "pure":
        return InitialState(np.array([psi_m]), np.array([1.0]))
    if spec.regime == "mixed":
        psi_p = _phase_fixed(es.right_plus)
        return InitialState(np.array([psi_m, psi_p]),
                            np.array([spec.mix_p, 1 - spec.mix_p]))
    return InitialState(np.array([psi_m]), np.array([1.0]))


@dataclass(frozen=True)
class SectorTable:
    """Per-momentum quench data: quasienergies, two-mode coefficients, and
    the raw band overlaps they are built from.

    weight_minus/weight_plus drive the fixed-point and critical-momentum
    searches: for unitary regimes they are the pure-state band populations
    |c-|^2, |c+|^2 (mixture independent), for lossy quenches the moduli
    |A|, |B| of the biorthogonal coefficients.
    """

    spec: QuenchSpec
    k: np.ndarray
    energy: np.ndarray
    A: np.ndarray
    B: np.ndarray
    ct_plus: np.ndarray
    ct_minus: np.ndarray
    b_plus: np.ndarray
    b_minus: np.ndarray
    weight_minus: np.ndarray
    weight_plus: np.ndarray

    @property
    def energy_is_real(self) -> bool:
        return bool(np.abs(self.energy.imag).max() < 1e-9)

    def loschmidt(self, times) -> np.ndarray:
        """(n_k, n_t) table of G_k(t)."""
        return two_mode_table(self.A, self.B, self.energy,
                              np.asarray(times, dtype=float))


def overlaps(spec: QuenchSpec, grid: MomentumGrid | None = None) -> SectorTable:
    """Band-overlap data of the prepared state with the post-quench walk."""
    grid = grid or MomentumGrid()
    ks = grid.samples
    loss_f = spec.loss if spec.regime == "nonunitary" else 0.0
    es = eigensystem_arrays(spec.final_angles, loss_f, ks)
    init = initial_state(spec)
    psi0 = init.kets[0]

    ct_p = es["chi_p"] @ psi0
    ct_m = es["chi_m"] @ psi0
    b_p = es["psi_p"] @ psi0.conj()
    b_m = es["psi_m"] @ psi0.conj()

    if spec.regime == "nonunitary":
        A = b_m * ct_m
        B = b_p * ct_p
        wm, wp = np.abs(A), np.abs(B)
    else:
        a = np.abs(ct_m) ** 2
        b = np.abs(ct_p) ** 2
        if spec.regime == "pure":
            A, B = a.astype(complex), b.astype(complex)
        else:
            p = spec.mix_p
            A = (p * a + (1 - p) * b).astype(complex)
            B = (p * b + (1 - p) * a).astype(complex)
        wm, wp = a, b
    return SectorTable(spec, ks, es["energy"], A, B, ct_p, ct_m, b_p, b_m, wm, wp)


def evolve_k(spec: QuenchSpec, k: float, n_steps: int) -> np.ndarray:
    """Prepared ket(s) after n integer steps of the post-quench walk at
    momentum k; shape (m, 2) matching the initial kets."""
    if n_steps < 0:
        raise ConfigError("step count must be nonnegative")
    loss_f = spec.loss if spec.regime == "nonunitary" else 0.0
    u = floquet_matrix(spec.final_angles, loss_f, k)
    ut = np.linalg.matrix_power(u, n_steps)
    return initial_state(spec).kets @ ut.T


def loschmidt_k(spec: QuenchSpec, k: float, t, method: str = "two_mode"):
    """Return-amplitude overlap G_k(t).

    method "two_mode" interpolates continuously in t through the quasienergy
    phases; "direct" takes integer matrix powers (cross-check path).
    """
    if method == "direct":
        steps = int(round(float(t)))
        if abs(steps - float(t)) > 1e-9:
            raise ConfigError("direct evolution needs integer step counts")
        init = initial_state(spec)
        evolved = evolve_k(spec, k, steps)
        vals = np.einsum("ij,ij->i", init.kets.conj(), evolved)
        return complex(np.dot(init.weights, vals))
    if method != "two_mode":
        raise ConfigError(f"unknown loschmidt method {method!r}")
    loss_f = spec.loss if spec.regime == "nonunitary" else 0.0
    es = eigensystem_arrays(spec.final_angles, loss_f, np.array([float(k)]))
    init = initial_state(spec)
    psi0 = init.kets[0]
    ct_p = complex(es["chi_p"][0] @ psi0)
    ct_m = complex(es["chi_m"][0] @ psi0)
    if spec.regime == "nonunitary":
        A = complex(es["psi_m"][0] @ psi0.conj()) * ct_m
        B = complex(es["psi_p"][0] @ psi0.conj()) * ct_p
    else:
        a, b = abs(ct_m) ** 2, abs(ct_p) ** 2
        if spec.regime == "mixed":
            p = spec.mix_p
            A, B = p * a + (1 - p) * b, p * b + (1 - p) * a
        else:
            A, B = a, b
    e = complex(es["energy"][0])
    t = np.asarray(t, dtype=float)
    out = A * np.exp(1j * e * t) + B * np.exp(-1j * e * t)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LoschmidtField:
    """G_k(t) sampled on a momentum x time grid."""

    spec: QuenchSpec
    k: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (n_k, n_t)

    def time_index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise ConfigError(f"t = {t} is not on the time grid")
        return i

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "t", "re_G", "im_G", "abs_G"])
            for i, k in enumerate(self.k):
                for j, t in enumerate(self.times):
                    g = self.values[i, j]
                    w.writerow([f"{k:.12g}", f"{t:.12g}", f"{g.real:.12g}",
                                f"{g.imag:.12g}", f"{abs(g):.12g}"])


def loschmidt_field(spec: QuenchSpec, grid: MomentumGrid | None = None,
                    tgrid: TimeGrid | None = None) -> LoschmidtField:
    grid = grid or MomentumGrid()
    tgrid = tgrid or TimeGrid()
    table = overlaps(spec, grid)
    times = tgrid.samples
    return LoschmidtField(spec, table.k, times, table.loschmidt(times))


@dataclass(frozen=True)
class PositionEvolution:
    """Real-space walk history from a localized start at the origin.

    states[t] holds the (possibly unnormalized, for lossy walks) spinor field
    after t steps for each prepared ket.
    """

    spec: QuenchSpec
    n_steps: int
    kets: np.ndarray
    weights: np.ndarray
    histories: tuple  # per ket: tuple of PositionState, length n_steps+1

    def pbar(self, t: int) -> np.ndarray:
        """Interference observable vs position after t steps.

        Per prepared ket this is sum_c conj(a_c) psi_c(x, t); the momentum
        transform of the weighted sum returns G_k(t) at integer times.
        """
        out = None
        for w, ket, hist in zip(self.weights, self.kets, self.histories):
            st = hist[t]
            z = ket.conj() @ st.amplitudes
            out = w * z if out is None else out + w * z
        return out

    def sites(self, t: int) -> np.ndarray:
        return self.histories[0][t].sites

    def loschmidt(self, grid: MomentumGrid, t: int) -> np.ndarray:
        """G_k(t) from the position-space field (Fourier cross-check)."""
        z = self.pbar(t)
        x = self.sites(t)
        return np.exp(-1j * np.outer(grid.samples, x)) @ z

    def write_csv(self, path) -> None:
        # amplitudes of the primary (lower-branch) preparation; mixtures have
        # no single spinor field, their other branch only enters via pbar
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "re_H", "im_H", "re_V", "im_V"])
            for t in range(self.n_steps + 1):
                amp = self.histories[0][t].amplitudes
                for j, x in enumerate(self.sites(t)):
                    w.writerow([t, int(x),
                                f"{amp[0, j].real:.12g}", f"{amp[0, j].imag:.12g}",
                                f"{amp[1, j].real:.12g}", f"{amp[1, j].imag:.12g}"])


def _step_params(angles: CoinAngles, l: float):
    if l == 0:
        return (angles.theta1 / 2, angles.theta2, 0.0, angles.theta1 / 2, 1.0, 1.0)
    r = np.sqrt(1 - l)
    return (angles.theta1 / 2, angles.theta2 / 2, angles.theta2 / 2,
            angles.theta1 / 2, r, (1 - l) ** -0.25)


def evolve_position(spec: QuenchSpec, n_steps: int,
                    plate_angles: np.ndarray | None = None) -> PositionEvolution:
    """Run the post-quench walk in real space from a localized origin state.

    plate_angles, when given, is a (n_steps, 4) per-step override of the four
    coin plate angles (entry, mid, mid, exit); used to model miscalibrated
    plates. Lossless walks ignore the second mid angle.
    """
    if n_steps < 0:
        raise ConfigError("step count must be nonnegative")
    loss_f = spec.loss if spec.regime == "nonunitary" else 0.0
    base = _step_params(spec.final_angles, loss_f)
    init = initial_state(spec)
    histories = []
    for ket in init.kets:
        psi = ket.reshape(2, 1).astype(complex)
        hist = [PositionState(0, psi.copy())]
        for s in range(n_steps):
            if plate_angles is None:
                a_en, a_m1, a_m2, a_ex = base[:4]
            else:
                a_en, a_m1, a_m2, a_ex = plate_angles[s]
            psi = walk_step(psi, a_en, a_m1, a_m2, a_ex, base[4], base[5])
            hist.append(PositionState(-2 * (s + 1), psi.copy()))
        histories.append(tuple(hist))
    return PositionEvolution(spec, n_steps, init.kets, init.weights, tuple(histories))


def pbar_table(spec: QuenchSpec, n_steps: int) -> dict:
    """P-bar interference profiles for t = 0..n_steps, keyed by step."""
    evo = evolve_position(spec, n_steps)
    return {t: (evo.sites(t), evo.pbar(t)) for t in range(n_steps + 1)}
