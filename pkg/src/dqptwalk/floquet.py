"""Momentum-space Floquet operators, spectra, PT classification, and
topological invariants of the split-step walk family.

The one-step operator at momentum k is, in Bloch form,
O = d0*s0 - i d1*s1 - i d2*s2 - i d3*s3 with

    d0 = alpha(cos2k cos t1 cos t2 - sin t1 sin t2)
    d1 = i beta
    d2 = alpha(cos2k cos t2 sin t1 + cos t1 sin t2)
    d3 = -alpha sin2k cos t2

where alpha = gamma(1+sqrt(1-l))/2, beta = gamma(1-sqrt(1-l))/2 and
gamma = (1-l)^(-1/4). The lossless case has alpha = 1, beta = 0 and a real
unit Bloch vector. alpha^2 - beta^2 = 1 keeps det = 1 for every l.
"""
from __future__ import annotations

import concurrent.futures
import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .backend import phase_increments
from .errors import (
    ConfigError,
    DegenerateSpectrumError,
    InsufficientResolutionError,
    PTBrokenError,
    TopologicalBoundaryError,
)
from .lattice import (
    GAP_TOL,
    STRUCT_TOL,
    CoinAngles,
    MomentumGrid,
    coin_matrix,
    loss_matrix,
    shift_matrix,
)

# closed-form eigenvectors degenerate as cos(2*Omega) -> 0
CLOSED_FORM_COS2OMEGA_MIN = 1e-6
# integer extraction from accumulated phase
WINDING_RESIDUAL_MAX = 0.01
PT_TOL = 1e-9

_SQ2 = np.sqrt(2.0)


def alpha_beta(l: float) -> tuple[float, float]:
    if not 0 <= l < 1:
        raise ConfigError(f"loss must be in [0, 1), got {l}")
    g = (1 - l) ** -0.25
    r = np.sqrt(1 - l)
    return g * (1 + r) / 2, g * (1 - r) / 2


def step_gamma(l: float) -> float:
    """Per-step rescaling that restores det = 1 in the lossy walk."""
    if not 0 <= l < 1:
        raise ConfigError(f"loss must be in [0, 1), got {l}")
    return (1 - l) ** -0.25


@dataclass(frozen=True)
class BlochDecomposition:
    """Coefficients of O = d0*s0 - i(d1*s1 + d2*s2 + d3*s3)."""

    d0: complex
    d1: complex
    d2: complex
    d3: complex
    is_unitary: bool

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.d0 - 1j * self.d3, -1j * self.d1 - self.d2],
                [-1j * self.d1 + self.d2, self.d0 + 1j * self.d3],
            ]
        )

    @property
    def norm_residual(self) -> float:
        return abs(self.d0**2 + self.d1**2 + self.d2**2 + self.d3**2 - 1)


def bloch_coefficients(angles: CoinAngles, l: float, k):
    """Vectorized (d0, beta, d2, d3) over scalar or array k; d1 = i*beta."""
    if not isinstance(angles, CoinAngles):
        angles = CoinAngles(*angles)
    al, be = alpha_beta(l)
    c1, s1 = np.cos(angles.theta1), np.sin(angles.theta1)
    c2, s2 = np.cos(angles.theta2), np.sin(angles.theta2)
    c2k, s2k = np.cos(2 * np.asarray(k, dtype=float)), np.sin(2 * np.asarray(k, dtype=float))
    d0 = al * (c2k * c1 * c2 - s1 * s2)
    d2 = al * (c2k * c2 * s1 + c1 * s2)
    d3 = -al * s2k * c2
    return d0, be * np.ones_like(d0), d2, d3


def bloch_unitary(angles: CoinAngles, k: float) -> BlochDecomposition:
    d0, _, d2, d3 = bloch_coefficients(angles, 0.0, k)
    return BlochDecomposition(float(d0), 0.0, float(d2), float(d3), is_unitary=True)


def bloch_nonunitary(angles: CoinAngles, l: float, k: float) -> BlochDecomposition:
    d0, be, d2, d3 = bloch_coefficients(angles, l, k)
    return BlochDecomposition(float(d0), 1j * float(be), float(d2), float(d3), is_unitary=(l == 0))


def floquet_matrix(angles: CoinAngles, l: float, k: float) -> np.ndarray:
    """One-step operator as the explicit optical-element product.

    Lossless: C(t1/2) S C(t2) S C(t1/2). Lossy: the middle coin splits around
    the partial measurement and the product carries the gamma rescale.
    """
    if not isinstance(angles, CoinAngles):
        angles = CoinAngles(*angles)
    s = shift_matrix(k)
    outer = coin_matrix(angles.theta1 / 2)
    if l == 0:
        return outer @ s @ coin_matrix(angles.theta2) @ s @ outer
    half = coin_matrix(angles.theta2 / 2)
    return step_gamma(l) * (outer @ s @ half @ loss_matrix(l) @ half @ s @ outer)


@dataclass(frozen=True)
class BiorthogonalEigensystem:
    """Eigen data of one momentum sector.

    Left vectors are stored as row covectors: left_plus @ right_plus == 1.
    In the unitary case left vectors are the conjugated right vectors.
    """

    lambda_plus: complex
    lambda_minus: complex
    quasienergy: complex
    right_plus: np.ndarray
    right_minus: np.ndarray
    left_plus: np.ndarray
    left_minus: np.ndarray
    Omega: complex | None
    vartheta: float | None
    method: str

    def reconstruction(self) -> np.ndarray:
        return self.lambda_plus * np.outer(self.right_plus, self.left_plus) + (
            self.lambda_minus * np.outer(self.right_minus, self.left_minus)
        )


def _eigenvalues(d0):
    """lambda_pm = d0 -+ i sqrt(1 - d0^2), principal branch; E = i log(lambda_plus)."""
    s = np.sqrt((1 - d0) * (1 + d0) + 0j)
    lam_p = d0 - 1j * s
    lam_m = d0 + 1j * s
    return lam_p, lam_m, 1j * np.log(lam_p)


def diagonalize(b: BlochDecomposition) -> BiorthogonalEigensystem:
    d0 = b.d0
    if abs(d0 - 1) < GAP_TOL or abs(d0 + 1) < GAP_TOL:
        raise DegenerateSpectrumError(f"gap closed at d0 = {d0}")
    lam_p, lam_m, energy = _eigenvalues(d0)

    beta = complex(-1j * b.d1)
    d = np.sqrt(b.d2**2 + b.d3**2 + 0j)
    closed_ok = (
        abs(beta.imag) < STRUCT_TOL
        and abs(np.imag(d)) < STRUCT_TOL
        and np.real(d) > 0
        and beta.real / np.real(d) < 1.0
    )
    if closed_ok:
        sin2o = beta.real / np.real(d)
        cos2o = np.sqrt(1 - sin2o**2)
        if cos2o < CLOSED_FORM_COS2OMEGA_MIN:
            closed_ok = False
    if closed_ok:
        omega = np.arcsin(sin2o) / 2
        vth = float(np.angle(-np.real(b.d3) + 1j * np.real(b.d2)))
        norm = 1 / np.sqrt(2 * cos2o)
        ep, em = np.exp(1j * omega), np.exp(-1j * omega)
        eth = np.exp(1j * vth)
        # rotate the analysis frame back with V = exp(i pi/4 sigma_y)
        u0, u1 = norm * ep, norm * eth * em
        psi_p = np.array([(u0 - u1) / _SQ2, (u0 + u1) / _SQ2])
        u0, u1 = -norm * em, norm * eth * ep
        psi_m = np.array([(u0 - u1) / _SQ2, (u0 + u1) / _SQ2])
        u0, u1 = norm * ep, norm * em / eth
        chi_p = np.array([(u0 - u1) / _SQ2, (u0 + u1) / _SQ2])
        u0, u1 = -norm * em, norm * ep / eth
        chi_m = np.array([(u0 - u1) / _SQ2, (u0 + u1) / _SQ2])
        return BiorthogonalEigensystem(
            complex(lam_p), complex(lam_m), complex(energy),
            psi_p, psi_m, chi_p, chi_m,
            complex(omega), vth, "closed_form",
        )

    mat = b.as_matrix()
    lam, right = np.linalg.eig(mat)
    if abs(lam[0] - lam_p) > abs(lam[1] - lam_p):
        lam = lam[::-1]
        right = right[:, ::-1]
    if abs(lam[0] - lam[1]) < GAP_TOL:
        raise DegenerateSpectrumError("eigenvalues coincide; biorthogonal frame undefined")
    # fix scale and phase: unit norm, largest component real positive
    for j in range(2):
        col = right[:, j]
        col = col / np.linalg.norm(col)
        piv = col[np.argmax(np.abs(col))]
        right[:, j] = col * (abs(piv) / piv)
    left = np.linalg.inv(right)
    return BiorthogonalEigensystem(
        complex(lam[0]), complex(lam[1]), complex(energy),
        right[:, 0].copy(), right[:, 1].copy(), left[0].copy(), left[1].copy(),
        None, None, "generic",
    )


def eigensystem_arrays(angles: CoinAngles, l: float, ks: np.ndarray) -> dict:
    """Vectorized closed-form eigen data over a momentum array.

    Returns E, lambda_plus and (n, 2) eigenvector arrays psi_p/psi_m plus row
    covector arrays chi_p/chi_m. Points where the closed form is invalid
    (PT-broken or near-degenerate sectors) fall back to the scalar generic
    path one momentum at a time.
    """
    ks = np.asarray(ks, dtype=float)
    d0, be, d2, d3 = bloch_coefficients(angles, l, ks)
    lam_p, lam_m, energy = _eigenvalues(d0)

    d = np.hypot(d2, d3)
    with np.errstate(divide="ignore", invalid="ignore"):
        sin2o = np.where(d > 0, be / np.where(d > 0, d, 1.0), np.inf)
    ok = (d > 0) & (sin2o < 1.0)
    cos2o = np.sqrt(np.where(ok, 1 - sin2o**2, 1.0))
    ok &= cos2o >= CLOSED_FORM_COS2OMEGA_MIN

    omega = np.where(ok, np.arcsin(np.where(ok, sin2o, 0.0)) / 2, 0.0)
    vth = np.arctan2(d2, -d3)
    norm = 1 / np.sqrt(2 * cos2o)
    ep, em = np.exp(1j * omega), np.exp(-1j * omega)
    eth = np.exp(1j * vth)

    def frame(u0, u1):
        return np.stack(((u0 - u1) / _SQ2, (u0 + u1) / _SQ2), axis=-1)

    psi_p = frame(norm * ep, norm * eth * em)
    psi_m = frame(-norm * em, norm * eth * ep)
    chi_p = frame(norm * ep, norm * em / eth)
    chi_m = frame(-norm * em, norm * ep / eth)

    if not ok.all():
        for i in np.nonzero(~ok)[0]:
            es = diagonalize(
                BlochDecomposition(d0[i], 1j * be[i], d2[i], d3[i], is_unitary=(l == 0))
            )
            psi_p[i], psi_m[i] = es.right_plus, es.right_minus
            chi_p[i], chi_m[i] = es.left_plus, es.left_minus
    return {
        "k": ks, "d0": d0, "energy": energy,
        "lambda_plus": lam_p, "lambda_minus": lam_m,
        "psi_p": psi_p, "psi_m": psi_m, "chi_p": chi_p, "chi_m": chi_m,
        "closed_form": ok,
    }


def _gap_check(d0: np.ndarray) -> None:
    if (1 - d0.real**2).min() <= GAP_TOL:
        raise TopologicalBoundaryError("gap closes on the momentum grid; winding undefined")


def _integer_from_phase(total: float, what: str) -> int:
    raw = total / (2 * np.pi)
    nu = round(raw)
    if abs(raw - nu) >= WINDING_RESIDUAL_MAX:
        raise InsufficientResolutionError(
            f"{what} accumulated {raw:.6f} windings; not within {WINDING_RESIDUAL_MAX} of an integer"
        )
    return -nu


def winding_unitary(angles: CoinAngles, grid: MomentumGrid | None = None) -> int:
    """Winding of the Bloch vector's (d2, d3) components around the origin."""
    grid = grid or MomentumGrid()
    d0, _, d2, d3 = bloch_coefficients(angles, 0.0, grid.samples)
    _gap_check(d0)
    z = -d3 + 1j * d2
    z = np.append(z, z[0])
    if np.abs(z).min() < 1e-14:
        raise TopologicalBoundaryError("Bloch vector touches the winding axis")
    return _integer_from_phase(float(phase_increments(z).sum()), "winding")


def winding_global_berry(angles: CoinAngles, l: float, grid: MomentumGrid | None = None) -> int:
    """Winding number from the biorthogonal Berry phase summed over both bands.

    Cross-checked internally against the polar-angle accumulation of
    (d2, d3); both Brillouin-zone loops must give the same integer.
    """
    grid = grid or MomentumGrid()
    status, _ = pt_classify(angles, l, grid)
    if status != "unbroken":
        raise PTBrokenError(f"global Berry winding restricted to the unbroken regime ({status})")

    d0, _, d2, d3 = bloch_coefficients(angles, l, grid.samples)
    _gap_check(d0)
    z = -d3 + 1j * d2
    nu_polar = _integer_from_phase(float(phase_increments(np.append(z, z[0])).sum()), "polar route")

    es = eigensystem_arrays(angles, l, grid.samples)
    total = 0.0
    for psi, chi in ((es["psi_p"], es["chi_p"]), (es["psi_m"], es["chi_m"])):
        links = np.einsum("ij,ij->i", chi, np.roll(psi, -1, axis=0))
        total += float(np.angle(links).sum())
    nu_berry = _integer_from_phase(total, "Berry route")

    if nu_polar != nu_berry:
        raise InsufficientResolutionError(
            f"winding routes disagree: polar {nu_polar}, Berry {nu_berry}"
        )
    return nu_berry


def pt_classify(angles: CoinAngles, l: float, grid: MomentumGrid | None = None):
    """PT status from max_k d0^2: entirely real spectrum iff below 1."""
    grid = grid or MomentumGrid()
    ks = grid.samples
    d0 = bloch_coefficients(angles, l, ks)[0]
    sq = d0**2
    i = int(np.argmax(sq))
    lo, hi = ks[i] - grid.spacing, ks[i] + grid.spacing

    def neg_sq(k):
        return -bloch_coefficients(angles, l, k)[0] ** 2

    res = minimize_scalar(neg_sq, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    max_sq = max(float(sq[i]), float(-res.fun))
    if max_sq < 1 - PT_TOL:
        status = "unbroken"
    elif max_sq > 1 + PT_TOL:
        status = "broken"
    else:
        status = "boundary"
    return status, max_sq


@dataclass(frozen=True)
class PhaseDiagramCell:
    angles: CoinAngles
    loss: float
    winding: int | None
    pt_status: str
    min_gap: float


@dataclass(frozen=True)
class PhaseDiagram:
    cells: tuple[PhaseDiagramCell, ...]
    resolution: int

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta1", "theta2", "loss", "winding", "pt_status", "min_gap"])
            for c in self.cells:
                w.writerow([
                    f"{c.angles.theta1:.12g}", f"{c.angles.theta2:.12g}",
                    f"{c.loss:.12g}",
                    "" if c.winding is None else c.winding,
                    c.pt_status, f"{c.min_gap:.12g}",
                ])


def _cell_gap_pt(t1, t2, l):
    """Exact per-cell extremes: d0 is affine in cos2k, so the relevant
    extremes sit at cos2k = +-1."""
    al, _ = alpha_beta(l)
    a = np.cos(t1) * np.cos(t2)
    b = -np.sin(t1) * np.sin(t2)
    ends = np.array([al * (b - a), al * (b + a)])
    lo, hi = ends.min(), ends.max()
    crosses = (lo <= 1 <= hi) or (lo <= -1 <= hi)
    min_gap = 0.0 if crosses else float(np.abs(1 - ends**2).min())
    max_sq = float((ends**2).max())
    if max_sq < 1 - PT_TOL:
        status = "unbroken"
    elif max_sq > 1 + PT_TOL:
        status = "broken"
    else:
        status = "boundary"
    return min_gap, status


def phase_diagram_scan(
    theta1_range=(-np.pi, np.pi),
    theta2_range=(-np.pi, np.pi),
    resolution: int = 64,
    l: float = 0.0,
    n_k: int = 256,
    n_workers: int = 1,
) -> PhaseDiagram:
    """Winding/PT map over a coin-angle window; rows ordered row-major.

    Cells whose gap closes get a boundary marker and no winding.
    """
    if resolution < 32:
        raise ConfigError(f"resolution must be >= 32 per axis, got {resolution}")
    t1s = theta1_range[0] + (theta1_range[1] - theta1_range[0]) * np.arange(resolution) / resolution
    t2s = theta2_range[0] + (theta2_range[1] - theta2_range[0]) * np.arange(resolution) / resolution
    ks = MomentumGrid(max(n_k, 16)).samples
    c2k = np.cos(2 * ks)
    s2k = np.sin(2 * ks)
    al, _ = alpha_beta(l)

    def scan_row(i):
        t1 = t1s[i]
        row = []
        # winding of (d2, d3) for the whole theta2 row at once
        d2 = al * (np.outer(np.cos(t2s) * np.sin(t1), c2k) + (np.cos(t1) * np.sin(t2s))[:, None])
        d3 = -al * np.outer(np.cos(t2s), s2k)
        z = -d3 + 1j * d2
        z = np.concatenate([z, z[:, :1]], axis=1)
        inc = np.angle(z[:, 1:] * np.conj(z[:, :-1]))
        raw = inc.sum(axis=1) / (2 * np.pi)
        for j, t2 in enumerate(t2s):
            min_gap, status = _cell_gap_pt(t1, t2, l)
            if min_gap <= GAP_TOL:
                winding = None
                status = "boundary" if status == "unbroken" else status
            else:
                nu = round(float(raw[j]))
                winding = -nu if abs(raw[j] - nu) < WINDING_RESIDUAL_MAX else None
            row.append(PhaseDiagramCell(CoinAngles(t1, t2), l, winding, status, min_gap))
        return row

    if n_workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(scan_row, range(resolution)))
    else:
        rows = [scan_row(i) for i in range(resolution)]
    cells = tuple(c for row in rows for c in row)
    return PhaseDiagram(cells, resolution)
