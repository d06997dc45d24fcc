import numpy as np
import pytest

from dqptwalk.errors import ConfigError
from dqptwalk.measurement import (
    ErrorModel,
    dephase,
    monte_carlo_errorbars,
    perturb_protocol,
    poisson_counts,
    reconstruct_pbar,
    simulate_measurement_probs,
)
from dqptwalk.quench import QuenchSpec, pbar_table

FLAT = (np.pi / 4, -np.pi / 2)
SPEC = QuenchSpec(FLAT, (-np.pi / 2, 3 * np.pi / 8))


class TestErrorModel:
    def test_defaults(self):
        m = ErrorModel()
        assert m.wp_angle_tol == pytest.approx(np.deg2rad(0.1))
        assert m.path_loss_tol == pytest.approx(0.02)
        assert m.total_coincidences == 40000
        assert m.dephasing_eta == pytest.approx(0.97)
        assert m.mc_samples == 1000

    def test_validation(self):
        with pytest.raises(ConfigError):
            ErrorModel(wp_angle_tol=-0.1)
        with pytest.raises(ConfigError):
            ErrorModel(dephasing_eta=1.2)
        with pytest.raises(ConfigError):
            ErrorModel(total_coincidences=-5)

    def test_silent_strips_all_noise(self):
        m = ErrorModel(seed=9).silent()
        assert m.wp_angle_tol == 0
        assert m.path_loss_tol == 0
        assert m.total_coincidences == 0
        assert m.dephasing_eta == 1.0
        assert m.seed == 9


def test_dephase_scales_coherences():
    rho = np.array([[0.6, 0.2 - 0.1j], [0.2 + 0.1j, 0.4]])
    out = dephase(rho, 0.75)
    assert out[0, 0] == pytest.approx(0.6)
    assert out[0, 1] == pytest.approx((2 * 0.75 - 1) * (0.2 - 0.1j))
    assert np.allclose(dephase(rho, 1.0), rho)
    # eta = 1/2 is the fully scrambled analyzer
    assert abs(dephase(rho, 0.5)[0, 1]) == 0
    with pytest.raises(ConfigError):
        dephase(np.array([[0.9, 0.0], [0.0, 0.9]]), 0.9)


def test_perturb_protocol_shapes_and_bounds(rng):
    em = ErrorModel()
    run = perturb_protocol(SPEC, em, rng, n_steps=7)
    assert run.plate_angles.shape == (7, 4)
    assert run.basis_deltas.shape == (4,)
    assert run.transmissions.shape == (4,)
    # unitary protocol has no partial-measurement stage to misalign
    assert np.all(run.plate_angles[:, 2] == 0)
    assert np.abs(run.basis_deltas).max() <= em.wp_angle_tol
    assert np.abs(run.transmissions - 1).max() <= em.path_loss_tol


def test_perturb_protocol_reproducible():
    em = ErrorModel()
    a = perturb_protocol(SPEC, em, np.random.default_rng(3), n_steps=5)
    b = perturb_protocol(SPEC, em, np.random.default_rng(3), n_steps=5)
    assert np.array_equal(a.plate_angles, b.plate_angles)
    assert np.array_equal(a.transmissions, b.transmissions)


def test_poisson_counts_statistics(rng):
    p = np.array([0.1, 0.4, 0.0])
    draws = np.array([poisson_counts(p, 40000, rng) for _ in range(200)])
    assert np.abs(draws.mean(axis=0) - p).max() < 0.01
    assert np.all(draws[:, 2] == 0)
    with pytest.raises(ConfigError):
        poisson_counts(p, 0, rng)


def test_round_trip_reconstruction():
    for p in (0.7, 1.0):
        s = SPEC if p == 1.0 else QuenchSpec(
            FLAT, (-np.pi / 2, 3 * np.pi / 8), regime="mixed", mix_p=p)
        tab = pbar_table(s, 4)
        for t, (sites, pb) in tab.items():
            for j, x in enumerate(sites):
                probs = simulate_measurement_probs(s, int(x), int(t))
                assert reconstruct_pbar(probs) == pytest.approx(pb[j], abs=1e-12)


def test_probs_outside_window_rejected():
    with pytest.raises(ConfigError):
        simulate_measurement_probs(SPEC, 99, 2)
    with pytest.raises(ConfigError):
        simulate_measurement_probs(SPEC, 0, -1)


def test_dephasing_shrinks_interference():
    # pbar lives entirely in the arm coherences, so the analyzer contrast
    # eta rescales it by exactly 2 eta - 1
    em = ErrorModel()
    ideal = reconstruct_pbar(simulate_measurement_probs(SPEC, -2, 4))
    fuzzy = reconstruct_pbar(simulate_measurement_probs(
        SPEC, -2, 4, error_free=False, error_model=em))
    assert abs(ideal) > 0.4
    assert fuzzy == pytest.approx((2 * 0.97 - 1) * ideal, abs=1e-9)


class TestMonteCarlo:
    def test_sample_floor(self):
        with pytest.raises(ConfigError):
            monte_carlo_errorbars(SPEC, "rate_function",
                                  error_model=ErrorModel(mc_samples=10))

    def test_unknown_quantity(self):
        with pytest.raises(ConfigError):
            monte_carlo_errorbars(SPEC, "entropy",
                                  error_model=ErrorModel(mc_samples=100))

    def test_silent_model_gives_zero_bars(self):
        em = ErrorModel(mc_samples=100).silent()
        res = monte_carlo_errorbars(SPEC, "rate_function", error_model=em)
        for _, _, _, ep, en in res.rows:
            assert ep == 0 and en == 0

    def test_reproducible_and_sorted(self):
        em = ErrorModel(mc_samples=100, seed=17)
        a = monte_carlo_errorbars(SPEC, "pbar", error_model=em, positions=(0, 2))
        b = monte_carlo_errorbars(SPEC, "pbar", error_model=em, positions=(0, 2))
        assert a.rows == b.rows
        assert list(a.rows) == sorted(a.rows, key=lambda r: (r[0], r[1]))
        labels = {r[0] for r in a.rows}
        assert labels == {"re_pbar_x0", "im_pbar_x0", "re_pbar_x2", "im_pbar_x2"}

    def test_csv_contract(self, tmp_path):
        em = ErrorModel(mc_samples=100, seed=2)
        res = monte_carlo_errorbars(SPEC, "dtop", error_model=em)
        out = tmp_path / "bars.csv"
        res.write_csv(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "quantity,t,center,err_plus,err_minus,n_samples,seed"
        assert all(row.split(",")[0] == "dtop_m1" for row in lines[1:])
        assert len(lines) == 1 + 8
