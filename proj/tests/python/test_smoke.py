import math

import numpy as np
import pytest

import fradrc


def sec5_design(bank=fradrc.FilterBank.Fitted):
    orders = fradrc.derive_orders(2, (6, 5), (6, 5))
    eso = fradrc.make_ifo_eso(orders, 1200.0, 5.0, 8000.0)
    eso.bank = bank
    trk = fradrc.tracking_from_gains(orders, 1.2e6, [4000.0])
    return fradrc.PlantModel([10.0, 10.0], 5.0), fradrc.AdrcDesign(eso, trk)


def test_gl_coefficients_match_binomial_recursion():
    c = fradrc.gl_coefficients(0.5, 5)
    expected = [1.0]
    for j in range(1, 6):
        expected.append(expected[-1] * (1 - 1.5 / j))
    assert c == pytest.approx(expected, rel=1e-15)


def test_poly_roots_agree_with_numpy():
    rng = np.random.default_rng(7)
    for _ in range(20):
        c = rng.normal(size=6)
        ours = np.sort_complex(np.array(fradrc.poly_roots(list(c))))
        ref = np.sort_complex(np.roots(c))
        assert np.allclose(ours, ref, atol=1e-8)


def test_orders_and_gains():
    o = fradrc.derive_orders(2, (6, 5), (6, 5))
    assert (o.n, o.gamma.num, o.gamma.den) == (2, 4, 5)
    assert fradrc.eso_gains(3, 2.0) == [6.0, 12.0, 8.0]
    with pytest.raises(fradrc.OrderConstraint):
        fradrc.derive_orders(2, 2.5, 1.2)


def test_closed_loop_sector_stable():
    plant, design = sec5_design()
    cp = fradrc.char_poly_closed(plant, design)
    rep = fradrc.sector_check(cp)
    assert rep.verdict == fradrc.Verdict.Stable
    assert rep.min_arg_margin > 0


def test_open_loop_margins():
    plant, design = sec5_design()
    exact, approx = fradrc.open_loop(plant, design)
    m = fradrc.margins(exact)
    assert m.omega_gc == pytest.approx(115.40696739, rel=1e-6)
    assert m.phase_margin == pytest.approx(71.269116915, rel=1e-6)
    # Perfect-estimation loop kp / (s^1.2 (s^0.8 + 4000)), crossover by bisection on the magnitude.
    def tail(w):
        return 4000.0 + w**0.8 * complex(math.cos(0.4 * math.pi), math.sin(0.4 * math.pi))

    lo, hi = 10.0, 1000.0
    for _ in range(200):
        w = math.sqrt(lo * hi)
        if 1.2e6 / (w ** 1.2 * abs(tail(w))) > 1:
            lo = w
        else:
            hi = w
    ma = fradrc.margins(approx)
    assert ma.omega_gc == pytest.approx(w, rel=1e-8)
    assert ma.phase_margin == pytest.approx(180 - 108 - math.degrees(math.atan2(tail(w).imag, tail(w).real)), abs=1e-6)


def test_routh_matches_roots():
    c = [1.0, 6.0, 11.0, 6.0]
    assert fradrc.routh_table(c).hurwitz
    assert not fradrc.routh_table([1.0, -1.0, 1.0]).hurwitz


def test_fitted_integrator_tracks_ideal():
    band = fradrc.Band(1.0, 2513.0)
    f = fradrc.iir_fit(-0.5, 8000.0, 6, band)
    mag_db, phase_deg = fradrc.ideal_deviation(f, -0.5, band)
    assert mag_db < 1.0 and phase_deg < 3.0


def test_simulation_tracks_reference():
    plant, design = sec5_design()
    sim = fradrc.closed_loop_simulate(plant, design, 1.0, fradrc.DisturbanceProfile.step(0.3, 50.0), 1 / 8000, 0.6)
    assert not sim.diverged
    assert len(sim.t) == 4801
    m = fradrc.step_metrics(sim, 1.0, fradrc.DisturbanceProfile.step(0.3, 50.0))
    assert m.settled and m.steady_state_error < 1.0
    assert all(math.isfinite(v) for v in sim.y)


def test_plant_steady_state():
    plant = fradrc.PlantModel([2.0], 1.0)
    y = fradrc.simulate_plant(plant, [1.0] * 2001, dt=0.005, T=10.0)
    assert y[-1] == pytest.approx(0.5, abs=1e-6)


def test_errors_are_typed():
    with pytest.raises(fradrc.InvalidArgument):
        fradrc.gl_fir(0.5, -1.0, 10)
    assert issubclass(fradrc.NotFound, fradrc.Error)
