from datetime import date

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from contactseir.ode import CaseSeries, SeirParams, fit_beta, integrate_seir, mse, read_case_series

N = 17800
INIT = (17796, 3, 1, 0)
BASE = SeirParams(beta=0.78, sigma=0.2, gamma=1 / 14, n=N)


def test_no_transmission():
    traj = integrate_seir(SeirParams(0.0, 0.2, 1 / 14, N), INIT, 400)
    assert np.allclose(traj.S, INIT[0])
    assert np.all(np.diff(traj.E) <= 1e-12)
    assert traj.I.argmax() > 0
    assert traj.R[-1] == pytest.approx(4, abs=1e-6)


def test_disease_free_equilibrium():
    traj = integrate_seir(BASE, (N, 0, 0, 0), 50)
    assert np.allclose(traj.values, [N, 0, 0, 0])


def test_population_conserved():
    traj = integrate_seir(BASE, INIT, 250)
    assert np.allclose(traj.values.sum(axis=1), N, rtol=1e-10)
    assert np.all(np.diff(traj.S) <= 1e-9)
    assert np.all(np.diff(traj.R) >= -1e-9)


def test_matches_adaptive_solver():
    days = 250
    traj = integrate_seir(BASE, INIT, days)

    def rhs(_, y):
        s, e, i, _r = y
        f = BASE.beta * s * i / N
        return [-f, f - BASE.sigma * e, BASE.sigma * e - BASE.gamma * i, BASE.gamma * i]

    ref = solve_ivp(rhs, (0, days), INIT, t_eval=np.arange(days + 1), rtol=1e-10, atol=1e-8, method="DOP853")
    assert np.max(np.abs(traj.values - ref.y.T)) < 1e-3


def test_step_refinement_converges():
    coarse = integrate_seir(BASE, INIT, 120, steps_per_day=100)
    fine = integrate_seir(BASE, INIT, 120, steps_per_day=1000)
    assert np.max(np.abs(coarse.values - fine.values)) < 1e-4


def test_peak_is_argmax_of_I():
    traj = integrate_seir(BASE, INIT, 250)
    value, day = traj.peak()
    assert day == int(np.argmax(traj.I)) and value == traj.I[day]


@pytest.mark.parametrize("init", [(N, -1, 1, 0), (N, 3, 1, 0)])
def test_bad_init(init):
    with pytest.raises(ValueError):
        integrate_seir(BASE, init, 10)


def test_fit_beta_self_consistent():
    target = integrate_seir(BASE, INIT, 60).I
    best, betas, errors = fit_beta(CaseSeries(date(2020, 3, 1), target), 0.2, 1 / 14, N, INIT)
    assert best == pytest.approx(0.78)
    assert len(betas) == 51 and errors.min() == pytest.approx(0.0, abs=1e-12)


def test_fit_beta_cumulative_self_consistent():
    traj = integrate_seir(SeirParams(0.65, 0.2, 1 / 14, N), INIT, 60)
    best, _, _ = fit_beta(CaseSeries(date(2020, 3, 1), traj.I + traj.R), 0.2, 1 / 14, N, INIT, cumulative=True)
    assert best == pytest.approx(0.65)


def test_fit_beta_zero_series_returns_lo():
    series = CaseSeries(date(2020, 3, 1), np.zeros(40))
    best, betas, errors = fit_beta(series, 0.2, 1 / 14, N, INIT)
    # oracle: the exhaustive grid minimum
    assert best == betas[int(np.argmin(errors))] == pytest.approx(0.5)


def test_fit_beta_empty_series():
    with pytest.raises(ValueError):
        fit_beta(CaseSeries(date(2020, 3, 1), []), 0.2, 1 / 14, N, INIT)


def test_case_series_window_and_reader(tmp_path):
    p = tmp_path / "cases.csv"
    p.write_text("date,infected\n2020-03-01,10\n2020-03-02,120\n2020-03-03,150\n2020-03-04,90\n")
    series = read_case_series(p)
    w = series.window(100, end=date(2020, 3, 3))
    assert w.start == date(2020, 3, 2) and w.counts.tolist() == [120, 150]


def test_case_series_gap_rejected(tmp_path):
    p = tmp_path / "cases.csv"
    p.write_text("date,infected\n2020-03-01,10\n2020-03-03,12\n")
    with pytest.raises(ValueError):
        read_case_series(p)


def test_mse():
    assert mse([1, 2, 3], [1, 2, 5]) == pytest.approx(4 / 3)


def test_base_epidemic_peak_exceeds_three_tenths():
    value, day = integrate_seir(BASE, INIT, 250).peak()
    assert value > 0.3 * N and 0 < day < 250
