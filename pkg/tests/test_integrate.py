import numpy as np
import pytest

from affine_entropy import catalog, lie
from affine_entropy.errors import EscapeError
from affine_entropy.integrate import n_steps_for, rk4


def test_fourth_order_convergence():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    exact = np.array([[np.cos(1), np.sin(1)], [-np.sin(1), np.cos(1)]])
    errs = [np.abs(rk4(lambda g, _: A @ g, np.eye(2), 1 / n, n) - exact).max() for n in (10, 20)]
    assert 14 < errs[0] / errs[1] < 18


def test_records_include_initial_state():
    g, rec = rk4(lambda g, _: g, np.eye(1), 0.1, 10, record_every=5)
    assert rec.shape == (3, 1, 1)
    assert rec[0, 0, 0] == 1.0
    assert rec[-1, 0, 0] == pytest.approx(np.e, rel=1e-6)


def test_escape_is_reported():
    with pytest.raises(EscapeError):
        rk4(lambda g, _: 5 * g, np.eye(1), 0.01, 1000, blowup_norm=1e3)


def test_monitor_projects_back_to_group():
    H = catalog.heis3()
    g0 = lie.exp_point(H, [0.1, 0.2, 0.3])
    g0 = g0 + 1e-6 * np.tril(np.ones((3, 3)), -1)  # off the group
    g = rk4(lambda g, _: np.zeros_like(g), g0, 0.1, 100, table=H)
    assert lie.group_residual(H, g) < 1e-12


def test_n_steps():
    assert n_steps_for(1.0, 1e-3) == 1000
    assert n_steps_for(0.0, 1e-3) == 0
    with pytest.raises(ValueError):
        n_steps_for(1.0, 0.0)
