import numpy as np
import pytest

from lorentz_inverse.errors import StepFailure
from lorentz_inverse.integrate import dopri5


def oscillator(t, y):
    return np.array([y[1], -y[0]])


def test_harmonic_oscillator_nodes_and_dense_output():
    sol = dopri5(oscillator, 0.0, [1.0, 0.0], 10.0, rtol=1e-10, atol=1e-12)
    assert sol.t[0] == 0.0 and sol.t[-1] == 10.0
    assert np.max(np.abs(sol.y[:, 0] - np.cos(sol.t))) < 1e-8
    tq = np.linspace(0, 10, 1001)
    assert np.max(np.abs(sol(tq)[:, 0] - np.cos(tq))) < 1e-8
    assert sol(10.0)[0] == sol.y[-1, 0]


def test_grid_replay_reproduces_adaptive_run():
    sol = dopri5(oscillator, 0.0, [1.0, 0.0], 3.0)
    again = dopri5(oscillator, 0.0, [1.0, 0.0], 3.0, grid=sol.t)
    assert np.max(np.abs(again.y - sol.y)) < 1e-15
    assert again.rejected == 0


def test_on_step_can_abort():
    def stop(t, y):
        if t > 1.0:
            raise RuntimeError("stop")
    with pytest.raises(RuntimeError):
        dopri5(oscillator, 0.0, [1.0, 0.0], 5.0, on_step=stop)


def test_blowup_is_step_failure():
    with pytest.raises(StepFailure):
        dopri5(lambda t, y: y * y, 0.0, [1.0], 2.0)


def test_order_of_accuracy():
    # fixed steps: global error should drop by about 2^5 per halving
    errs = []
    exact = np.array([np.cos(5.0), -np.sin(5.0)])
    for m in (10, 20, 40, 80):
        sol = dopri5(oscillator, 0.0, [1.0, 0.0], 5.0, grid=np.linspace(0, 5, m + 1))
        errs.append(np.linalg.norm(sol.y[-1] - exact))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 4.8)
