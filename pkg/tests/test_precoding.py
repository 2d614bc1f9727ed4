import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize as sp_minimize
from scipy.optimize import minimize_scalar

from mimo_ee.admittance import DmaStructure, build_dma_structure
from mimo_ee.errors import DegenerateChannelError, InvalidArgumentError
from mimo_ee.geometry import build_constants, build_layout
from mimo_ee.optim import OptimizerSettings
from mimo_ee.precoding import (
    DmaObjective,
    HybridObjective,
    ResonanceCoordinates,
    grad_theta,
    grad_ys,
    mse_direct,
    mse_dma,
    mse_hybrid,
    regularized_gram,
    regularizer,
    wf_dma,
    wf_fd,
    wf_hybrid,
    wiener_filter,
)
from mimo_ee.topology import DmaChannelMap, PhaseNetwork, supplied_power

from conftest import crandn, rel_inf

C = build_constants(10e9)
LAM = C.wavelength
YG = 35.33


# -- closed form -----------------------------------------------------------------

def test_gram_trivial_cases(rng):
    np.testing.assert_allclose(regularized_gram(np.zeros((3, 4)), 0.02, 1.0, 2.0), 0.06 * np.eye(4))
    assert regularized_gram(np.array([[1.0]]), 0.02, 1.0, 2.0)[0, 0] == pytest.approx(1.02)
    h = crandn(rng, 4, 6)
    a = regularized_gram(h, 0.02, 1.0, YG)
    assert np.allclose(a, a.conj().T)
    assert np.linalg.eigvalsh(a)[0] >= regularizer(4, 0.02, 1.0, YG) * (1 - 1e-12)


def test_scalar_wiener_filter():
    sol = wf_fd(np.array([[1.0]]), 0.02, 1.0, 2.0)
    assert sol.B[0, 0] == pytest.approx(1.0, rel=1e-14)
    assert sol.beta == pytest.approx(1.02, rel=1e-14)
    assert sol.achieved_mse == pytest.approx(1 - 1 / 1.02, rel=1e-13)
    assert sol.achieved_mse == pytest.approx(0.019608, abs=5e-7)


def test_noiseless_limit(rng):
    u, _, vh = np.linalg.svd(crandn(rng, 3, 5), full_matrices=False)
    sol = wf_fd(u @ vh, 1e-12, 1.0, YG)
    assert sol.achieved_mse < 1e-9


def test_fd_is_consistent_with_direct_objective(rng):
    h = crandn(rng, 3, 6)
    sol = wf_fd(h, 0.05, 2.0, YG)
    assert mse_direct(h, sol.B, sol.beta, 0.05) == pytest.approx(sol.achieved_mse, rel=1e-12)
    assert supplied_power(sol.B, YG) == pytest.approx(2.0, rel=1e-12)


def _best_beta_mse(h, b, s2):
    """Exact MSE of a fixed B with the best receive scaling."""
    m = h.shape[0]
    hb = h @ b
    u = max(np.trace(hb).real / (np.vdot(hb, hb).real + m * s2), 0.0)
    return m - 2 * u * np.trace(hb).real + u**2 * (np.vdot(hb, hb).real + m * s2)


def test_fd_beats_random_feasible_precoders(rng):
    for _ in range(5):
        h = crandn(rng, 3, 5)
        sol = wf_fd(h, 0.1, 1.0, YG)
        for _ in range(100):
            b = crandn(rng, 5, 3)
            b *= np.sqrt(2 * 1.0 / (YG * np.vdot(b, b).real))
            assert sol.achieved_mse <= _best_beta_mse(h, b, 0.1) + 1e-8


def test_fd_matches_constrained_minimizer(rng):
    m, n, s2, p, yg = 2, 3, 0.3, 1.0, 2.0
    h = crandn(rng, m, n)
    ref = wf_fd(h, s2, p, yg).achieved_mse

    def unpack(v):
        return (v[:n * m] + 1j * v[n * m:2 * n * m]).reshape(n, m), v[-1]

    def obj(v):
        b, beta = unpack(v)
        return mse_direct(h, b, beta, s2)

    cons = [{"type": "ineq", "fun": lambda v: p - 0.5 * yg * np.sum(v[:-1] ** 2)}]
    best = np.inf
    for k in range(5):
        v0 = np.append(0.1 * rng.standard_normal(2 * n * m), 1.0 + k)
        r = sp_minimize(obj, v0, method="SLSQP", constraints=cons, bounds=[(None, None)] * (2 * n * m) + [(1e-3, None)],
                        options={"ftol": 1e-15, "maxiter": 1000})
        best = min(best, r.fun)
    assert abs(best - ref) <= 1e-6


def test_direct_mse_trivial_cases(rng):
    h = crandn(rng, 3, 3)
    assert mse_direct(h, 2.0 * np.linalg.inv(h), 2.0, 0.1) == pytest.approx(3 * 0.1 / 4)
    assert mse_direct(h, np.zeros((3, 3)), 2.0, 0.1) == pytest.approx(3 + 3 * 0.1 / 4)
    with pytest.raises(InvalidArgumentError):
        mse_direct(h, h, 0.0, 0.1)


def test_direct_mse_monte_carlo(rng):
    m, n, s2 = 2, 4, 0.3
    h = crandn(rng, m, n)
    b = crandn(rng, n, m)
    beta = 1.7
    draws = 100_000
    x = crandn(rng, m, draws)
    noise = np.sqrt(s2) * crandn(rng, m, draws)
    err = np.sum(np.abs(x - (h @ b @ x + noise) / beta) ** 2, axis=0)
    se = err.std(ddof=1) / np.sqrt(draws)
    assert abs(err.mean() - mse_direct(h, b, beta, s2)) <= 3 * se


def test_zero_channel_is_degenerate():
    with pytest.raises(DegenerateChannelError):
        wf_fd(np.zeros((2, 3)), 0.02, 1.0, YG)
    with pytest.raises(InvalidArgumentError):
        regularizer(2, 0.02, 0.0, YG)


@given(st.integers(1, 4), st.integers(1, 8), st.floats(1e-3, 10.0), st.floats(1e-2, 1e3), st.integers(0, 2**32 - 1))
def test_mse_in_unit_range_and_power_tight(m, n, s2, p, seed):
    h = crandn(np.random.default_rng(seed), m, n)
    sol = wf_fd(h, s2, p, YG)
    assert 0 < sol.achieved_mse <= m
    assert supplied_power(sol.B, YG) == pytest.approx(p, rel=1e-9)
    assert sol.beta > 0


# -- hybrid ---------------------------------------------------------------------

def test_hybrid_full_network_reduces_to_fd(rng):
    h = crandn(rng, 3, 4)
    q = PhaseNetwork.contiguous(np.zeros(4), 4).Q
    assert mse_hybrid(h, q, 0.02, 1.0, YG) == pytest.approx(wf_fd(h, 0.02, 1.0, YG).achieved_mse, rel=1e-12)
    assert mse_hybrid(np.zeros((3, 4)), q, 0.02, 1.0, YG) == pytest.approx(3.0)


def test_hybrid_dense_matches_direct_at_optimal_digital_part(rng):
    h = crandn(rng, 3, 8)
    q = PhaseNetwork.contiguous(rng.uniform(0, 2 * np.pi, 8), 2).Q
    s2, p = 0.05, 1.0
    a = regularized_gram(h, s2, p, YG)
    core = np.linalg.solve(q.conj().T @ a @ q, q.conj().T @ h.conj().T)
    beta = np.sqrt(2 * p / (YG * np.vdot(q @ core, q @ core).real))
    bh = beta * core
    assert mse_direct(h @ q, bh, beta, s2) == pytest.approx(mse_hybrid(h, q, s2, p, YG), rel=1e-11)
    obj = HybridObjective(h, 2, s2, p, YG)
    theta = np.angle(q[q != 0])
    assert obj(theta)[0] == pytest.approx(mse_hybrid(h, q, s2, p, YG), rel=1e-12)


def test_dense_phase_gradient_matches_fast(rng):
    h = crandn(rng, 3, 6)
    theta = rng.uniform(0, 2 * np.pi, 6)
    net = PhaseNetwork.contiguous(theta, 2)
    dense = grad_theta(h, net.Q, 0.02, 1.0, YG)
    assert np.all(dense[net.S == 0] == 0)
    fast = HybridObjective(h, 2, 0.02, 1.0, YG)(theta)[1]
    np.testing.assert_allclose(dense[net.S == 1], fast, rtol=1e-10, atol=1e-14)


def test_phase_gradient_finite_differences(rng):
    h = crandn(rng, 3, 8)
    obj = HybridObjective(h, 2, 0.1, 1.0, YG)
    for _ in range(20):
        theta = rng.uniform(0, 2 * np.pi, 8)
        g = obj(theta)[1]
        fd = np.array([(obj(theta + 1e-6 * e)[0] - obj(theta - 1e-6 * e)[0]) / 2e-6 for e in np.eye(8)])
        assert rel_inf(g, fd) <= 1e-5


def _selection(n, nt):
    s = np.zeros((n, nt))
    s[np.arange(n), np.repeat(np.arange(nt), n // nt)] = 1
    return s


def test_single_user_single_chain_matches_grid(rng):
    h = crandn(rng, 1, 2)
    s2, p = 0.2, 1.0
    sol = wf_hybrid(h, _selection(2, 1), s2, p, YG)
    grid = np.arange(0, 2 * np.pi, 1e-3)
    q = np.stack([np.ones_like(grid), np.exp(1j * grid)])
    vals = [mse_hybrid(h, q[:, [i]], s2, p, YG) for i in range(grid.size)]
    assert abs(sol.achieved_mse - min(vals)) <= 1e-5
    # the optimum co-phases the two branches
    rel = np.angle(np.exp(1j * np.diff(sol.analog_state.theta)) * h[0, 1] / h[0, 0])
    assert abs(rel) < 1e-3


def test_hybrid_solution_contracts(rng):
    h = crandn(rng, 3, 12)
    sol = wf_hybrid(h, _selection(12, 3), 0.05, 1.0, YG, OptimizerSettings(max_iterations=200))
    hist = np.asarray(sol.history)
    assert np.all(np.diff(hist) <= 0)
    assert sol.achieved_mse == pytest.approx(hist[-1], rel=1e-10)
    q = sol.analog_state.Q
    assert supplied_power(sol.B, YG, q) == pytest.approx(1.0, rel=1e-9)
    assert mse_direct(sol.H_eq, sol.B, sol.beta, 0.05) == pytest.approx(sol.achieved_mse, rel=1e-10)
    theta = sol.analog_state.theta
    obj = HybridObjective(h, 3, 0.05, 1.0, YG)
    assert obj(theta + 2 * np.pi)[0] == pytest.approx(obj(theta)[0], rel=1e-12)


def test_hybrid_restarts_keep_the_best(rng):
    h = crandn(rng, 3, 8)
    one = wf_hybrid(h, _selection(8, 2), 0.05, 1.0, YG, OptimizerSettings(max_iterations=30))
    three = wf_hybrid(h, _selection(8, 2), 0.05, 1.0, YG, OptimizerSettings(max_iterations=30, restarts=3))
    assert three.achieved_mse <= one.achieved_mse + 1e-15


@pytest.mark.parametrize("s", [
    np.array([[1, 0], [1, 1]]),
    np.array([[0.5, 0.5], [0, 1]]),
    np.array([[1, 0], [1, 0], [0, 1]]),
    np.array([[0, 1], [1, 0]]),
])
def test_invalid_selection(s, rng):
    with pytest.raises(InvalidArgumentError):
        wf_hybrid(crandn(rng, 1, s.shape[0]), s, 0.02, 1.0, YG)


# -- DMA ------------------------------------------------------------------------

def test_dma_mse_trivial_cases(rng):
    assert mse_dma(np.zeros((3, 2)), 0.02, 1.0, YG) == pytest.approx(3.0)
    u, _, _ = np.linalg.svd(crandn(rng, 3, 3))
    g = 0.4
    h = g * u[:, :3].conj().T
    expect = 3 / (1 + 2 * 1.0 * g**2 / (3 * 0.02 * YG))
    assert mse_dma(h, 0.02, 1.0, YG) == pytest.approx(expect, rel=1e-12)


@given(st.integers(1, 4), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_inversion_lemma_identity(m, n, seed):
    h = crandn(np.random.default_rng(seed), m, n)
    s2, p = 0.02, 1.0
    a = regularized_gram(h, s2, p, YG)
    direct = np.trace(np.eye(m) - h @ np.linalg.solve(a, h.conj().T)).real
    assert mse_dma(h, s2, p, YG) == pytest.approx(direct, rel=1e-10)


def _dma(nt=2, npt=4, spacing=0.3, **kw):
    lay = build_layout(nt, npt, spacing * LAM, LAM)
    return lay, build_dma_structure(lay, C, **kw)


def test_dma_gradient_finite_differences(rng):
    lay, s = _dma(3, 4)
    y_rs = crandn(rng, 3, lay.n_antennas)
    obj = DmaObjective(s, y_rs, C, 0.02, 1.0)
    for _ in range(20):
        y = rng.uniform(-YG, YG, s.n_elements)
        g = obj(y)[1]
        fd = []
        for i in range(s.n_elements):
            h = 1e-4 * max(1.0, abs(y[i]))
            e = np.zeros_like(y)
            e[i] = h
            fd.append((obj(y + e)[0] - obj(y - e)[0]) / (2 * h))
        assert rel_inf(g, fd) <= 1e-4


def test_dma_gradient_nonsymmetric_fallback(rng):
    lay, s = _dma(2, 3)
    y_ss = s.Y_ss.copy()
    y_ss[0, 1] += 0.3j
    skew = DmaStructure(s.Y_tt, s.Y_st, y_ss, s.Y_g, s.r_s, s.feed_map)
    y_rs = crandn(rng, 2, lay.n_antennas)
    obj = DmaObjective(skew, y_rs, C, 0.02, 1.0)
    assert not obj._symmetric
    y = rng.uniform(-YG, YG, s.n_elements)
    fd = [(obj(y + 1e-5 * e)[0] - obj(y - 1e-5 * e)[0]) / 2e-5 for e in np.eye(s.n_elements)]
    assert rel_inf(obj(y)[1], fd) <= 1e-5


def test_dma_gradient_scalar_chain():
    lay, s = _dma(1, 1)
    y_rs = np.array([[0.8 - 0.3j]])
    s2, p = 0.02, 1.0
    gamma = 2 * p / (s2 * YG)
    k = C.alpha_r * YG * y_rs[0, 0]
    st_, tt, ss = s.Y_st[0, 0], s.Y_tt[0, 0], s.Y_ss[0, 0]
    y = 7.5
    z = 1 / (0.1 + 1j * y + ss)
    d = YG + tt - st_ * z * st_
    h = k * z * st_ / d
    dh = k * (YG + tt) / d**2 * st_ * (-1j * z**2)
    expect = -gamma / (1 + gamma * abs(h) ** 2) ** 2 * 2 * (np.conj(h) * dh).real
    assert grad_ys(s, y_rs, np.array([y]), C, s2, p)[0] == pytest.approx(expect, rel=1e-10)


def test_dma_gradient_vanishes_without_feed(rng):
    lay, s = _dma(2, 2)
    dead = DmaStructure(s.Y_tt, np.zeros_like(s.Y_st), s.Y_ss, s.Y_g, s.r_s, s.feed_map)
    g = grad_ys(dead, crandn(rng, 2, 4), rng.uniform(-5, 5, 4), C, 0.02, 1.0)
    assert np.all(g == 0)


def test_dma_decoupled_reduces_to_fd_closed_form(rng):
    n = 3
    c = 2.0 - 1.0j
    y_tt = np.diag(np.full(n, 1j * YG))
    y_ss = np.diag(rng.uniform(1, 5, n) + 1j * rng.uniform(-3, 3, n))
    dec = DmaStructure(y_tt, c * np.eye(n), y_ss, YG, 0.1, np.arange(n))
    y_rs = crandn(rng, 2, n)
    y = rng.uniform(-YG, YG, n)
    z = 1 / (0.1 + 1j * y + np.diag(y_ss))
    yp = np.diag(y_tt) - c**2 * z
    h = C.alpha_r * YG * y_rs * (z * c / (YG + yp))
    f, _ = DmaObjective(dec, y_rs, C, 0.02, 1.0)(y)
    assert f == pytest.approx(wf_fd(h, 0.02, 1.0, YG).achieved_mse, rel=1e-12)


def test_resonance_coordinates_round_trip_and_gradient(rng):
    lay, s = _dma()
    coords = ResonanceCoordinates(s)
    y = rng.uniform(-50, 50, s.n_elements)
    np.testing.assert_allclose(coords.to_susceptance(coords.from_susceptance(y)), y, rtol=1e-12)
    fun = coords.wrap(DmaObjective(s, crandn(rng, 2, lay.n_antennas), C, 0.02, 1.0))
    phi = coords.from_susceptance(y)
    fd = [(fun(phi + 1e-6 * e)[0] - fun(phi - 1e-6 * e)[0]) / 2e-6 for e in np.eye(s.n_elements)]
    assert rel_inf(fun(phi)[1], fd) <= 1e-5


def test_single_element_dma_matches_golden_section():
    lay, s = _dma(1, 1)
    y_rs = np.array([[0.6 + 0.2j]])
    obj = DmaObjective(s, y_rs, C, 0.02, 1.0)
    grid = np.linspace(-400, 400, 8001)
    vals = [obj(np.array([v]))[0] for v in grid]
    i = int(np.argmin(vals))
    ref = minimize_scalar(lambda v: obj(np.array([v]))[0], bracket=(grid[i - 1], grid[i], grid[i + 1]),
                          method="golden", tol=1e-10)
    for param in ("resonance", "susceptance"):
        sol = wf_dma(s, y_rs, C, 0.02, 1.0, parameterization=param)
        assert abs(sol.achieved_mse - ref.fun) <= 1e-5


def test_frozen_load_matches_closed_form(rng):
    lay, s = _dma()
    y_rs = crandn(rng, 3, lay.n_antennas)
    y = rng.uniform(-YG, YG, s.n_elements)
    sol = wf_dma(s, y_rs, C, 0.02, 1.0, OptimizerSettings(max_iterations=1), y0=y,
                 parameterization="susceptance")
    h = DmaChannelMap(s.with_load(sol.analog_state), C)(y_rs).H
    a = h.conj().T @ h + regularizer(3, 0.02, 1.0, YG) * np.eye(2)
    core = np.linalg.solve(a, h.conj().T)
    beta = np.sqrt(2 / (YG * np.vdot(core, core).real))
    np.testing.assert_allclose(sol.B, beta * core, rtol=1e-10)
    assert sol.beta == pytest.approx(beta, rel=1e-12)


@pytest.mark.parametrize("param", ["resonance", "susceptance"])
def test_dma_solution_contracts(param, rng):
    lay, s = _dma(2, 5)
    y_rs = crandn(rng, 3, lay.n_antennas)
    sol = wf_dma(s, y_rs, C, 0.02, 1.0, OptimizerSettings(max_iterations=150), parameterization=param)
    hist = np.asarray(sol.history)
    assert np.all(np.diff(hist) <= 0)
    assert sol.achieved_mse == pytest.approx(hist[-1], rel=1e-9)
    assert supplied_power(sol.B, YG) == pytest.approx(1.0, rel=1e-9)
    assert 0 < sol.achieved_mse <= 3


def test_unknown_parameterization(rng):
    lay, s = _dma()
    with pytest.raises(InvalidArgumentError):
        wf_dma(s, crandn(rng, 1, lay.n_antennas), C, 0.02, 1.0, parameterization="phase")


def test_wiener_filter_power_scale(rng):
    h = crandn(rng, 2, 3)
    b, beta, _ = wiener_filter(h, 0.1, 1.0, YG, power_scale=4.0)
    assert 0.5 * YG * 4.0 * np.vdot(b, b).real == pytest.approx(1.0, rel=1e-12)
