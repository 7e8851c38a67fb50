import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfisim.errors import ConfigurationError
from sfisim.qn import QnConfig, QnWorkspace, qn_update


def fill(rng, n, m, appends):
    ws = QnWorkspace(m)
    for _ in range(appends):
        ws.append(rng.normal(size=n), rng.normal(size=n))
    return ws


def test_qr_update_matches_dense_refactorization():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n, m = int(rng.integers(5, 40)), int(rng.integers(1, 6))
        ws = fill(rng, n, m, int(rng.integers(1, 3 * m + 2)))
        _, dR = ws.matrices()
        assert dR.shape[1] == min(m, dR.shape[1])
        r = rng.normal(size=n)
        gamma = ws.solve(r)
        ref = np.linalg.lstsq(dR, r, rcond=None)[0]
        np.testing.assert_allclose(gamma, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())
        Q, R = np.linalg.qr(dR)
        np.testing.assert_allclose(gamma, np.linalg.solve(R, Q.T @ r), rtol=1e-10,
                                   atol=1e-10 * np.abs(ref).max())
        np.testing.assert_allclose(ws.Q @ ws.R, dR, atol=1e-12 * np.abs(dR).max())
        np.testing.assert_allclose(ws.Q.T @ ws.Q, np.eye(dR.shape[1]), atol=1e-12)


def test_qr_path_equals_residual_normal_equations():
    rng = np.random.default_rng(5)
    for _ in range(50):
        ws = fill(rng, 20, 3, 5)
        _, dR = ws.matrices()
        r = rng.normal(size=20)
        ne = np.linalg.solve(dR.T @ dR, dR.T @ r)
        np.testing.assert_allclose(ws.solve(r), ne, rtol=1e-10, atol=1e-10)


def test_secant_form_agrees_only_when_increments_are_parallel():
    # The (dX^T dR)^-1 dX^T r formula coincides with least squares on dR when
    # dX is a multiple of dR; for general windows the two differ.
    rng = np.random.default_rng(9)
    dR = rng.normal(size=(15, 3))
    r = rng.normal(size=15)
    ls = np.linalg.lstsq(dR, r, rcond=None)[0]
    dX = -0.7 * dR
    np.testing.assert_allclose(np.linalg.solve(dX.T @ dR, dX.T @ r), ls, rtol=1e-10)
    dX = rng.normal(size=(15, 3))
    assert not np.allclose(np.linalg.solve(dX.T @ dR, dX.T @ r), ls, rtol=1e-3)


def test_single_column_gamma():
    ws = QnWorkspace(1)
    ws.append(np.array([0.3, 0.1]), np.array([1.0, 0.0]))
    assert ws.solve(np.array([2.0, 0.0])) == pytest.approx([2.0])


def test_orthogonal_residual_gives_damped_picard():
    qn = QnConfig(m=2, omega=0.5)
    ws = QnWorkspace(2)
    x0, x1 = np.zeros(2), np.array([1.0, 0.0])
    # r1 = (0, 1) is orthogonal to dR = r1 - r0 = (1, 0), so gamma = 0
    ws.x_prev, ws.r_prev = x0, np.array([-1.0, 1.0])
    x_tilde = x1 + np.array([0.0, 1.0])
    out = qn_update(ws, x1, x_tilde, qn, nu=1)
    np.testing.assert_allclose(out, x1 + 0.5 * np.array([0.0, 1.0]))


def test_anderson_one_closed_form_on_affine_map():
    A = np.array([[0.6, 0.2], [-0.1, 0.5]])
    b = np.array([1.0, -2.0])
    G = lambda x: A @ x + b
    qn = QnConfig(m=1, omega=0.5, omega0=1.0)
    ws = QnWorkspace(1)
    x0 = np.array([0.3, 0.7])
    x1 = qn_update(ws, x0, G(x0), qn, 0)
    np.testing.assert_allclose(x1, G(x0))
    x2 = qn_update(ws, x1, G(x1), qn, 1)
    r0, r1 = G(x0) - x0, G(x1) - x1
    dx, dr = x1 - x0, r1 - r0
    gamma = dr @ r1 / (dr @ dr)
    np.testing.assert_allclose(x2, x1 + 0.5 * r1 - (dx + 0.5 * dr) * gamma, rtol=1e-13)


@given(st.integers(0, 2**31))
def test_undamped_anderson_solves_linear_maps(seed):
    rng = np.random.default_rng(seed)
    n = 3
    M = rng.normal(size=(n, n))
    A = 0.7 * M / np.abs(np.linalg.eigvals(M)).max()
    b = rng.normal(size=n)
    fixed = np.linalg.solve(np.eye(n) - A, b)
    qn = QnConfig(m=n, omega=1.0)
    ws = QnWorkspace(n, drop_tol=1e-14)
    x = np.zeros(n)
    for nu in range(n + 2):
        x = qn_update(ws, x, A @ x + b, qn, nu)
    assert np.linalg.norm(x - fixed) <= 1e-8 * max(1.0, np.linalg.norm(fixed))


def test_window_drops_oldest():
    rng = np.random.default_rng(0)
    ws = QnWorkspace(2)
    cols = [rng.normal(size=6) for _ in range(3)]
    for c in cols:
        ws.append(c, c)
    assert ws.ncols == 2
    np.testing.assert_array_equal(ws.matrices()[1][:, 0], cols[1])


def test_dependent_column_dropped():
    ws = QnWorkspace(3)
    v = np.array([1.0, 2.0, 3.0])
    ws.append(v, v)
    ws.append(2 * v, 2 * v)
    assert ws.ncols == 1
    assert np.all(np.isfinite(ws.solve(np.ones(3))))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        QnConfig(m=0)
    with pytest.raises(ConfigurationError):
        QnConfig(omega=1.5)


def test_unchanged_iterate_adds_no_secant():
    qn = QnConfig(m=3)
    ws = QnWorkspace(3)
    x = np.array([0.2, 0.4])
    qn_update(ws, x, x + 0.1, qn, 0)
    # a pass whose inner solves were skipped returns x itself
    out = qn_update(ws, x, x, qn, 1)
    assert ws.ncols == 0
    np.testing.assert_array_equal(out, x)
    out = qn_update(ws, x + 0.05, x + 0.08, qn, 2)
    assert ws.ncols == 1 and np.all(np.isfinite(out))
