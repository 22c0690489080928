import numpy as np
import pytest

from mwg_obstacle.problems import (
    PROBLEMS,
    example_1,
    example_2,
    example_3,
    gamma1,
    gamma1_d,
    gamma1_dd,
    gamma2,
    get_problem,
)


def fd_grad(fn, x, y, h=1e-6):
    return ((fn(x + h, y) - fn(x - h, y)) / (2 * h), (fn(x, y + h) - fn(x, y - h)) / (2 * h))


def fd_laplacian(fn, x, y, h=1e-4):
    return (fn(x + h, y) + fn(x - h, y) + fn(x, y + h) + fn(x, y - h) - 4 * fn(x, y)) / h**2


def boundary_samples(domain, n=200):
    rng = np.random.default_rng(0)
    if hasattr(domain, "x0"):
        x0, x1, y0, y1 = domain.x0, domain.x1, domain.y0, domain.y1
    else:
        s = domain.s
        x0, x1, y0, y1 = -s, s, -s, s
    t = rng.uniform(size=n)
    pts = np.concatenate([
        np.column_stack([x0 + (x1 - x0) * t, np.full(n, y0)]),
        np.column_stack([x0 + (x1 - x0) * t, np.full(n, y1)]),
        np.column_stack([np.full(n, x0), y0 + (y1 - y0) * t]),
        np.column_stack([np.full(n, x1), y0 + (y1 - y0) * t]),
    ])
    return pts


def interior_samples(prob, n=400, seed=1):
    rng = np.random.default_rng(seed)
    d = prob.domain
    if hasattr(d, "x0"):
        p = np.column_stack([rng.uniform(d.x0, d.x1, n), rng.uniform(d.y0, d.y1, n)])
    else:
        p = rng.uniform(-d.s, d.s, size=(n, 2))
    if type(d).__name__ == "LShape":
        p = p[~((p[:, 0] >= 0) & (p[:, 1] <= 0))]
    return p


def test_registry():
    assert set(PROBLEMS) == {"example1-f0", "example1-fm15", "example2", "example3"}
    for name in PROBLEMS:
        assert get_problem(name).name == name
    with pytest.raises(KeyError):
        get_problem("example4")
    with pytest.raises(ValueError):
        example_1("heavy")


def test_example1_obstacle_values():
    psi = example_1().psi
    assert psi(1.0, 0.0) == pytest.approx(10.0)
    assert psi(-1.0, 0.0) == pytest.approx(10.0)
    assert psi(0.0, 0.0) == pytest.approx(4.0)
    assert psi(2.0, 1.0) == pytest.approx(-64.0)
    assert example_1("minus15").f(0.3, 0.2) == -15.0
    assert example_1("zero").f(0.3, 0.2) == 0.0


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_obstacle_gradients_by_finite_differences(name):
    prob = get_problem(name)
    p = interior_samples(prob, 50)
    gx, gy = prob.psi_grad(p[:, 0], p[:, 1])
    fx, fy = fd_grad(prob.psi, p[:, 0], p[:, 1])
    assert np.allclose(gx, fx, atol=1e-5, rtol=1e-6)
    assert np.allclose(gy, fy, atol=1e-5, rtol=1e-6)


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_obstacle_nonpositive_on_boundary(name):
    prob = get_problem(name)
    b = boundary_samples(prob.domain)
    assert np.all(prob.psi(b[:, 0], b[:, 1]) <= 0.0)


def test_example2_closed_form():
    ex = example_2().exact
    assert ex.u(1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(ex.grad(np.array(0.6), np.array(0.8)), 0.0, atol=1e-15)
    assert ex.u(1.0, 1.0) == pytest.approx(0.5 - 0.5 * np.log(2.0), rel=1e-14)
    assert ex.u(0.2, 0.3) == 0.0


def test_example2_pde_and_multiplier():
    prob = example_2()
    p = interior_samples(prob)
    r = np.hypot(p[:, 0], p[:, 1])
    out = p[r > 1.05]
    lap = fd_laplacian(prob.exact.u, out[:, 0], out[:, 1])
    assert np.allclose(-lap - prob.f(out[:, 0], out[:, 1]), 0.0, atol=1e-5)
    lam = prob.exact.multiplier(p[:, 0], p[:, 1])
    assert np.all(lam <= 0.0)
    assert np.all(lam[r < 1] == -2.0) and np.all(lam[r >= 1] == 0.0)
    gx, gy = prob.exact.grad(p[:, 0], p[:, 1])
    fx, fy = fd_grad(prob.exact.u, p[:, 0], p[:, 1])
    assert np.allclose(gx, fx, atol=1e-7) and np.allclose(gy, fy, atol=1e-7)


def test_example2_boundary_data_is_exact_solution():
    prob = example_2()
    b = boundary_samples(prob.domain)
    assert np.array_equal(prob.dirichlet(b[:, 0], b[:, 1]), prob.exact.u(b[:, 0], b[:, 1]))
    # the exact solution does not vanish on this square
    assert np.all(prob.exact.u(b[:, 0], b[:, 1]) > 0)


def test_gamma1_blend():
    t_to_r = lambda t: 0.25 + t / 2
    assert gamma1(t_to_r(0.0)) == 1.0
    assert gamma1(t_to_r(1.0)) == 0.0
    for t in (0.0, 1.0):
        assert gamma1_d(t_to_r(t)) == pytest.approx(0.0, abs=1e-14)
    r = np.linspace(0.26, 0.74, 25)
    h = 1e-6
    assert np.allclose(gamma1_d(r), (gamma1(r + h) - gamma1(r - h)) / (2 * h), atol=1e-6)
    assert np.allclose(gamma1_dd(r), (gamma1_d(r + h) - gamma1_d(r - h)) / (2 * h), atol=1e-5)
    assert gamma2(1.25) == 0.0 and gamma2(1.3) == 1.0


def test_example3_support_and_origin():
    ex = example_3().exact
    rng = np.random.default_rng(2)
    th = rng.uniform(0, 1.5 * np.pi, 100)
    r = rng.uniform(0.75, 2.0, 100)
    assert np.all(ex.u(r * np.cos(th), r * np.sin(th)) == 0.0)
    assert ex.u(0.0, 0.0) == 0.0
    assert np.allclose(ex.grad(np.array(0.0), np.array(0.0)), 0.0)
    # positive on the upper half plane near the corner
    assert ex.u(-0.1, 0.1) > 0


def test_example3_gradient_by_finite_differences():
    prob = example_3()
    rng = np.random.default_rng(3)
    th = rng.uniform(0.05, 1.5 * np.pi - 0.05, 20)
    r = rng.uniform(0.05, 0.9, 20)
    x, y = r * np.cos(th), r * np.sin(th)
    gx, gy = prob.exact.grad(x, y)
    fx, fy = fd_grad(prob.exact.u, x, y)
    g = np.hypot(gx, gy)
    assert np.all(np.hypot(gx - fx, gy - fy) <= 1e-5 * np.maximum(g, 1e-12))


def test_example3_load_matches_laplacian():
    prob = example_3()
    rng = np.random.default_rng(4)
    th = rng.uniform(0.1, 1.5 * np.pi - 0.1, 200)
    r = rng.uniform(0.1, 1.9, 200)
    r = r[np.abs(r - 1.25) > 1e-3]
    th = th[: len(r)]
    x, y = r * np.cos(th), r * np.sin(th)
    lam = prob.exact.multiplier(x, y)
    assert np.all(lam <= 0.0)
    # λ(u) = f + Δu
    assert np.allclose(prob.f(x, y) + fd_laplacian(prob.exact.u, x, y), lam, atol=2e-4)


@pytest.mark.parametrize("name", ["example2", "example3"])
def test_exact_solution_above_obstacle(name):
    prob = get_problem(name)
    p = interior_samples(prob)
    assert np.all(prob.exact.u(p[:, 0], p[:, 1]) >= prob.psi(p[:, 0], p[:, 1]))


def test_example3_vanishes_on_boundary():
    prob = example_3()
    s = 2.0
    t = np.linspace(-s, s, 101)
    pts = np.concatenate([
        np.column_stack([t, np.full_like(t, s)]),
        np.column_stack([np.full_like(t, -s), t]),
        np.column_stack([t[t <= 0], np.full(np.sum(t <= 0), -s)]),
        np.column_stack([np.full(np.sum(t >= 0), s), t[t >= 0]]),
        np.column_stack([t[t >= 0], np.zeros(np.sum(t >= 0))]),
        np.column_stack([np.zeros(np.sum(t <= 0)), t[t <= 0]]),
    ])
    assert np.allclose(prob.exact.u(pts[:, 0], pts[:, 1]), 0.0, atol=1e-12)
