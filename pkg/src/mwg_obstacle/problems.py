"""Benchmark obstacle problems.

All fields are vectorised callables ``fn(x, y)``; gradients return a pair
``(gx, gy)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .mesh import LShape, Rectangle, Square


@dataclass(frozen=True)
class ExactSolution:
    u: Callable
    grad: Callable
    multiplier: Callable  # λ(u) = f + Δu


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: object
    f: Callable
    psi: Callable
    psi_grad: Callable
    exact: Optional[ExactSolution] = None
    dirichlet: Optional[Callable] = None  # None means homogeneous


def _const(c):
    return lambda x, y: np.full(np.shape(x), float(c))


def _zero_grad(x, y):
    z = np.zeros(np.shape(x))
    return z, z.copy()


# -- Example 1: two hills joined by a saddle, no exact solution ---------------
def _psi1(x, y):
    r2 = x * x + y * y
    return 10.0 - 6.0 * (x * x - 1.0) ** 2 - 20.0 * (r2 - x * x)


def _psi1_grad(x, y):
    return -24.0 * x * (x * x - 1.0), -40.0 * y


def example_1(load_case="zero"):
    loads = {"zero": 0.0, "minus15": -15.0}
    if load_case not in loads:
        raise ValueError(f"load_case must be one of {sorted(loads)}")
    name = "example1-f0" if load_case == "zero" else "example1-fm15"
    return ProblemSpec(name, Rectangle(-2.0, 2.0, -1.0, 1.0, 4, 2), _const(loads[load_case]), _psi1, _psi1_grad)


# -- Example 2: radially symmetric contact disc ------------------------------
def _u2(x, y):
    r = np.hypot(x, y)
    with np.errstate(divide="ignore"):
        out = 0.5 * r * r - np.log(np.where(r > 0, r, 1.0)) - 0.5
    return np.where(r >= 1.0, out, 0.0)


def _u2_grad(x, y):
    r2 = x * x + y * y
    with np.errstate(divide="ignore", invalid="ignore"):
        fac = np.where(r2 >= 1.0, 1.0 - 1.0 / np.where(r2 > 0, r2, 1.0), 0.0)
    return fac * x, fac * y


def _lam2(x, y):
    return np.where(x * x + y * y < 1.0, -2.0, 0.0)


def example_2():
    """f = -2, ψ = 0 on (-1.5, 1.5)^2; the exact solution is nonzero on ∂Ω
    and is used as Dirichlet data."""
    exact = ExactSolution(_u2, _u2_grad, _lam2)
    return ProblemSpec("example2", Square(1.5, 8), _const(-2.0), _const(0.0), _zero_grad, exact, dirichlet=_u2)


# -- Example 3: L-shape corner singularity with a cut-off --------------------
def gamma1(r):
    """Quintic blend in t = 2(r - 1/4): 1 for t < 0, 0 for t >= 1, C² in between."""
    t = 2.0 * (np.asarray(r, dtype=float) - 0.25)
    mid = -6.0 * t**5 + 15.0 * t**4 - 10.0 * t**3 + 1.0
    return np.where(t < 0.0, 1.0, np.where(t < 1.0, mid, 0.0))


def gamma1_d(r):
    t = 2.0 * (np.asarray(r, dtype=float) - 0.25)
    mid = 2.0 * (-30.0 * t**4 + 60.0 * t**3 - 30.0 * t**2)
    return np.where((t >= 0.0) & (t < 1.0), mid, 0.0)


def gamma1_dd(r):
    t = 2.0 * (np.asarray(r, dtype=float) - 0.25)
    mid = 4.0 * (-120.0 * t**3 + 180.0 * t**2 - 60.0 * t)
    return np.where((t >= 0.0) & (t < 1.0), mid, 0.0)


def gamma2(r):
    return np.where(np.asarray(r) <= 1.25, 0.0, 1.0)


def _polar(x, y):
    r = np.hypot(x, y)
    theta = np.mod(np.arctan2(y, x), 2.0 * np.pi)
    return r, theta


def _u3(x, y):
    r, th = _polar(x, y)
    return r ** (2.0 / 3.0) * np.sin(2.0 * th / 3.0) * gamma1(r)


def _u3_grad(x, y):
    r, th = _polar(x, y)
    safe = np.where(r > 0, r, 1.0)
    s, c = np.sin(2.0 * th / 3.0), np.cos(2.0 * th / 3.0)
    g, gd = gamma1(r), gamma1_d(r)
    du_dr = (2.0 / 3.0) * safe ** (-1.0 / 3.0) * s * g + safe ** (2.0 / 3.0) * s * gd
    du_dth_over_r = safe ** (-1.0 / 3.0) * (2.0 / 3.0) * c * g
    ct, st = np.cos(th), np.sin(th)
    gx = du_dr * ct - du_dth_over_r * st
    gy = du_dr * st + du_dth_over_r * ct
    origin = r == 0
    return np.where(origin, 0.0, gx), np.where(origin, 0.0, gy)


def _f3(x, y):
    r, th = _polar(x, y)
    safe = np.where(r > 0, r, 1.0)
    s = np.sin(2.0 * th / 3.0)
    gd, gdd = gamma1_d(r), gamma1_dd(r)
    out = (-safe ** (2.0 / 3.0) * s * (gd / safe + gdd)
           - (4.0 / 3.0) * safe ** (-1.0 / 3.0) * s * gd
           - gamma2(r))
    return np.where(r == 0, 0.0, out)


def _lam3(x, y):
    return -gamma2(np.hypot(x, y))


def example_3():
    exact = ExactSolution(_u3, _u3_grad, _lam3)
    return ProblemSpec("example3", LShape(2.0, 2), _f3, _const(0.0), _zero_grad, exact)


PROBLEMS = {
    "example1-f0": lambda: example_1("zero"),
    "example1-fm15": lambda: example_1("minus15"),
    "example2": example_2,
    "example3": example_3,
}


def get_problem(name):
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
