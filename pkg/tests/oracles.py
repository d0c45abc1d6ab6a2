"""Independent oracles for the test suite.

Everything here is deliberately brute force and shares no code path with the
implementations it checks: Riemann sums for overlap integrals, random-direction
searches for the metric extrema, matrix exponentials for linear moment ODEs.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm


def riemann_overlap(beta: float, c0: float, r_sup: float, x: float,
                    n: int = 1_000_000) -> float:
    """Brute-force overlap mass: integral of min(f(z), f(z - x)) dz."""
    x = abs(x)
    if x >= 2 * r_sup:
        return 0.0
    lo, hi = x - r_sup, r_sup
    z = np.linspace(lo, hi, n, endpoint=False) + (hi - lo) / (2 * n)

    def f(v):
        av = np.abs(v)
        out = np.zeros_like(av)
        mask = (av > 0) & (av <= r_sup)
        out[mask] = c0 * av[mask] ** (-1.0 - beta)
        return out

    return float(np.sum(np.minimum(f(z), f(z - x))) * (hi - lo) / n)


def grid_profile(levy, s: float, n_x: int = 200, n_riemann: int = 200_000) -> float:
    """J(s) by brute grid minimization of the Riemann overlap over (0, s]."""
    xs = np.linspace(s / n_x, s, n_x)
    return min(riemann_overlap(levy.beta, levy.c0, levy.r_sup, float(x), n_riemann)
               for x in xs)


def direction_extrema_oracle(alpha: float, gamma: float, tau: float,
                             n_random: int = 1_000_000, seed: int = 20260810):
    """(sup, inf) of r_s / r_l over directions: a million random points on the
    (a, b, c) parameter set plus deterministic boundary sweeps."""
    rng = np.random.default_rng(seed)
    A = 0.5 * (1 - 2 * tau) ** 2
    B = (1 - 2 * tau) / gamma
    C = gamma ** -2

    def ratio(a, b, c):
        q = np.sqrt(np.maximum(a * a + (b / gamma) ** 2 + 2 * a * b * c / gamma, 0.0))
        rs = alpha * a + q
        rl = np.sqrt(np.maximum(A * a * a + B * a * b * c + C * b * b, 0.0))
        return rs / rl

    phi = rng.random(n_random) * (np.pi / 2)
    c = rng.random(n_random) * 2.0 - 1.0
    vals = ratio(np.cos(phi), np.sin(phi), c)
    # boundary sweeps where the minimum can hide behind sqrt kinks
    phi_b = np.linspace(0.0, np.pi / 2, 400_001)
    for cb in (-1.0, 1.0):
        vb = ratio(np.cos(phi_b), np.sin(phi_b), np.full_like(phi_b, cb))
        vals = np.concatenate([vals, vb])
    return float(np.nanmax(vals)), float(np.nanmin(vals))


def damped_linear_flow(x0: float, y0: float, gamma: float, t: float):
    """Exact solution of x' = y, y' = -x - gamma y (any damping regime)."""
    M = np.array([[0.0, 1.0], [-1.0, -gamma]])
    out = expm(M * t) @ np.array([x0, y0])
    return float(out[0]), float(out[1])


def linear_moment_ode(gamma: float, m2_rate: float, t: float,
                      init=(0.0, 0.0, 0.0)):
    """Second moments of dX = Y dt, dY = (-X - gamma Y) dt + dL with
    compensator-free symmetric jumps of variance rate m2_rate:
    m = (E X^2, E XY, E Y^2)."""
    A = np.array([[0.0, 2.0, 0.0],
                  [-1.0, -gamma, 1.0],
                  [0.0, -2.0, -2.0 * gamma]])
    f = np.array([0.0, 0.0, m2_rate])
    m0 = np.asarray(init, dtype=float)
    # solution of m' = A m + f via the augmented exponential
    aug = np.zeros((4, 4))
    aug[:3, :3] = A
    aug[:3, 3] = f
    out = expm(aug * t) @ np.concatenate([m0, [1.0]])
    return out[:3]


def truncated_jump_cdf(beta: float, delta: float, r_sup: float, r):
    """CDF of |Z| for the truncated radial law r^(-1-beta) on (delta, r_sup]."""
    r = np.asarray(r, dtype=float)
    a = delta ** -beta
    b = r_sup ** -beta
    out = (a - np.clip(r, delta, r_sup) ** -beta) / (a - b)
    return np.where(r < delta, 0.0, np.where(r > r_sup, 1.0, out))


def quad_sigma_inverse_integral(c1: float, beta: float, r: float,
                                n: int = 2_000_000) -> float:
    """Riemann value of the integral of 1/sigma over (0, r]."""
    s = np.linspace(0.0, r, n, endpoint=False) + r / (2 * n)
    return float(np.sum(1.0 / (c1 * s ** (1.0 - beta))) * r / n)


def quad_psi(G: float, beta: float, r: float, n: int = 2_000_000) -> float:
    """Riemann value of the integral of exp(-G s^beta) over [0, r]."""
    s = np.linspace(0.0, r, n, endpoint=False) + r / (2 * n)
    return float(np.sum(np.exp(-G * s ** beta)) * r / n)
