"""Pure-python event-driven simulation kernels (dim = 1).

Reference implementation of the hot loops; the compiled module `_core`
mirrors these routines operation for operation, including the order in which
uniform doubles are consumed:

    ensemble_run      per event: u_exp, u_index, u_radius, u_sign
    pair_run          per event: u_exp, u_radius, u_sign, u_thin
    systems_run       per event: u_exp, u_index, u_radius, u_sign, u_thin

Between events the deterministic flow is integrated by explicit midpoint
steps capped at dt_max, stopping exactly at record times and at the jump
time.  Switching indicators are evaluated at the left limit (the state after
the drift advance, before the jump is applied).
"""

from __future__ import annotations

import math

import numpy as np

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_THINNING = 2

MUTATION_NONE = 0
MUTATION_SKIP_MINUS = 1

_DW_CLIP = 2.0
_DW_SLOPE = 1.0 - 3.0 * _DW_CLIP ** 2


def _drift_force(tag, x):
    if tag == 0:
        return -x
    inner = x - x * x * x
    hi = (_DW_CLIP - _DW_CLIP ** 3) + _DW_SLOPE * (x - _DW_CLIP)
    lo = -(_DW_CLIP - _DW_CLIP ** 3) + _DW_SLOPE * (x + _DW_CLIP)
    return np.where(x > _DW_CLIP, hi, np.where(x < -_DW_CLIP, lo, inner))


def _law_index(law_times, t):
    """Piecewise-constant lookup: latest snapshot with time <= t."""
    idx = int(np.searchsorted(law_times, t, side="right")) - 1
    return max(idx, 0)


def _interaction(kernel_tag, eta, x, sin_m, cos_m):
    if kernel_tag == 0:
        return 0.0 if np.isscalar(x) else np.zeros_like(x)
    return eta * (sin_m * np.cos(x) - cos_m * np.sin(x))


def _inverse_jump(beta, delta, r_sup, u_radius, u_sign):
    a = delta ** (-beta)
    b = r_sup ** (-beta)
    r = (a - u_radius * (a - b)) ** (-1.0 / beta)
    return r if u_sign >= 0.5 else -r


def _exp_dt(u, rate):
    if rate <= 0.0:
        return math.inf
    return -math.log1p(-u) / rate


def _rho_point(beta, r_sup, x, z):
    """Overlap ratio min(1, f(z-x)/f(z)) for the bounded stable-like density."""
    azx = abs(z - x)
    if azx > r_sup:
        return 0.0
    if azx < 1e-300:
        return 1.0
    ratio = (abs(z) / azx) ** (1.0 + beta)
    return ratio if ratio < 1.0 else 1.0


def _coupled_displacement(beta, r_sup, kappa, gamma, q, z, u_thin, refined, mutation):
    """Second-marginal jump under the refined-basic/synchronous switching.

    Returns (z_second, status).  The thinning probabilities always satisfy
    p_plus + p_minus <= 1; a numerical violation is reported, not clipped.
    """
    if not refined or q == 0.0:
        return z, STATUS_OK
    qk = q if abs(q) <= kappa else math.copysign(kappa, q)
    xstar = gamma * qk
    p_plus = 0.5 * _rho_point(beta, r_sup, -xstar, z)
    p_minus = 0.5 * _rho_point(beta, r_sup, xstar, z)
    if p_plus + p_minus > 1.0 + 1e-9:
        return z, STATUS_THINNING
    if u_thin <= p_plus:
        return z + xstar, STATUS_OK
    if u_thin <= p_plus + p_minus:
        if mutation == MUTATION_SKIP_MINUS:
            return z, STATUS_OK
        return z - xstar, STATUS_OK
    return z, STATUS_OK


class _EnsembleDrift:
    """Midpoint integrator for an interacting or law-driven ensemble."""

    def __init__(self, drift_tag, kernel_tag, eta, gamma, use_own_law,
                 law_times, law_sin, law_cos, dt_max):
        self.drift_tag = drift_tag
        self.kernel_tag = kernel_tag
        self.eta = eta
        self.gamma = gamma
        self.use_own_law = use_own_law
        self.law_times = law_times
        self.law_sin = law_sin
        self.law_cos = law_cos
        self.dt_max = dt_max

    def advance(self, x, y, t0, t1):
        if t1 <= t0:
            return
        n = max(1, int(math.ceil((t1 - t0) / self.dt_max - 1e-12)))
        h = (t1 - t0) / n
        t = t0
        for _ in range(n):
            if self.kernel_tag == 0:
                inter1 = 0.0
            else:
                sx, cx = np.sin(x), np.cos(x)
                if self.use_own_law:
                    sin_m, cos_m = float(np.mean(sx)), float(np.mean(cx))
                else:
                    idx = _law_index(self.law_times, t)
                    sin_m, cos_m = float(self.law_sin[idx]), float(self.law_cos[idx])
                inter1 = self.eta * (sin_m * cx - cos_m * sx)
            k1y = _drift_force(self.drift_tag, x) + inter1 - self.gamma * y
            xm = x + 0.5 * h * y
            ym = y + 0.5 * h * k1y
            if self.kernel_tag == 0:
                inter2 = 0.0
            else:
                inter2 = self.eta * (sin_m * np.cos(xm) - cos_m * np.sin(xm))
            k2y = _drift_force(self.drift_tag, xm) + inter2 - self.gamma * ym
            x += h * ym
            y += h * k2y
            t += h


def ensemble_run(bitgen, x, y, t0, t_end, record_times,
                 drift_tag, kernel_tag, eta, use_own_law,
                 law_times, law_sin, law_cos,
                 beta, c0, delta, r_sup, rate_per_particle, gamma, dt_max):
    """Evolve an N-particle system event by event.

    Returns (rec_x, rec_y, jump_counts, status, t_stop): state copies at each
    record time, Poisson jump counts per record interval, and a status flag
    (0 ok, 1 blow-up at t_stop).
    """
    gen = np.random.Generator(bitgen)
    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    record_times = np.asarray(record_times, dtype=float)
    n_rec = record_times.size
    N = x.size
    rec_x = np.zeros((n_rec, N))
    rec_y = np.zeros((n_rec, N))
    jump_counts = np.zeros(n_rec, dtype=np.int64)
    flow = _EnsembleDrift(drift_tag, kernel_tag, eta, gamma, use_own_law,
                          law_times, law_sin, law_cos, dt_max)
    rate_total = N * rate_per_particle
    t = t0
    rec_ptr = 0

    def advance_to(target):
        nonlocal t, rec_ptr
        while rec_ptr < n_rec and record_times[rec_ptr] <= target + 1e-15:
            flow.advance(x, y, t, record_times[rec_ptr])
            t = max(t, record_times[rec_ptr])
            rec_x[rec_ptr] = x
            rec_y[rec_ptr] = y
            rec_ptr += 1
        flow.advance(x, y, t, target)
        t = max(t, target)
        return bool(np.all(np.isfinite(x)) and np.all(np.isfinite(y)))

    while True:
        u = gen.random(4)
        t_jump = t + _exp_dt(u[0], rate_total)
        if t_jump > t_end:
            ok = advance_to(t_end)
            return rec_x, rec_y, jump_counts, (STATUS_OK if ok else STATUS_BLOWUP), t
        if not advance_to(t_jump):
            return rec_x, rec_y, jump_counts, STATUS_BLOWUP, t
        idx = min(int(u[1] * N), N - 1)
        z = _inverse_jump(beta, delta, r_sup, u[2], u[3])
        y[idx] += z
        if rec_ptr < n_rec:
            jump_counts[rec_ptr] += 1


def pair_run(bitgen, x1, y1, x2, y2, t0, t_end, record_times,
             drift_tag, kernel_tag, eta,
             law1_times, law1_sin, law1_cos,
             law2_times, law2_sin, law2_cos,
             beta, c0, delta, r_sup, rate, gamma, dt_max,
             alpha, eps, A, B, C, d_gamma_val, kappa,
             mutation=MUTATION_NONE):
    """Coupled pair of decoupled trajectories sharing one Poisson clock.

    Returns (records (n_rec, 4), diag, status, t_stop); diag carries event
    counts: (events, plus branch, minus branch, synchronous regime,
    boundary-band events where |Delta - D_Gamma| < 0.05 D_Gamma).
    """
    gen = np.random.Generator(bitgen)
    record_times = np.asarray(record_times, dtype=float)
    n_rec = record_times.size
    records = np.zeros((n_rec, 4))
    diag = np.zeros(5, dtype=np.int64)
    flow1 = _EnsembleDrift(drift_tag, kernel_tag, eta, gamma, False,
                           law1_times, law1_sin, law1_cos, dt_max)
    flow2 = _EnsembleDrift(drift_tag, kernel_tag, eta, gamma, False,
                           law2_times, law2_sin, law2_cos, dt_max)
    s1x = np.array([x1], dtype=float)
    s1y = np.array([y1], dtype=float)
    s2x = np.array([x2], dtype=float)
    s2y = np.array([y2], dtype=float)
    t = t0
    rec_ptr = 0

    def advance_to(target):
        nonlocal t, rec_ptr
        while rec_ptr < n_rec and record_times[rec_ptr] <= target + 1e-15:
            rt = record_times[rec_ptr]
            flow1.advance(s1x, s1y, t, rt)
            flow2.advance(s2x, s2y, t, rt)
            t = max(t, rt)
            records[rec_ptr] = (s1x[0], s1y[0], s2x[0], s2y[0])
            rec_ptr += 1
        flow1.advance(s1x, s1y, t, target)
        flow2.advance(s2x, s2y, t, target)
        t = max(t, target)
        return math.isfinite(s1x[0] + s1y[0] + s2x[0] + s2y[0])

    while True:
        u = gen.random(4)
        t_jump = t + _exp_dt(u[0], rate)
        if t_jump > t_end:
            ok = advance_to(t_end)
            return records, diag, (STATUS_OK if ok else STATUS_BLOWUP), t
        if not advance_to(t_jump):
            return records, diag, STATUS_BLOWUP, t
        v = s1x[0] - s2x[0]
        w = s1y[0] - s2y[0]
        q = v + w / gamma
        rs = alpha * abs(v) + abs(q)
        rl = math.sqrt(max(A * v * v + B * v * w + C * w * w, 0.0))
        delta_metric = rs - eps * rl
        refined = delta_metric <= d_gamma_val
        z = _inverse_jump(beta, delta, r_sup, u[1], u[2])
        z2, status = _coupled_displacement(beta, r_sup, kappa, gamma, q, z, u[3],
                                           refined, mutation)
        if status != STATUS_OK:
            return records, diag, status, t
        s1y[0] += z
        s2y[0] += z2
        diag[0] += 1
        if refined:
            if z2 > z:
                diag[1] += 1
            elif z2 < z:
                diag[2] += 1
        else:
            diag[3] += 1
        if abs(delta_metric - d_gamma_val) < 0.05 * d_gamma_val:
            diag[4] += 1


def systems_run(bitgen, xc, yc, xs, ys, t0, t_end, record_times,
                drift_tag, kernel_tag, eta,
                law_times, law_sin, law_cos,
                beta, c0, delta, r_sup, rate_per_particle, gamma, dt_max,
                alpha, eps, A, B, C, d_gamma_val, kappa):
    """Per-particle coupling of N independent decoupled copies (frozen law)
    with the N-particle mean-field system (own empirical law), sharing one
    Poisson clock per particle index.

    Returns (rec_v, rec_w, status, t_stop) with rec_v/rec_w of shape
    (n_rec, N): the pairwise differences copy - system at record times.
    """
    gen = np.random.Generator(bitgen)
    xc = np.array(xc, dtype=float)
    yc = np.array(yc, dtype=float)
    xs = np.array(xs, dtype=float)
    ys = np.array(ys, dtype=float)
    record_times = np.asarray(record_times, dtype=float)
    n_rec = record_times.size
    N = xc.size
    rec_v = np.zeros((n_rec, N))
    rec_w = np.zeros((n_rec, N))
    flow_c = _EnsembleDrift(drift_tag, kernel_tag, eta, gamma, False,
                            law_times, law_sin, law_cos, dt_max)
    flow_s = _EnsembleDrift(drift_tag, kernel_tag, eta, gamma, True,
                            law_times, law_sin, law_cos, dt_max)
    rate_total = N * rate_per_particle
    t = t0
    rec_ptr = 0

    def advance_to(target):
        nonlocal t, rec_ptr
        while rec_ptr < n_rec and record_times[rec_ptr] <= target + 1e-15:
            rt = record_times[rec_ptr]
            flow_c.advance(xc, yc, t, rt)
            flow_s.advance(xs, ys, t, rt)
            t = max(t, rt)
            rec_v[rec_ptr] = xc - xs
            rec_w[rec_ptr] = yc - ys
            rec_ptr += 1
        flow_c.advance(xc, yc, t, target)
        flow_s.advance(xs, ys, t, target)
        t = max(t, target)
        return bool(np.all(np.isfinite(xc)) and np.all(np.isfinite(yc))
                    and np.all(np.isfinite(xs)) and np.all(np.isfinite(ys)))

    while True:
        u = gen.random(5)
        t_jump = t + _exp_dt(u[0], rate_total)
        if t_jump > t_end:
            ok = advance_to(t_end)
            return rec_v, rec_w, (STATUS_OK if ok else STATUS_BLOWUP), t
        if not advance_to(t_jump):
            return rec_v, rec_w, STATUS_BLOWUP, t
        i = min(int(u[1] * N), N - 1)
        v = xc[i] - xs[i]
        w = yc[i] - ys[i]
        q = v + w / gamma
        rs = alpha * abs(v) + abs(q)
        rl = math.sqrt(max(A * v * v + B * v * w + C * w * w, 0.0))
        refined = (rs - eps * rl) <= d_gamma_val
        z = _inverse_jump(beta, delta, r_sup, u[2], u[3])
        z2, status = _coupled_displacement(beta, r_sup, kappa, gamma, q, z, u[4],
                                           refined, MUTATION_NONE)
        if status != STATUS_OK:
            return rec_v, rec_w, status, t
        yc[i] += z
        ys[i] += z2
