"""Event-driven simulation of the mean-field particle system, the law-proxy
cloud for the distribution-dependent drift, and the moment machinery.

The McKean-Vlasov law mu^X_t is approximated by an M-particle cloud evolved
under the mean-field dynamics; decoupled trajectories then read the cloud's
interaction moments as a frozen, piecewise-constant-in-time law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import purepy
from ._parallel import pmap
from ._rng import TAG_CLOUD, bit_generator
from .forces import KERNEL_ZERO
from .levy import LevyModel
from .metrics import DynamicsModel


class BlowUpError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state detected at t={t:.6g}")
        self.t = t


class ThinningError(RuntimeError):
    """Coupling thinning probabilities exceeded one (numerical corruption)."""


def check_status(status: int, t: float) -> None:
    if status == purepy.STATUS_BLOWUP:
        raise BlowUpError(t)
    if status == purepy.STATUS_THINNING:
        raise ThinningError(f"thinning violation at t={t:.6g}")


@dataclass(frozen=True)
class SimulationParams:
    dt_max: float = 1e-3
    t_end: float = 8.0
    record_times: tuple = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    seed: int = 0
    M: int = 1024
    replicas: int = 2000
    N_list: tuple = (16, 32, 64, 128, 256, 512)
    proxy_snapshot_dt: float = 0.25
    workers: int = 1
    # law-proxy refinement (Picard passes of independent trajectories against
    # frozen moments); used where an N-independent law bias would pollute the
    # N^(-1/2) signal
    law_refine_particles: int = 32768
    law_refine_passes: int = 2
    law_grid_dt: float = 0.02

    def __post_init__(self):
        if self.dt_max <= 0:
            raise ValueError("dt_max must be positive")
        rts = tuple(float(t) for t in self.record_times)
        if any(t < 0 or t > self.t_end for t in rts):
            raise ValueError("record_times must lie in [0, t_end]")
        if list(rts) != sorted(rts):
            raise ValueError("record_times must be sorted")
        object.__setattr__(self, "record_times", rts)

    def record_array(self) -> np.ndarray:
        return np.asarray(self.record_times, dtype=float)


@dataclass(frozen=True)
class InitialLaw:
    """Initial distribution on phase space R^2 (position, velocity)."""

    kind: str = "point"
    center: tuple = (0.0, 0.0)
    scale: float = 1.0  # std dev (gaussian) or ball radius (uniform-ball)

    def __post_init__(self):
        if self.kind not in ("point", "gaussian", "uniform-ball"):
            raise ValueError(f"unknown initial law {self.kind!r}")

    def sample(self, gen: np.random.Generator, n: int):
        cx, cy = self.center
        if self.kind == "point":
            return np.full(n, cx), np.full(n, cy)
        if self.kind == "gaussian":
            pts = gen.normal(size=(n, 2)) * self.scale
            return cx + pts[:, 0], cy + pts[:, 1]
        # uniform on the disk of radius `scale` in phase space
        r = self.scale * np.sqrt(gen.random(n))
        phi = 2.0 * np.pi * gen.random(n)
        return cx + r * np.cos(phi), cy + r * np.sin(phi)

    def second_moment(self) -> float:
        """E(|X0|^2 + |Y0|^2)."""
        cx, cy = self.center
        base = cx * cx + cy * cy
        if self.kind == "point":
            return base
        if self.kind == "gaussian":
            return base + 2.0 * self.scale ** 2
        return base + self.scale ** 2 / 2.0


@dataclass
class ParticleEnsemble:
    x: np.ndarray
    y: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if self.x.shape != self.y.shape or self.x.size < 1:
            raise ValueError("x and y must be equal-length non-empty arrays")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise BlowUpError(self.t)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class LawProxy:
    """Frozen empirical law: interaction moments on a fine time grid plus
    full clouds and second moments kept at the record times."""

    times: np.ndarray
    sin_m: np.ndarray
    cos_m: np.ndarray
    second_x: np.ndarray          # E|X_t|^2 on the same grid
    cloud_times: np.ndarray
    clouds_x: np.ndarray          # (n_cloud_times, M)
    clouds_y: np.ndarray

    def moments_at(self, t: float):
        idx = max(int(np.searchsorted(self.times, t, side="right")) - 1, 0)
        return float(self.sin_m[idx]), float(self.cos_m[idx])

    def second_moment_at(self, t: float) -> float:
        idx = max(int(np.searchsorted(self.times, t, side="right")) - 1, 0)
        return float(self.second_x[idx])

    def cloud_at(self, t: float):
        idx = int(np.argmin(np.abs(self.cloud_times - t)))
        if abs(self.cloud_times[idx] - t) > 1e-9:
            raise KeyError(f"no cloud snapshot at t={t}")
        return self.clouds_x[idx], self.clouds_y[idx]

    @staticmethod
    def empty():
        z = np.zeros(1)
        return LawProxy(z, z, z, z, z, np.zeros((1, 1)), np.zeros((1, 1)))


def _kernel_args(model: DynamicsModel, levy: LevyModel, params: SimulationParams):
    return dict(
        drift_tag=model.drift.tag,
        kernel_tag=model.interaction.tag,
        eta=model.interaction.eta,
        beta=levy.beta, c0=levy.c0, delta=levy.trunc_delta, r_sup=levy.r_sup,
        gamma=model.gamma, dt_max=params.dt_max,
    )


def drift_meanfield(i: int, ensemble: ParticleEnsemble, model: DynamicsModel):
    """Instantaneous drift of particle i in the mean-field system: position
    drift y_i and velocity drift b(x_i) + mean_j b~(x_i, x_j) - gamma y_i
    (the self term j = i is included)."""
    if not 0 <= i < ensemble.n:
        raise IndexError(f"particle index {i} out of range")
    xi, yi = ensemble.x[i], ensemble.y[i]
    inter = float(np.mean(model.interaction(np.full(ensemble.n, xi), ensemble.x)))
    return float(yi), float(model.drift(np.asarray(xi)) + inter - model.gamma * yi)


def step_ensemble(ensemble: ParticleEnsemble, model: DynamicsModel, levy: LevyModel,
                  params: SimulationParams, gen: np.random.Generator,
                  law: LawProxy | None = None, t_max: float | None = None) -> ParticleEnsemble:
    """Advance the system by one jump event (or to t_max if no jump occurs
    first).  With law=None the interaction reads the ensemble's own empirical
    measure (the mean-field system); otherwise the frozen proxy (decoupled
    dynamics).  Reference one-event semantics with the same draw order as the
    batch runners: u_exp, u_index, u_radius, u_sign."""
    t_end = params.t_end if t_max is None else t_max
    own = law is None
    law = law or LawProxy.empty()
    flow = purepy._EnsembleDrift(model.drift.tag, model.interaction.tag,
                                 model.interaction.eta, model.gamma, own,
                                 law.times, law.sin_m, law.cos_m, params.dt_max)
    x, y = ensemble.x.copy(), ensemble.y.copy()
    u = gen.random(4)
    rate_total = ensemble.n * levy.truncated_rate()
    t_jump = ensemble.t + purepy._exp_dt(u[0], rate_total)
    if t_jump > t_end:
        flow.advance(x, y, ensemble.t, t_end)
        return ParticleEnsemble(x, y, t_end)
    flow.advance(x, y, ensemble.t, t_jump)
    idx = min(int(u[1] * ensemble.n), ensemble.n - 1)
    z = purepy._inverse_jump(levy.beta, levy.trunc_delta, levy.r_sup, u[2], u[3])
    y[idx] += z
    return ParticleEnsemble(x, y, t_jump)


def simulate_mckv_law(initial: InitialLaw, M: int, model: DynamicsModel,
                      levy: LevyModel, params: SimulationParams,
                      seed: int, stream_tag: int = TAG_CLOUD) -> LawProxy:
    """Evolve an M-particle cloud of the mean-field dynamics and freeze its
    empirical law: interaction moments on the proxy grid, full state copies
    at the record times."""
    if M < 64:
        raise ValueError("cloud size M must be at least 64")
    gen_init = np.random.Generator(bit_generator(seed, stream_tag, 0))
    x0, y0 = initial.sample(gen_init, M)
    fine = np.arange(0.0, params.t_end + 1e-12, params.proxy_snapshot_dt)
    grid = np.unique(np.concatenate([fine, params.record_array()]))
    rec_x, rec_y, _, status, t = _kernels.ensemble_run(
        bit_generator(seed, stream_tag, 1), x0, y0, 0.0, params.t_end, grid,
        use_own_law=True,
        law_times=np.zeros(1), law_sin=np.zeros(1), law_cos=np.zeros(1),
        rate_per_particle=levy.truncated_rate(),
        **_kernel_args(model, levy, params),
    )
    check_status(status, t)
    if model.interaction.tag == KERNEL_ZERO:
        sin_m = np.zeros(grid.size)
        cos_m = np.zeros(grid.size)
    else:
        sin_m = np.mean(np.sin(rec_x), axis=1)
        cos_m = np.mean(np.cos(rec_x), axis=1)
    second_x = np.mean(rec_x ** 2, axis=1)
    rts = params.record_array()
    keep = np.searchsorted(grid, rts)
    return LawProxy(times=grid, sin_m=sin_m, cos_m=cos_m, second_x=second_x,
                    cloud_times=rts, clouds_x=rec_x[keep], clouds_y=rec_y[keep])


def simulate_independent_copies(initial: InitialLaw, n: int, law: LawProxy,
                                model: DynamicsModel, levy: LevyModel,
                                params: SimulationParams, seed: int, tag: int,
                                replica: int, x0=None, y0=None):
    """n independent decoupled trajectories against a frozen law; returns
    (rec_x, rec_y) of shape (n_rec, n)."""
    if x0 is None:
        gen = np.random.Generator(bit_generator(seed, tag, replica, 0))
        x0, y0 = initial.sample(gen, n)
    rec_x, rec_y, counts, status, t = _kernels.ensemble_run(
        bit_generator(seed, tag, replica, 1), x0, y0, 0.0, params.t_end,
        params.record_array(), use_own_law=False,
        law_times=law.times, law_sin=law.sin_m, law_cos=law.cos_m,
        rate_per_particle=levy.truncated_rate(),
        **_kernel_args(model, levy, params),
    )
    check_status(status, t)
    return rec_x, rec_y, counts


def refine_law(law: LawProxy, initial: InitialLaw, model: DynamicsModel,
               levy: LevyModel, params: SimulationParams, seed: int,
               stream_tag: int = TAG_CLOUD + 7, cloud_keep: int = 4096) -> LawProxy:
    """Polish an M-cloud law proxy by Picard iteration: simulate a large batch
    of independent decoupled trajectories against the frozen moments, refit
    the moments from the batch, repeat.

    Each pass shrinks the mean-field bias by the (small) interaction strength
    while the Monte Carlo noise drops to O(particles^-1/2); the fine time grid
    removes the piecewise-constant lag of the coarse proxy.  Needed wherever
    an N-independent law error would mask the N^(-1/2) chaos signal.
    """
    if model.interaction.tag == KERNEL_ZERO:
        return law
    grid = np.unique(np.concatenate([
        np.arange(0.0, params.t_end + 1e-12, params.law_grid_dt),
        params.record_array()]))
    keep = np.searchsorted(grid, params.record_array())
    m = params.law_refine_particles
    block = 512
    current = law
    for p in range(params.law_refine_passes):
        jobs = [(initial, model, levy, params, current, grid, seed,
                 stream_tag + 10 * p, lo, min(lo + block, m), keep, cloud_keep)
                for lo in range(0, m, block)]
        outs = pmap(_refine_block, jobs, params.workers)
        sums = np.zeros((3, grid.size))
        clouds_x = []
        clouds_y = []
        for s, cx, cy in outs:
            sums += s
            if cx is not None:
                clouds_x.append(cx)
                clouds_y.append(cy)
        sin_m = sums[0] / m
        cos_m = sums[1] / m
        second = sums[2] / m
        cx = np.concatenate(clouds_x, axis=1)
        cy = np.concatenate(clouds_y, axis=1)
        current = LawProxy(times=grid, sin_m=sin_m, cos_m=cos_m, second_x=second,
                           cloud_times=params.record_array(),
                           clouds_x=cx, clouds_y=cy)
    return current


def _refine_block(job):
    (initial, model, levy, params, law, grid, seed, tag, lo, hi, keep,
     cloud_keep) = job
    from . import _kernels as kernels
    sums = np.zeros((3, grid.size))
    want_cloud = lo < cloud_keep
    cx = [] if want_cloud else None
    cy = [] if want_cloud else None
    kargs = _kernel_args(model, levy, params)
    for r in range(lo, hi):
        gen = np.random.Generator(bit_generator(seed, tag, r, 0))
        x0, y0 = initial.sample(gen, 1)
        rec_x, rec_y, _, status, t = kernels.ensemble_run(
            bit_generator(seed, tag, r, 1), x0, y0, 0.0, params.t_end, grid,
            use_own_law=False, law_times=law.times, law_sin=law.sin_m,
            law_cos=law.cos_m, rate_per_particle=levy.truncated_rate(), **kargs)
        check_status(status, t)
        x = rec_x[:, 0]
        sums[0] += np.sin(x)
        sums[1] += np.cos(x)
        sums[2] += x * x
        if want_cloud and r < cloud_keep:
            cx.append(x[keep])
            cy.append(rec_y[:, 0][keep])
    if want_cloud:
        return sums, np.stack(cx, axis=1), np.stack(cy, axis=1)
    return sums, None, None


# ---------------------------------------------------------------------------
# second-moment bounds (closed forms)
# ---------------------------------------------------------------------------

def tau_value(model: DynamicsModel) -> float:
    g = model.gamma
    return min(0.125, model.theta / g ** 2 - 4.0 * model.L_b ** 2 / (3.0 * g ** 4))


def moment_bound_c3(model: DynamicsModel, levy: LevyModel,
                    initial_second_moment: float) -> tuple[float, float, float]:
    """Closed-form (C_tilde, C_hat, C3) with sup_t E|X_t|^2 <= C3."""
    g = model.gamma
    tau = tau_value(model)
    if tau <= 0:
        raise ValueError("moment bound needs the balance condition (tau > 0)")
    bt0 = model.interaction.value_at_origin()
    b0 = model.drift.value_at_zero()
    tail = levy.tail_first_moment(1.0)
    c_tilde = (4.0 / (tau * g ** 3)) * (bt0 ** 2 + b0 ** 2 + tail ** 2) \
        + (1.0 - 2.0 * tau) / g * (model.L_b + model.theta) * model.R0 ** 2 \
        + levy.second_moment() / g ** 2
    c_hat = max((1.0 - 2.0 * tau) ** 2 / 2.0 + (1.0 - 2.0 * tau) / (2.0 * g),
                1.0 / g ** 2 + (1.0 - 2.0 * tau) / (2.0 * g)) * initial_second_moment \
        + c_tilde / (tau * g)
    c3 = 8.0 * c_hat / (1.0 - 2.0 * tau) ** 2
    return c_tilde, c_hat, c3


@dataclass(frozen=True)
class MomentTrace:
    times: np.ndarray
    ex2: np.ndarray
    ey2: np.ndarray
    stderr_x2: np.ndarray
    C3: float
    violations: tuple = field(default_factory=tuple)


def second_moment_trace(times, rec_x, rec_y, model: DynamicsModel,
                        levy: LevyModel, initial_second_moment: float) -> MomentTrace:
    """Empirical (t, E|X|^2, E|Y|^2) against the closed-form bound C3."""
    rec_x = np.asarray(rec_x, dtype=float)
    rec_y = np.asarray(rec_y, dtype=float)
    n = rec_x.shape[1]
    ex2 = np.mean(rec_x ** 2, axis=1)
    ey2 = np.mean(rec_y ** 2, axis=1)
    se = np.std(rec_x ** 2, axis=1, ddof=1) / math.sqrt(n)
    _, _, c3 = moment_bound_c3(model, levy, initial_second_moment)
    bad = tuple(float(t) for t, v in zip(times, ex2) if v > c3)
    return MomentTrace(times=np.asarray(times, dtype=float), ex2=ex2, ey2=ey2,
                       stderr_x2=se, C3=c3, violations=bad)


def interaction_discrepancy(i: int, copies_x: np.ndarray, cloud_x: np.ndarray,
                            model: DynamicsModel) -> float:
    """A^i = |integral of b~(x_i, .) d(law proxy) - mean-field sum over the
    copies themselves|."""
    xi = copies_x[i]
    against_cloud = float(np.mean(model.interaction(np.full(cloud_x.size, xi), cloud_x)))
    against_copies = float(np.mean(model.interaction(np.full(copies_x.size, xi), copies_x)))
    return abs(against_cloud - against_copies)


def interaction_discrepancy_batch(copies_x: np.ndarray, cloud_x: np.ndarray,
                                  model: DynamicsModel) -> np.ndarray:
    return np.array([interaction_discrepancy(i, copies_x, cloud_x, model)
                     for i in range(copies_x.size)])


def discrepancy_bound(L_bt: float, n: int, second_moment_x: float) -> float:
    """Mean-discrepancy bound L_b~ (sqrt2/sqrtN + 2/N) sqrt(E|X|^2)."""
    return L_bt * (math.sqrt(2.0 / n) + 2.0 / n) * math.sqrt(max(second_moment_x, 0.0))
