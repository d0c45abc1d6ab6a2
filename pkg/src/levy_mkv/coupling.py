"""Refined-basic/synchronous switching coupling for pairs of decoupled
trajectories and for the particle system against independent copies.

Both marginals share one Poisson random measure.  At a jump the first
marginal always receives the sampled z; the second receives z + x*, z - x*
or z, where x* = gamma (q)_kappa, with thinning probabilities given by the
overlap ratios of the jump measure.  The refined mechanism is active only
while Delta = r_s - eps r_l, evaluated at the left limit, stays below the
switching threshold D_Gamma; beyond it the coupling is synchronous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import purepy
from ._parallel import pmap
from ._rng import TAG_CHAOS, TAG_CLOUD, TAG_CONTRACTION, bit_generator
from .dynamics import (InitialLaw, LawProxy, ParticleEnsemble, SimulationParams,
                       check_status, simulate_mckv_law, _kernel_args)
from .levy import LevyModel
from .metrics import ConstantsReport, DynamicsModel, PsiTransform


def kappa_clip(q, kappa: float):
    """(q)_kappa: q shortened to length at most kappa; 0 stays 0."""
    q = np.asarray(q, dtype=float)
    norm = float(np.linalg.norm(q))
    if norm <= kappa or norm == 0.0:
        return q.copy()
    return (kappa / norm) * q


def coupled_jump(q: float, z: float, u: float, in_refined_region: bool,
                 levy: LevyModel, gamma: float) -> tuple[float, float]:
    """Jump displacements (z_first, z_second) for one event (dim = 1).

    The second marginal moves by +x* with probability rho(-x*, z)/2, by -x*
    with probability rho(x*, z)/2 and synchronously otherwise, where
    x* = gamma (q)_kappa.
    """
    z2, status = purepy._coupled_displacement(
        levy.beta, levy.r_sup, levy.kappa, gamma, float(q), float(z), float(u),
        bool(in_refined_region), purepy.MUTATION_NONE)
    check_status(status, math.nan)
    return float(z), float(z2)


@dataclass
class CoupledState:
    first: tuple        # (x, y)
    second: tuple       # (x', y')
    t: float
    law_first: LawProxy
    law_second: LawProxy

    def difference(self, gamma: float):
        """(V, W, Q) recomputed from the marginals, never cached."""
        v = self.first[0] - self.second[0]
        w = self.first[1] - self.second[1]
        return v, w, v + w / gamma


def step_coupled_pair(state: CoupledState, model: DynamicsModel, levy: LevyModel,
                      constants: ConstantsReport, params: SimulationParams,
                      gen: np.random.Generator, t_max: float | None = None) -> CoupledState:
    """One shared-clock event of the coupled pair (reference semantics; draw
    order u_exp, u_radius, u_sign, u_thin as in the batch runner)."""
    t_end = params.t_end if t_max is None else t_max
    flow1 = purepy._EnsembleDrift(model.drift.tag, model.interaction.tag,
                                  model.interaction.eta, model.gamma, False,
                                  state.law_first.times, state.law_first.sin_m,
                                  state.law_first.cos_m, params.dt_max)
    flow2 = purepy._EnsembleDrift(model.drift.tag, model.interaction.tag,
                                  model.interaction.eta, model.gamma, False,
                                  state.law_second.times, state.law_second.sin_m,
                                  state.law_second.cos_m, params.dt_max)
    x1 = np.array([state.first[0]], dtype=float)
    y1 = np.array([state.first[1]], dtype=float)
    x2 = np.array([state.second[0]], dtype=float)
    y2 = np.array([state.second[1]], dtype=float)
    u = gen.random(4)
    t_jump = state.t + purepy._exp_dt(u[0], levy.truncated_rate())
    target = min(t_jump, t_end)
    flow1.advance(x1, y1, state.t, target)
    flow2.advance(x2, y2, state.t, target)
    if t_jump > t_end:
        return CoupledState((x1[0], y1[0]), (x2[0], y2[0]), t_end,
                            state.law_first, state.law_second)
    # switching indicator from the left limit
    v = x1[0] - x2[0]
    w = y1[0] - y2[0]
    q = v + w / model.gamma
    rs = constants.alpha * abs(v) + abs(q)
    rl = math.sqrt(max(constants.A * v * v + constants.B * v * w + constants.C * w * w, 0.0))
    refined = (rs - constants.eps_small * rl) <= constants.D_Gamma
    z = purepy._inverse_jump(levy.beta, levy.trunc_delta, levy.r_sup, u[1], u[2])
    z1, z2 = coupled_jump(q, z, u[3], refined, levy, model.gamma)
    y1[0] += z1
    y2[0] += z2
    return CoupledState((x1[0], y1[0]), (x2[0], y2[0]), t_jump,
                        state.law_first, state.law_second)


def pair_distance_stats(records: np.ndarray, constants: ConstantsReport,
                        psi: PsiTransform | None = None):
    """Per-record-time rho and Euclidean distance from stacked pair records
    of shape (replicas, n_rec, 4) holding (x1, y1, x2, y2)."""
    psi = psi or constants.psi()
    v = records[..., 0] - records[..., 2]
    w = records[..., 1] - records[..., 3]
    return rho_values(v, w, constants, psi), np.hypot(v, w)


def rho_values(v, w, constants: ConstantsReport, psi: PsiTransform | None = None):
    """Vectorized rho from difference coordinates (dim = 1)."""
    psi = psi or constants.psi()
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    q = v + w / constants.gamma
    rs = constants.alpha * np.abs(v) + np.abs(q)
    rl = np.sqrt(np.maximum(constants.A * v * v + constants.B * v * w
                            + constants.C * w * w, 0.0))
    delta = rs - constants.eps_small * rl
    return psi.value(np.minimum(delta, constants.D_Gamma) + constants.eps_small * rl)


def _pair_replica_job(job):
    (seed, r, mu0_first, mu0_second, initial_coupling, law_first, law_second,
     model, levy, constants, params, mutation, rts) = job
    gen = np.random.Generator(bit_generator(seed, TAG_CONTRACTION, r, 0))
    x01, y01 = mu0_first.sample(gen, 1)
    if initial_coupling == "comonotone":
        # comonotone 1d coupling: replay the same uniforms for the second draw
        gen2 = np.random.Generator(bit_generator(seed, TAG_CONTRACTION, r, 0))
        x02, y02 = mu0_second.sample(gen2, 1)
    else:
        x02, y02 = mu0_second.sample(gen, 1)
    kargs = _kernel_args(model, levy, params)
    rec, diag, status, t = _kernels.pair_run(
        bit_generator(seed, TAG_CONTRACTION, r, 1),
        float(x01[0]), float(y01[0]), float(x02[0]), float(y02[0]),
        0.0, params.t_end, rts,
        law1_times=law_first.times, law1_sin=law_first.sin_m, law1_cos=law_first.cos_m,
        law2_times=law_second.times, law2_sin=law_second.sin_m, law2_cos=law_second.cos_m,
        rate=levy.truncated_rate(),
        alpha=constants.alpha, eps=constants.eps_small,
        A=constants.A, B=constants.B, C=constants.C,
        d_gamma_val=constants.D_Gamma, kappa=levy.kappa,
        mutation=mutation, **kargs)
    check_status(status, t)
    return r, rec, diag


@dataclass(frozen=True)
class ContractionResult:
    times: np.ndarray
    mean_rho: np.ndarray
    stderr_rho: np.ndarray
    mean_l1: np.ndarray
    stderr_l1: np.ndarray
    records: np.ndarray          # (replicas, n_rec, 4)
    boundary_fraction: float     # events with |Delta - D_Gamma| < 5% D_Gamma
    branch_counts: tuple         # (events, plus, minus, synchronous)


def simulate_contraction(mu0_first: InitialLaw, mu0_second: InitialLaw,
                         model: DynamicsModel, levy: LevyModel,
                         constants: ConstantsReport, params: SimulationParams,
                         replicas: int, seed: int,
                         law_first: LawProxy | None = None,
                         law_second: LawProxy | None = None,
                         initial_coupling: str = "product",
                         mutation: int = purepy.MUTATION_NONE) -> ContractionResult:
    """Coupled pairs started from an independent product (or comonotone 1d)
    coupling of the two initial laws, against two independent law-proxy
    clouds.  Returns the E rho(t) and Euclidean curves with standard errors.
    """
    if law_first is None:
        law_first = simulate_mckv_law(mu0_first, params.M, model, levy, params,
                                      seed, stream_tag=TAG_CLOUD)
    if law_second is None:
        law_second = simulate_mckv_law(mu0_second, params.M, model, levy, params,
                                       seed, stream_tag=TAG_CLOUD + 1)
    rts = params.record_array()
    records = np.zeros((replicas, rts.size, 4))
    diag_total = np.zeros(5, dtype=np.int64)
    jobs = [(seed, r, mu0_first, mu0_second, initial_coupling, law_first,
             law_second, model, levy, constants, params, mutation, rts)
            for r in range(replicas)]
    for r, rec, diag in pmap(_pair_replica_job, jobs, params.workers):
        records[r] = rec
        diag_total += diag
    rho, l1 = pair_distance_stats(records, constants)
    n = math.sqrt(replicas)
    events = max(int(diag_total[0]), 1)
    return ContractionResult(
        times=rts,
        mean_rho=rho.mean(axis=0), stderr_rho=rho.std(axis=0, ddof=1) / n,
        mean_l1=l1.mean(axis=0), stderr_l1=l1.std(axis=0, ddof=1) / n,
        records=records,
        boundary_fraction=float(diag_total[4]) / events,
        branch_counts=tuple(int(v) for v in diag_total[:4]),
    )


def step_coupled_systems(copies: ParticleEnsemble, system: ParticleEnsemble,
                         model: DynamicsModel, levy: LevyModel,
                         constants: ConstantsReport, params: SimulationParams,
                         law: LawProxy, gen: np.random.Generator,
                         t_max: float | None = None):
    """One event of the per-particle coupling between N independent decoupled
    copies (frozen law) and the N-particle system (own empirical law).  Draw
    order: u_exp, u_index, u_radius, u_sign, u_thin."""
    if copies.n != system.n or abs(copies.t - system.t) > 1e-12:
        raise ValueError("coupled systems must share N and current time")
    t_end = params.t_end if t_max is None else t_max
    flow_c = purepy._EnsembleDrift(model.drift.tag, model.interaction.tag,
                                   model.interaction.eta, model.gamma, False,
                                   law.times, law.sin_m, law.cos_m, params.dt_max)
    flow_s = purepy._EnsembleDrift(model.drift.tag, model.interaction.tag,
                                   model.interaction.eta, model.gamma, True,
                                   law.times, law.sin_m, law.cos_m, params.dt_max)
    xc, yc = copies.x.copy(), copies.y.copy()
    xs, ys = system.x.copy(), system.y.copy()
    u = gen.random(5)
    t_jump = copies.t + purepy._exp_dt(u[0], copies.n * levy.truncated_rate())
    target = min(t_jump, t_end)
    flow_c.advance(xc, yc, copies.t, target)
    flow_s.advance(xs, ys, system.t, target)
    if t_jump > t_end:
        return ParticleEnsemble(xc, yc, t_end), ParticleEnsemble(xs, ys, t_end)
    i = min(int(u[1] * copies.n), copies.n - 1)
    v = xc[i] - xs[i]
    w = yc[i] - ys[i]
    q = v + w / model.gamma
    rs = constants.alpha * abs(v) + abs(q)
    rl = math.sqrt(max(constants.A * v * v + constants.B * v * w + constants.C * w * w, 0.0))
    refined = (rs - constants.eps_small * rl) <= constants.D_Gamma
    z = purepy._inverse_jump(levy.beta, levy.trunc_delta, levy.r_sup, u[2], u[3])
    z1, z2 = coupled_jump(q, z, u[4], refined, levy, model.gamma)
    yc[i] += z1
    ys[i] += z2
    return ParticleEnsemble(xc, yc, t_jump), ParticleEnsemble(xs, ys, t_jump)


@dataclass(frozen=True)
class ChaosResult:
    # rows keyed by (N, seed_index): mean pair distances per record time
    times: np.ndarray
    N_values: tuple
    l1: dict        # N -> (n_seeds, n_rec) array of l1_N values
    rho: dict       # N -> (n_seeds, n_rec) array of rho_N values

    def mean_l1(self, N: int) -> np.ndarray:
        return self.l1[N].mean(axis=0)

    def stderr_l1(self, N: int) -> np.ndarray:
        arr = self.l1[N]
        return arr.std(axis=0, ddof=1) / math.sqrt(arr.shape[0])


def _systems_seed_job(job):
    (seed, N, s, mu0, law, model, levy, constants, params, rts) = job
    gen = np.random.Generator(bit_generator(seed, TAG_CHAOS, N, s, 0))
    x0, y0 = mu0.sample(gen, N)
    kargs = _kernel_args(model, levy, params)
    rec_v, rec_w, status, t = _kernels.systems_run(
        bit_generator(seed, TAG_CHAOS, N, s, 1),
        x0, y0, x0.copy(), y0.copy(), 0.0, params.t_end, rts,
        law_times=law.times, law_sin=law.sin_m, law_cos=law.cos_m,
        rate_per_particle=levy.truncated_rate(),
        alpha=constants.alpha, eps=constants.eps_small,
        A=constants.A, B=constants.B, C=constants.C,
        d_gamma_val=constants.D_Gamma, kappa=levy.kappa, **kargs)
    check_status(status, t)
    return rec_v, rec_w


def simulate_chaos(mu0: InitialLaw, model: DynamicsModel, levy: LevyModel,
                   constants: ConstantsReport, params: SimulationParams,
                   N_list, n_seeds, seed: int,
                   law: LawProxy | None = None) -> ChaosResult:
    """Couple the mean-field particle system with N independent copies for
    each N; both start from the same initial draws and share per-particle
    jumps, so the recorded gap isolates the interaction discrepancy.

    n_seeds: an int applied to every N, or a mapping N -> seed count (the
    per-seed cost grows like N^2, so small N can afford many more seeds,
    which tames the heavy-tailed coupling cascade in the seed means).
    """
    if law is None:
        law = simulate_mckv_law(mu0, params.M, model, levy, params, seed,
                                stream_tag=TAG_CLOUD + 2)
    rts = params.record_array()
    psi = constants.psi()
    l1: dict = {}
    rho: dict = {}
    for N in N_list:
        count = n_seeds[N] if isinstance(n_seeds, dict) else int(n_seeds)
        jobs = [(seed, N, s, mu0, law, model, levy, constants, params, rts)
                for s in range(count)]
        outs = pmap(_systems_seed_job, jobs, params.workers)
        l1_arr = np.zeros((count, rts.size))
        rho_arr = np.zeros((count, rts.size))
        for s, (rec_v, rec_w) in enumerate(outs):
            l1_arr[s] = np.mean(np.hypot(rec_v, rec_w), axis=1)
            rho_arr[s] = np.mean(rho_values(rec_v, rec_w, constants, psi), axis=1)
        l1[int(N)] = l1_arr
        rho[int(N)] = rho_arr
    return ChaosResult(times=rts, N_values=tuple(int(n) for n in N_list), l1=l1, rho=rho)


def chaos_slope(result: ChaosResult, t: float) -> tuple[float, float]:
    """Least-squares slope of log E l1_N against log N at record time t,
    with its standard error."""
    idx = int(np.argmin(np.abs(result.times - t)))
    logs = []
    for N in result.N_values:
        m = result.l1[N][:, idx].mean()
        if m <= 0:
            raise ValueError("l1_N vanished; slope undefined (exact-zero case)")
        logs.append(math.log(m))
    x = np.log(np.asarray(result.N_values, dtype=float))
    y = np.asarray(logs)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(x) - 2, 1)
    resid = y - A @ coef
    var = float(resid @ resid) / dof
    cov = var * np.linalg.inv(A.T @ A)
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))
