"""Distance construction and the explicit constants pipeline.

Two base metrics on phase-space differences (v, w) with q = v + w/gamma:

    r_s = alpha |v| + |q|
    r_l^2 = A |v|^2 + B <v, w> + C |w|^2

Both are positively homogeneous of degree one and depend on (v, w) only
through (|v|, |w|, cos angle), so every supremum/infimum in the pipeline
reduces to a search on the unit sphere of that three-parameter family.

The contraction rate and prefactor involve exp(-Lambda) factors that can
leave the double range for strongly restricted envelopes, so the report
carries log-space values alongside the float images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .forces import DriftSpec, InteractionSpec
from .levy import LevyModel, SigmaEnvelope, fit_sigma_envelope

LOG_ZERO = -math.inf


class HHViolationError(Exception):
    """The friction/dissipativity balance L_b^2 gamma^-2 < (3/4) theta fails."""


class DegenerateMetricError(Exception):
    pass


@dataclass(frozen=True)
class DynamicsModel:
    """Kinetic dynamics: friction, confinement drift and interaction kernel."""

    dim: int
    gamma: float
    drift: DriftSpec
    interaction: InteractionSpec

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def L_b(self) -> float:
        return self.drift.L_b

    @property
    def theta(self) -> float:
        return self.drift.theta

    @property
    def R0(self) -> float:
        return self.drift.R0

    @property
    def L_bt(self) -> float:
        return self.interaction.eta

    def hh_margin(self) -> float:
        """Positive iff the balance condition holds."""
        return 0.75 * self.theta - self.L_b ** 2 / self.gamma ** 2


# ---------------------------------------------------------------------------
# base metrics
# ---------------------------------------------------------------------------

def r_l_coefficients(tau: float, gamma: float) -> tuple[float, float, float]:
    A = 0.5 * (1.0 - 2.0 * tau) ** 2
    B = (1.0 - 2.0 * tau) / gamma
    C = gamma ** -2
    return A, B, C


def r_s(v, w, alpha: float, gamma: float) -> float:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    q = v + w / gamma
    return alpha * float(np.linalg.norm(v)) + float(np.linalg.norm(q))


def r_l(v, w, tau: float, gamma: float) -> float:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    A, B, C = r_l_coefficients(tau, gamma)
    sq = A * v @ v + B * v @ w + C * w @ w
    return math.sqrt(max(sq, 0.0))


def _ratio_grid(alpha, gamma, tau, phi, c):
    """r_s / r_l over the sphere parametrization a=cos(phi), b=sin(phi)."""
    A, B, C = r_l_coefficients(tau, gamma)
    a, b = np.cos(phi), np.sin(phi)
    q = np.sqrt(np.maximum(a * a + (b / gamma) ** 2 + 2.0 * a * b * c / gamma, 0.0))
    rs = alpha * a + q
    rl = np.sqrt(np.maximum(A * a * a + B * a * b * c + C * b * b, 0.0))
    return rs / rl


@dataclass(frozen=True)
class DirectionalExtrema:
    sup_ratio: float   # S = sup r_s / r_l
    inf_ratio: float   # I = inf r_s / r_l

    @property
    def sup_inverse(self) -> float:
        """T = sup r_l / r_s."""
        return 1.0 / self.inf_ratio


def directional_extrema(alpha: float, gamma: float, tau: float,
                        n_grid: int = 2001, refine_tol: float = 1e-10) -> DirectionalExtrema:
    """Extrema of r_s / r_l over directions: dense grid over (phi, c) plus
    coordinatewise golden-section polish around the grid optima."""
    phi = np.linspace(0.0, np.pi / 2.0, n_grid)
    c = np.linspace(-1.0, 1.0, n_grid)
    P, Cc = np.meshgrid(phi, c, indexing="ij")
    ratio = _ratio_grid(alpha, gamma, tau, P, Cc)
    i_max = np.unravel_index(np.argmax(ratio), ratio.shape)
    i_min = np.unravel_index(np.argmin(ratio), ratio.shape)

    def polish(p0, c0, sign):
        f = lambda p, cc: sign * float(_ratio_grid(alpha, gamma, tau, np.array(p), np.array(cc)))
        dp = (phi[1] - phi[0]) * 2
        dc = (c[1] - c[0]) * 2
        p_cur, c_cur = float(p0), float(c0)
        for _ in range(4):
            p_cur = _golden(lambda p: f(p, c_cur),
                            max(0.0, p_cur - dp), min(np.pi / 2, p_cur + dp), refine_tol)
            c_cur = _golden(lambda cc: f(p_cur, cc),
                            max(-1.0, c_cur - dc), min(1.0, c_cur + dc), refine_tol)
        best = f(p_cur, c_cur)
        # extrema on |c| = 1 need an exact boundary hit: the ratio varies like
        # sqrt(1 + c) there, which stalls any interior search
        for cb in (-1.0, 1.0):
            pb = _golden(lambda p: f(p, cb),
                         max(0.0, p_cur - dp), min(np.pi / 2, p_cur + dp), refine_tol)
            best = min(best, f(pb, cb))
        return -best if sign < 0 else best

    sup = polish(P[i_max], Cc[i_max], -1.0)
    inf = polish(P[i_min], Cc[i_min], +1.0)
    if not math.isfinite(sup) or inf <= 0.0:
        raise DegenerateMetricError("directional extrema of r_s/r_l degenerate")
    return DirectionalExtrema(sup_ratio=max(sup, float(ratio[i_max])),
                              inf_ratio=min(inf, float(ratio[i_min])))


def _golden(f, lo, hi, tol):
    """Golden-section minimizer on [lo, hi] (f already sign-adjusted)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return (a + b) / 2.0


def epsilon_pair(alpha: float, gamma: float, tau: float,
                 n_grid: int = 2001) -> tuple[float, float]:
    """Extremal admissible (eps, eps_bar): 2 eps r_l <= r_s and eps_bar r_s <= r_l."""
    ext = directional_extrema(alpha, gamma, tau, n_grid=n_grid)
    eps = min(0.5, 0.5 * ext.inf_ratio)
    eps_bar = min(0.5, 1.0 / ext.sup_ratio)
    if eps <= 0.0 or eps_bar <= 0.0:
        raise DegenerateMetricError("metric comparison constants vanished")
    return eps, eps_bar


def script_R(model: DynamicsModel, tau: float) -> float:
    g = model.gamma
    return (1.0 / tau) * g ** -2 * (1.0 - 2.0 * tau) * (model.L_b + model.theta) * model.R0 ** 2


def d_gamma(scriptR: float, sup_ratio: float, eps: float) -> float:
    """Sup of Delta = r_s - eps r_l over {r_l^2 <= scriptR}, by homogeneity
    attained on the boundary in the direction maximizing r_s / r_l."""
    return math.sqrt(scriptR) * (sup_ratio - eps)


def r1(D_Gamma: float, eps: float, sup_inverse: float) -> float:
    """Sup of r_s over {Delta <= D_Gamma}: along a fixed direction r_s is
    capped at D_Gamma / (1 - eps r_l/r_s), maximal where r_l/r_s peaks."""
    val = D_Gamma / (1.0 - eps * sup_inverse)
    if not D_Gamma * (1.0 - 1e-9) <= val <= 2.0 * D_Gamma * (1.0 + 1e-9):
        raise DegenerateMetricError(f"R1={val} outside [D_Gamma, 2 D_Gamma]")
    return val


# ---------------------------------------------------------------------------
# concave distance transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiTransform:
    """psi(r) = integral of exp(-g(s)) over [0, r] with linear tail past 2 R1,
    for the power envelope g(r) = G r^beta (closed form via the lower
    incomplete gamma function; no quadrature table needed)."""

    G: float
    beta: float
    R1: float

    @property
    def two_R1(self) -> float:
        return 2.0 * self.R1

    def g(self, r):
        return self.G * np.asarray(r, dtype=float) ** self.beta

    def _raw(self, r):
        a = 1.0 / self.beta
        x = self.G * np.asarray(r, dtype=float) ** self.beta
        return special.gamma(a) / (self.beta * self.G ** a) * special.gammainc(a, x)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        cap = self.two_R1
        head = self._raw(np.minimum(r, cap))
        tail = self.prime(cap) * np.maximum(r - cap, 0.0)
        out = head + tail
        return float(out) if out.ndim == 0 else out

    def prime(self, r):
        r = np.asarray(r, dtype=float)
        out = np.exp(-self.g(np.minimum(r, self.two_R1)))
        return float(out) if out.ndim == 0 else out

    def log_prime(self, r: float) -> float:
        return -float(self.g(min(r, self.two_R1)))

    def second(self, r):
        """psi'' on (0, 2 R1]; zero on the linear tail."""
        r = np.asarray(r, dtype=float)
        inside = r <= self.two_R1
        gp = self.G * self.beta * np.where(r > 0, r, 1.0) ** (self.beta - 1.0)
        out = np.where(inside, -gp * np.exp(-self.g(r)), 0.0)
        return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# constants report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantsReport:
    gamma: float
    L_b: float
    theta: float
    R0: float
    L_b_tilde: float
    k0: float

    alpha: float
    tau: float
    A: float
    B: float
    C: float
    eps_small: float
    eps_bar: float
    sup_ratio: float
    inf_ratio: float
    script_R: float
    D_Gamma: float
    R1: float

    sigma_c1: float
    sigma_beta: float
    sigma_restricted: bool
    sigma_feasible_radius: float

    g_coefficient: float
    Lambda1: float
    Lambda2: float
    log_psi_prime_R1: float
    log_psi_prime_2R1: float
    psi_prime_R1: float
    psi_prime_2R1: float

    log_lambda: float
    lambda_rate: float
    log_C1: float
    C1: float
    log_C_b_tilde: float
    C_b_tilde: float
    M2: float
    log_M1: float
    M1: float
    log_c1_local: float
    c1_local: float
    c2_local: float

    interaction_ok: bool
    k0_sensitivity: tuple = field(default_factory=tuple)
    C3: float | None = None

    def psi(self) -> PsiTransform:
        return PsiTransform(G=self.g_coefficient, beta=self.sigma_beta, R1=self.R1)

    def with_C3(self, value: float) -> "ConstantsReport":
        return replace(self, C3=float(value))

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            val = getattr(self, name)
            if isinstance(val, float):
                out[name] = val if math.isfinite(val) else None
            elif isinstance(val, tuple):
                out[name] = [list(pair) for pair in val]
            else:
                out[name] = val
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ConstantsReport":
        kw = dict(data)
        kw["k0_sensitivity"] = tuple(tuple(p) for p in kw.get("k0_sensitivity", ()))
        # restore float images that were dropped as non-finite from their logs
        for key, logkey in (("lambda_rate", "log_lambda"), ("C1", "log_C1"),
                            ("C_b_tilde", "log_C_b_tilde"), ("M1", "log_M1"),
                            ("psi_prime_R1", "log_psi_prime_R1"),
                            ("psi_prime_2R1", "log_psi_prime_2R1"),
                            ("c1_local", "log_c1_local")):
            if kw.get(key) is None:
                if kw[logkey] is None:
                    kw[key] = math.inf
                else:
                    try:
                        kw[key] = math.exp(kw[logkey])
                    except OverflowError:
                        kw[key] = math.inf
        for key in ("log_lambda", "log_C1", "log_C_b_tilde", "log_M1",
                    "log_psi_prime_R1", "log_psi_prime_2R1", "log_c1_local"):
            if kw.get(key) is None:
                kw[key] = LOG_ZERO
        return cls(**kw)


def _logmin(*vals):
    return min(vals)


def derive_constants(model: DynamicsModel, levy: LevyModel, k0: float = 8.0,
                     n_grid: int = 2001, envelope_r_min: float = 1e-4,
                     envelope_n_grid: int = 64) -> ConstantsReport:
    """Run the full constants pipeline in dependency order.

    Raises HHViolationError when the balance condition fails; the interaction
    smallness check L_b~ <= C_b~ is reported, not enforced, so experiments can
    probe the regime where the contraction hypothesis breaks.
    """
    if k0 <= 4.0:
        raise ValueError("k0 must exceed 4")
    g = model.gamma
    if model.hh_margin() <= 0.0:
        raise HHViolationError(
            f"L_b^2 gamma^-2 = {model.L_b ** 2 / g ** 2:.6g} is not below "
            f"(3/4) theta = {0.75 * model.theta:.6g}"
        )
    alpha = 2.0 * model.L_b / g ** 2
    tau = min(0.125, model.theta / g ** 2 - 4.0 * model.L_b ** 2 / (3.0 * g ** 4))
    A, B, C = r_l_coefficients(tau, g)

    ext = directional_extrema(alpha, g, tau, n_grid=n_grid)
    eps = min(0.5, 0.5 * ext.inf_ratio)
    eps_bar = min(0.5, 1.0 / ext.sup_ratio)
    if eps <= 0.0 or eps_bar <= 0.0:
        raise DegenerateMetricError("metric comparison constants vanished")

    scriptR = script_R(model, tau)
    DG = d_gamma(scriptR, ext.sup_ratio, eps)
    R1 = r1(DG, eps, ext.sup_inverse)

    env = fit_sigma_envelope(levy, g, r_min=envelope_r_min,
                             r_max=max(2.0 * R1, 10.0), n_grid=envelope_n_grid)

    def lambda_log_for(k0_val: float) -> tuple[float, float, float, float]:
        m = 1.0 + k0_val * alpha
        G = 2.0 * alpha * g * m ** (2.0 - env.beta) / (env.c1 * env.beta)
        L1 = G * R1 ** env.beta
        L2 = G * (2.0 * R1) ** env.beta
        log_lam = _logmin(
            math.log(alpha * g) - L1,
            math.log(alpha * g * (k0_val - 4.0) / (4.0 * (k0_val * alpha + 1.0))) - L1,
            math.log(tau * g * eps * eps_bar / 4.0) - L2,
        )
        return log_lam, G, L1, L2

    log_lambda, G, Lambda1, Lambda2 = lambda_log_for(k0)
    log_psi_prime_R1 = -Lambda1
    log_psi_prime_2R1 = -Lambda2

    M2 = math.sqrt(2.0) * max(alpha + 1.0, 1.0 / g)
    m1_shape = eps * min((1.0 - 2.0 * tau) / (2.0 * math.sqrt(2.0)), (1.0 / g) / math.sqrt(3.0))
    log_M1 = math.log(m1_shape) + log_psi_prime_2R1
    log_C1 = math.log(M2) + Lambda2 - math.log(m1_shape)
    log_Cbt = _logmin(
        math.log(model.L_b / 4.0) - Lambda1,
        math.log(eps * g ** 2 * tau * (1.0 - 2.0 * tau) / (8.0 * math.sqrt(2.0))) - Lambda2,
    )
    log_c1_local = math.log(min(1.0, (k0 - 4.0) / (4.0 * (k0 * alpha + 1.0))) * alpha * g) - Lambda1

    lbt = model.L_bt
    interaction_ok = True if lbt == 0.0 else math.log(lbt) <= log_Cbt

    sens = tuple(
        (kv, lambda_log_for(kv)[0]) for kv in (5.0, 6.0, k0, 12.0, 16.0)
    )

    def as_float(log_val: float) -> float:
        try:
            return math.exp(log_val)
        except OverflowError:
            return math.inf

    return ConstantsReport(
        gamma=g, L_b=model.L_b, theta=model.theta, R0=model.R0, L_b_tilde=lbt, k0=k0,
        alpha=alpha, tau=tau, A=A, B=B, C=C,
        eps_small=eps, eps_bar=eps_bar,
        sup_ratio=ext.sup_ratio, inf_ratio=ext.inf_ratio,
        script_R=scriptR, D_Gamma=DG, R1=R1,
        sigma_c1=env.c1, sigma_beta=env.beta,
        sigma_restricted=env.restricted, sigma_feasible_radius=env.feasible_radius,
        g_coefficient=G, Lambda1=Lambda1, Lambda2=Lambda2,
        log_psi_prime_R1=log_psi_prime_R1, log_psi_prime_2R1=log_psi_prime_2R1,
        psi_prime_R1=as_float(log_psi_prime_R1), psi_prime_2R1=as_float(log_psi_prime_2R1),
        log_lambda=log_lambda, lambda_rate=as_float(log_lambda),
        log_C1=log_C1, C1=as_float(log_C1),
        log_C_b_tilde=log_Cbt, C_b_tilde=as_float(log_Cbt),
        M2=M2, log_M1=log_M1, M1=as_float(log_M1),
        log_c1_local=log_c1_local, c1_local=as_float(log_c1_local),
        c2_local=tau * g / 2.0,
        interaction_ok=interaction_ok,
        k0_sensitivity=sens,
    )


# ---------------------------------------------------------------------------
# the switched metric rho and its particle average
# ---------------------------------------------------------------------------

def delta_metric(v, w, constants: ConstantsReport) -> float:
    return (r_s(v, w, constants.alpha, constants.gamma)
            - constants.eps_small * r_l(v, w, constants.tau, constants.gamma))


def rho_metric(p1, p2, constants: ConstantsReport, psi: PsiTransform | None = None) -> float:
    """Distance-like function psi((Delta ^ D_Gamma) + eps r_l) on R^{2d} pairs."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape or p1.size % 2 != 0:
        raise ValueError("points must be equal-length even-dimensional vectors")
    d = p1.size // 2
    v = p1[:d] - p2[:d]
    w = p1[d:] - p2[d:]
    rs = r_s(v, w, constants.alpha, constants.gamma)
    rl = r_l(v, w, constants.tau, constants.gamma)
    delta = rs - constants.eps_small * rl
    psi = psi or constants.psi()
    return float(psi.value(min(delta, constants.D_Gamma) + constants.eps_small * rl))


def l1_N(states1, states2) -> float:
    """Normalized l^1 distance: mean Euclidean pair distance over particles."""
    s1 = np.asarray(states1, dtype=float)
    s2 = np.asarray(states2, dtype=float)
    if s1.shape != s2.shape:
        raise ValueError("particle arrays must have matching shapes")
    return float(np.mean(np.linalg.norm(s1 - s2, axis=-1)))


def rho_N(states1, states2, constants: ConstantsReport) -> float:
    """Mean rho over particle pairs; rows are points in R^{2d}."""
    s1 = np.atleast_2d(np.asarray(states1, dtype=float))
    s2 = np.atleast_2d(np.asarray(states2, dtype=float))
    if s1.shape != s2.shape:
        raise ValueError("particle arrays must have matching shapes")
    psi = constants.psi()
    return float(np.mean([rho_metric(a, b, constants, psi) for a, b in zip(s1, s2)]))


# ---------------------------------------------------------------------------
# assumption validation (Monte Carlo falsification, report only)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    worst_ratio: float
    bound: float
    passed: bool

    def __post_init__(self):
        object.__setattr__(self, "worst_ratio", float(self.worst_ratio))
        object.__setattr__(self, "bound", float(self.bound))
        object.__setattr__(self, "passed", bool(self.passed))


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple
    monotone_constant: float  # K = 1 + L_b + L_b~ of the well-posedness bound

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "monotone_constant": self.monotone_constant,
            "checks": [
                {"name": c.name, "worst_ratio": c.worst_ratio,
                 "bound": c.bound, "passed": c.passed}
                for c in self.checks
            ],
        }


def validate_assumptions(model: DynamicsModel, samples: int = 10_000,
                         rng: np.random.Generator | None = None,
                         scale: float = 5.0) -> AssumptionReport:
    """Falsify the declared constants on random probes.

    Reports, per inequality, the worst observed ratio against its declared
    bound.  A failing check means the declared constant is wrong, not that
    the program must stop.
    """
    rng = rng or np.random.default_rng(0)
    d = model.dim
    tol = 1.0 + 1e-9
    checks = []

    x = rng.normal(scale=scale, size=(samples, d))
    xp = rng.normal(scale=scale, size=(samples, d))
    db = model.drift(x) - model.drift(xp)
    dist = np.linalg.norm(x - xp, axis=1)
    ok = dist > 1e-12
    lip = np.linalg.norm(db, axis=1)[ok] / dist[ok]
    worst = float(lip.max())
    checks.append(AssumptionCheck("A1-lipschitz", worst, model.L_b, worst <= model.L_b * tol))

    # dissipativity probed on pairs separated by more than R0
    direction = rng.normal(size=(samples, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radii = model.R0 * (1.0 + 9.0 * rng.random(samples))
    x2 = x + radii[:, None] * direction
    inner = np.sum((model.drift(x2) - model.drift(x)) * (x2 - x), axis=1)
    ratio = inner / radii ** 2
    worst = float(ratio.max())
    checks.append(AssumptionCheck("A1-dissipativity", worst, -model.theta,
                                  worst <= -model.theta * (1.0 - 1e-9)))

    z = rng.normal(scale=scale, size=(samples, d))
    zp = rng.normal(scale=scale, size=(samples, d))
    dbt = model.interaction(x, z) - model.interaction(xp, zp)
    denom = dist + np.linalg.norm(z - zp, axis=1)
    ok = denom > 1e-12
    if model.L_bt > 0.0:
        jlip = np.linalg.norm(np.atleast_2d(dbt), axis=1)[ok] / denom[ok]
        worst = float(jlip.max())
        checks.append(AssumptionCheck("A2-joint-lipschitz", worst, model.L_bt,
                                      worst <= model.L_bt * tol))
    else:
        checks.append(AssumptionCheck("A2-joint-lipschitz", 0.0, 0.0, True))

    margin = model.hh_margin()
    checks.append(AssumptionCheck("hh-balance", model.L_b ** 2 / model.gamma ** 2,
                                  0.75 * model.theta, margin > 0.0))

    K = 1.0 + model.L_b + model.L_bt
    n_meas = min(512, samples)
    # one-sided monotonicity (Lip) of the lifted drift on phase space, with
    # empirical measures as the law arguments (W1 by sorted coupling per axis)
    h1 = rng.normal(scale=scale, size=(n_meas, 2 * d))
    h2 = rng.normal(scale=scale, size=(n_meas, 2 * d))
    mu1 = rng.normal(scale=scale, size=(n_meas, 32, d))
    mu2 = rng.normal(scale=scale, size=(n_meas, 32, d))
    worst_lip = 0.0
    worst_growth = 0.0
    for i in range(n_meas):
        b1 = _lifted_drift(model, h1[i], mu1[i])
        b2 = _lifted_drift(model, h2[i], mu2[i])
        diff = h1[i] - h2[i]
        nd = np.linalg.norm(diff)
        w1 = np.mean(np.abs(np.sort(mu1[i], axis=0) - np.sort(mu2[i], axis=0)))
        denom = nd ** 2 + nd * w1
        if denom > 1e-12:
            worst_lip = max(worst_lip, float((b1 - b2) @ diff) / denom)
        growth = np.linalg.norm(_lifted_drift(model, np.zeros(2 * d), mu1[i]))
        first_moment = np.mean(np.linalg.norm(mu1[i], axis=1))
        worst_growth = max(worst_growth, growth / (1.0 + first_moment))
    growth_bound = max(model.drift.value_at_zero()
                       + model.interaction.value_at_origin(), model.L_bt, 1e-300)
    checks.append(AssumptionCheck("lifted-one-sided-lipschitz", worst_lip, K, worst_lip <= K * tol))
    checks.append(AssumptionCheck("lifted-growth", worst_growth, growth_bound,
                                  worst_growth <= growth_bound * tol))
    return AssumptionReport(checks=tuple(checks), monotone_constant=K)


def _lifted_drift(model: DynamicsModel, h, cloud):
    d = model.dim
    x, y = h[:d], h[d:]
    ix = np.mean(np.atleast_2d(model.interaction(x[None, :], cloud)), axis=0)
    return np.concatenate([y, model.drift(x) + ix - model.gamma * y])
