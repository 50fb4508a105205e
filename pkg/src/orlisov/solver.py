"""Two critical points of ``I_lambda``: a global minimizer and a mountain-pass point.

The minimizer is reached by steepest descent with Armijo backtracking from a
negative-energy multiple of the bubble.  The mountain-pass point is sought by
a string method on paths from 0 to ``u1`` (descend every interior image
while never raising the path maximum, then redistribute the images by
arclength), followed by min-mode following from the highest image: the
gradient is reflected along the eigenvector of the lowest Hessian eigenvalue
so that the iteration climbs in that one direction and descends in the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import ConfigurationError, DomainError
from .grid import Domain, GridFunction, QuadratureScheme, fixture, random_unit_direction
from .modular import resolve_scheme, sample_functions, seminorm_gagliardo
from .operator import WeakFormContext
from .problem import EnergyValue, Nonlinearity, critical_exponent, energy, energy_and_gradient, validate_hypotheses
from .quadrature import cell_table
from .young import YoungFunction

__all__ = [
    "SolverConfig", "DescentResult", "MountainPassResult", "GeometryBound", "SolutionReport",
    "C1Estimate", "RingProbe", "ProvisionalGeometry", "estimate_c1", "provisional_geometry", "lambda_star", "minimize", "mountain_pass",
    "ring_positivity", "solve_two", "lq_norm",
]

C1_SAFETY = 1.1


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls.

    Stationarity means ``||grad I||_inf <= grad_tol`` and, when ``rel_tol`` is
    set, also ``<= rel_tol`` times the gradient at the starting point.  The
    relative test matters for small solutions, whose gradients start far below
    any fixed absolute threshold.
    """

    max_iters: int = 200_000
    grad_tol: float = 1e-6
    rel_tol: float | None = 1e-6
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    path_points: int = 16
    deform_steps: int = 400
    refine_iters: int = 20_000
    seed: int = 0
    probe_lambda: float = 0.1
    c1_samples: int = 64
    ring_samples: int = 50

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ConfigurationError("grad_tol must be positive")
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ConfigurationError("rel_tol must be positive")
        if self.path_points < 8:
            raise ConfigurationError("path_points must be at least 8")
        if not 0 < self.armijo_c < 1 or not 0 < self.backtrack < 1:
            raise ConfigurationError("Armijo parameters must lie in (0, 1)")
        if self.max_iters < 1 or self.deform_steps < 0 or self.refine_iters < 0:
            raise ConfigurationError("iteration counts must be nonnegative")
        if not self.probe_lambda > 0:
            raise ConfigurationError("probe_lambda must be positive")

    def tolerance(self, g0: float) -> float:
        tol = self.grad_tol
        if self.rel_tol is not None:
            tol = min(tol, self.rel_tol * g0)
        return tol


def _sup(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


class _Energy:
    """Energy evaluations on interior coordinates with a call counter."""

    def __init__(self, ctx, nl, lam):
        self.ctx, self.nl, self.lam = ctx, nl, float(lam)
        self.calls = 0

    def func(self, x: np.ndarray) -> GridFunction:
        return GridFunction.from_interior(self.ctx.domain, x)

    def value(self, x) -> float:
        self.calls += 1
        return energy(self.ctx, self.nl, self.lam, self.func(x)).total

    def both(self, x) -> tuple[EnergyValue, np.ndarray]:
        self.calls += 1
        return energy_and_gradient(self.ctx, self.nl, self.lam, self.func(x))

    def grad(self, x) -> np.ndarray:
        return self.both(x)[1]


# ---------------------------------------------------------------------------
# embedding constant and the geometry of the ring

def lq_norm(u: GridFunction, q: float, scheme: QuadratureScheme | None = None) -> float:
    ct = cell_table(u.domain, resolve_scheme(u.domain, scheme))
    return ct.integrate(np.abs(ct.B @ u.flat) ** q) ** (1.0 / q)


@dataclass(frozen=True)
class C1Estimate:
    value: float
    raw_max: float
    ratios: np.ndarray = field(repr=False)

    @property
    def n_samples(self) -> int:
        return len(self.ratios)

    def __float__(self) -> float:
        return self.value


def estimate_c1(M: YoungFunction, domain: Domain, q: float, s: float, n_samples: int = 64, seed: int = 0,
                scheme: QuadratureScheme | None = None) -> C1Estimate:
    """Sampled ``max ||u||_{L^q} / [u]`` (extended scope) times the safety factor 1.1.

    The raw maximum is a lower bound for the embedding constant; the safety
    factor does not turn it into an upper bound.
    """
    if not q > 0:
        raise DomainError("q must be positive")
    p_star = critical_exponent(M.m0, domain.dim)
    if not q < p_star:
        raise ConfigurationError(f"q={q} is not below the critical exponent {p_star}")
    ratios = []
    for _, u in sample_functions(domain, n_samples, seed):
        if not u.is_zero():
            ratios.append(lq_norm(u, q, scheme) / seminorm_gagliardo(M, u, s, "extended", scheme).norm)
    r = np.array(ratios)
    return C1Estimate(C1_SAFETY * float(r.max()), float(r.max()), r)


@dataclass(frozen=True)
class GeometryBound:
    """Threshold and ring level from the sphere estimate.

    ``lambda_star = rho^(e-q) / (3 C2 c1^q)`` and ``alpha = rho^(e-q) / 3``
    with ``e = m_sup`` for ``rho < 1`` and ``e = m0`` otherwise.
    ``alpha_lower`` is the level the sphere estimate actually guarantees for
    any ``lambda < lambda_star``, namely ``(2/3) rho^e``.
    """

    lambda_star: float
    alpha: float
    exponent: float
    rho: float
    alpha_lower: float

    def ring_bound(self, lam: float, C2: float, c1: float, q: float) -> float:
        """``rho^e - lam C2 c1^q rho^q``, the sphere estimate at a given ``lam``."""
        return self.rho ** self.exponent - lam * C2 * c1 ** q * self.rho ** q


def lambda_star(M: YoungFunction, nl: Nonlinearity, rho: float, c1: float) -> GeometryBound:
    rho, c1 = float(rho), float(c1)
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    if not c1 > 0:
        raise DomainError(f"c1 must be positive, got {c1}")
    if nl.C2 is None:
        raise ConfigurationError("nonlinearity has no C2 constant")
    m0, m1 = M.m0, M.m_sup
    e = m1 if rho < 1 else m0
    base = rho ** (e - nl.q)
    return GeometryBound(base / (3 * nl.C2 * c1 ** nl.q), base / 3, e, rho, 2.0 / 3.0 * rho ** e)


@dataclass(frozen=True)
class ProvisionalGeometry:
    """Radius and threshold from a provisional minimizer at ``probe_lambda``.

    ``rho`` is half the seminorm of that minimizer; ``geometry`` is ``None``
    when the minimizer is zero.
    """

    c1: C1Estimate
    descent: DescentResult
    norm: float
    geometry: GeometryBound | None


def provisional_geometry(ctx: WeakFormContext, nl: Nonlinearity,
                         config: SolverConfig = SolverConfig()) -> ProvisionalGeometry:
    c1 = estimate_c1(ctx.M, ctx.domain, nl.q, ctx.s, config.c1_samples, config.seed, ctx.scheme)
    prov = minimize(ctx, nl, config.probe_lambda, config)
    norm = seminorm_gagliardo(ctx.M, prov.u, ctx.s, ctx.scope, ctx.scheme).norm
    geo = lambda_star(ctx.M, nl, 0.5 * norm, c1.value) if norm > 0 else None
    return ProvisionalGeometry(c1, prov, norm, geo)


@dataclass(frozen=True)
class RingProbe:
    energies: np.ndarray
    rho: float

    @property
    def min_energy(self) -> float:
        return float(self.energies.min())


def ring_positivity(ctx: WeakFormContext, nl: Nonlinearity, lam: float, rho: float,
                    n_samples: int = 50, seed: int = 0) -> RingProbe:
    """Energies of ``rho v`` for random ``v`` of unit seminorm (seeds ``seed .. seed+n-1``)."""
    vals = []
    for k in range(n_samples):
        v = random_unit_direction(ctx.domain, seed + k, ctx.M, ctx.s, ctx.scheme, ctx.scope)
        vals.append(energy(ctx, nl, lam, rho * v).total)
    return RingProbe(np.array(vals), float(rho))


# ---------------------------------------------------------------------------
# minimization

@dataclass
class DescentResult:
    u: GridFunction
    energy: EnergyValue
    residual: float
    iterations: int
    converged: bool
    start_energy: float
    start_scale: float
    history: list[float] = field(repr=False, default_factory=list)
    message: str = ""

    def __iter__(self):
        return iter((self.u, self.energy))


def _armijo_descent(E: _Energy, x: np.ndarray, config: SolverConfig, max_iters: int):
    ev, g = E.both(x)
    tol = config.tolerance(_sup(g))
    history = [ev.total]
    tau = 1.0
    it = 0
    msg = "max_iters reached"
    while it < max_iters:
        gn = _sup(g)
        if gn <= tol:
            msg = "converged"
            break
        g2 = float(g @ g)
        while True:
            xn = x - tau * g
            evn, gnew = E.both(xn)
            if evn.total <= ev.total - config.armijo_c * tau * g2:
                break
            tau *= config.backtrack
            if tau < 1e-300:
                return x, ev, g, it, history, "line search failed"
        x, ev, g = xn, evn, gnew
        history.append(ev.total)
        tau /= config.backtrack
        it += 1
    return x, ev, g, it, history, msg


def _negative_start(E: _Energy, v: GridFunction, max_halvings: int = 60):
    """Largest ``t = 2^-k`` (k <= max_halvings) with ``I(t v) < 0``."""
    for k in range(max_halvings + 1):
        t = 2.0 ** -k
        val = E.value(t * v.interior)
        if val < 0:
            return t, val
    return None, None


def minimize(ctx: WeakFormContext, nl: Nonlinearity, lam: float, config: SolverConfig = SolverConfig(),
             start: GridFunction | None = None) -> DescentResult:
    """Global minimizer by Armijo steepest descent.

    Without ``start`` the descent begins at the first ``2^-k * bubble`` with
    negative energy.
    """
    E = _Energy(ctx, nl, lam)
    if start is None:
        t, val = _negative_start(E, fixture("bubble", ctx.domain))
        if t is None:
            zero = GridFunction.zeros(ctx.domain)
            return DescentResult(zero, energy(ctx, nl, lam, zero), math.inf, 0, False, math.nan, math.nan,
                                 message="no negative-energy start found after 60 halvings")
        x0 = t * fixture("bubble", ctx.domain).interior
    else:
        ctx.check(start)
        x0, t, val = start.interior.copy(), 1.0, E.value(start.interior)
    x, ev, g, it, hist, msg = _armijo_descent(E, x0, config, config.max_iters)
    return DescentResult(E.func(x), ev, _sup(g), it, msg == "converged", float(val), float(t), hist, msg)


# ---------------------------------------------------------------------------
# mountain pass

@dataclass
class MountainPassResult:
    u: GridFunction | None
    energy: EnergyValue | None
    residual: float
    status: str
    path_max_history: list[float] = field(repr=False, default_factory=list)
    sweeps: int = 0
    refine_iterations: int = 0
    lowest_eigenvalue: float = math.nan
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def __iter__(self):
        return iter((self.u, self.energy))


def _path_fractions(E: _Energy, end: np.ndarray, n: int) -> np.ndarray:
    """Arclength fractions of the images, dense around the top of ``t -> I(t u1)``.

    The energy along the straight path is scanned at ``t = 2^(-j/4)``; half of
    the images go to ``[0, 2 t*]`` for the best scanned ``t*`` so that a
    barrier close to 0 is resolved.
    """
    ts = 2.0 ** (-np.arange(0, 161) / 4.0)
    vals = np.array([E.value(t * end) for t in ts])
    t_star = float(ts[int(np.argmax(vals))])
    if vals.max() <= 0 or 2 * t_star >= 0.5:
        return np.linspace(0.0, 1.0, n)
    k = n // 2
    return np.concatenate([np.linspace(0.0, 2 * t_star, k, endpoint=False),
                           np.linspace(2 * t_star, 1.0, n - k)])


def _redistribute(path: np.ndarray, fractions: np.ndarray) -> np.ndarray:
    """Re-place images at the given arclength fractions of the piecewise-linear path."""
    seg = np.sqrt(np.sum(np.diff(path, axis=0) ** 2, axis=1))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return path
    target = fractions * s[-1]
    out = np.empty_like(path)
    for j in range(path.shape[1]):
        out[:, j] = np.interp(target, s, path[:, j])
    out[0], out[-1] = path[0], path[-1]
    return out


def _hessian_min_mode(E: _Energy, x: np.ndarray, g: np.ndarray, v0: np.ndarray | None):
    n = x.size
    eps = 1e-6 * max(1.0, _sup(x))

    def hv(v):
        v = np.ravel(v)
        nv = np.linalg.norm(v)
        if nv == 0:
            return np.zeros(n)
        d = eps / nv
        return (E.grad(x + d * v) - E.grad(x - d * v)) / (2 * d)

    if n <= 64:
        H = np.column_stack([hv(e) for e in np.eye(n)])
        H = 0.5 * (H + H.T)
        w, V = np.linalg.eigh(H)
        return float(w[0]), V[:, 0]
    op = LinearOperator((n, n), matvec=hv, dtype=float)
    start = np.ones(n) if v0 is None else v0
    w, V = eigsh(op, k=1, which="SA", v0=start, tol=1e-8)
    return float(w[0]), V[:, 0]


def mountain_pass(ctx: WeakFormContext, nl: Nonlinearity, lam: float, u1: GridFunction,
                  config: SolverConfig = SolverConfig(), alpha: float | None = None) -> MountainPassResult:
    """Critical point at the mountain-pass level between 0 and ``u1``.

    With ``alpha`` given, a path maximum falling below ``alpha / 2`` is
    reported as a geometry violation: the ring estimate that should separate
    0 from ``u1`` does not hold on this mesh.
    """
    ctx.check(u1)
    E = _Energy(ctx, nl, lam)
    P = config.path_points
    end = u1.interior
    if not E.value(end) < 0:
        return MountainPassResult(None, None, math.inf, "invalid_endpoint",
                                  message="the path endpoint must have negative energy")
    frac = _path_fractions(E, end, P)
    path = frac[:, None] * end[None, :]
    vals = np.array([E.value(p) for p in path])
    history = [float(vals.max())]
    floor = None if alpha is None else 0.5 * alpha

    def violation(sweeps):
        return MountainPassResult(None, None, math.inf, "geometry_violation", history, sweeps,
                                  message=f"path maximum {history[-1]:.6g} fell below alpha/2 = {floor:.6g}")

    if floor is not None and history[-1] < floor:
        return violation(0)
    tau = 1.0
    sweeps = 0
    for sweeps in range(1, config.deform_steps + 1):
        grads = np.array([E.grad(p) for p in path[1:-1]])
        cur = float(vals.max())
        while True:
            trial = path.copy()
            trial[1:-1] -= tau * grads
            trial = _redistribute(trial, frac)
            tv = np.array([E.value(p) for p in trial])
            if tv.max() <= cur:
                break
            tau *= config.backtrack
            if tau < 1e-300:
                break
        if tau < 1e-300:
            break
        change = cur - float(tv.max())
        path, vals = trial, tv
        history.append(float(vals.max()))
        tau /= config.backtrack
        if floor is not None and history[-1] < floor:
            return violation(sweeps)
        if change <= 1e-12 * max(abs(cur), 1e-300):
            break

    k = int(np.argmax(vals[1:-1])) + 1
    x = path[k].copy()
    ev, g = E.both(x)
    tol = config.tolerance(_sup(g))
    tau = 1.0
    v = None
    lowest = math.nan
    it = 0
    status, msg = "not_converged", "refine_iters reached"
    while it < config.refine_iters:
        if _sup(g) <= tol:
            status, msg = "ok", "converged"
            break
        lowest, v = _hessian_min_mode(E, x, g, v)
        d = -(g - 2.0 * float(g @ v) * v)
        r2 = float(g @ g)
        while True:
            xn = x + tau * d
            evn, gn = E.both(xn)
            if float(gn @ gn) < r2:
                break
            tau *= config.backtrack
            if tau < 1e-300:
                break
        if tau < 1e-300:
            msg = "residual line search failed"
            break
        x, ev, g = xn, evn, gn
        tau = min(1.0, tau / config.backtrack)
        it += 1
    if status == "ok" and floor is not None and ev.total < floor:
        status, msg = "geometry_violation", f"saddle energy {ev.total:.6g} below alpha/2 = {floor:.6g}"
    return MountainPassResult(E.func(x), ev, _sup(g), status, history, sweeps, it, lowest, msg)


# ---------------------------------------------------------------------------
# orchestration

@dataclass
class SolutionReport:
    status: str
    lam: float
    lambda_star: float
    rho: float
    alpha: float
    alpha_lower: float
    exponent: float
    c1_estimate: float
    c1_samples: int
    ring_bound: float
    probe_lambda: float
    provisional_norm: float
    hypotheses_passed: bool
    u1: GridFunction | None = None
    u2: GridFunction | None = None
    I1: EnergyValue | None = None
    I2: EnergyValue | None = None
    residual1: float = math.nan
    residual2: float = math.nan
    iterations1: int = 0
    iterations2: int = 0
    sweeps: int = 0
    norm_u1: float = math.nan
    distance: float = math.nan
    mountain_pass_status: str = ""
    messages: list[str] = field(default_factory=list)
    hypotheses: object = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.status == "ok"

    def rows(self) -> list[tuple[str, object]]:
        """``key, value`` pairs in a fixed order (the report CSV)."""
        def en(e):
            return math.nan if e is None else e.total
        return [
            ("status", self.status),
            ("lambda", self.lam),
            ("lambda_star", self.lambda_star),
            ("rho", self.rho),
            ("alpha", self.alpha),
            ("alpha_lower", self.alpha_lower),
            ("exponent", self.exponent),
            ("ring_bound", self.ring_bound),
            ("c1_estimate", self.c1_estimate),
            ("c1_samples", self.c1_samples),
            ("probe_lambda", self.probe_lambda),
            ("provisional_norm", self.provisional_norm),
            ("hypotheses_passed", self.hypotheses_passed),
            ("I1", en(self.I1)),
            ("I2", en(self.I2)),
            ("residual1", self.residual1),
            ("residual2", self.residual2),
            ("iterations1", self.iterations1),
            ("iterations2", self.iterations2),
            ("sweeps", self.sweeps),
            ("norm_u1", self.norm_u1),
            ("distance", self.distance),
            ("mountain_pass_status", self.mountain_pass_status),
            ("messages", " | ".join(self.messages)),
        ]


def solve_two(ctx: WeakFormContext, nl: Nonlinearity, config: SolverConfig = SolverConfig(),
              lam: float | str = "auto", force: bool = False) -> SolutionReport:
    """Estimate ``c1``, ``rho`` and ``lambda*``, gate, then compute ``u1`` and ``u2``.

    ``lam="auto"`` picks ``min(0.5 lambda*, probe_lambda)``.  The gate refuses
    ``lam >= lambda*`` or failed hypotheses unless ``force`` is set.
    Status is ``"ok"``, ``"partial"`` (some stage failed its checks) or
    ``"refused"``.
    """
    M, dom = ctx.M, ctx.domain
    hyp = validate_hypotheses(nl, M, dim=dom.dim, points=ctx.cells.points[:3])
    prov = provisional_geometry(ctx, nl, config)
    c1, geo = prov.c1, prov.geometry
    messages = []
    if not prov.descent.converged:
        messages.append(f"provisional minimize: {prov.descent.message}")
    if geo is None:
        # no nontrivial provisional minimizer, so no radius to build lambda* from
        messages.append("provisional minimizer is zero; lambda* undefined")
        geo = GeometryBound(math.nan, math.nan, math.nan, 0.0, math.nan)
    rho, prov_norm = geo.rho, prov.norm
    if lam == "auto":
        lam_val = min(0.5 * geo.lambda_star, config.probe_lambda) if geo.lambda_star > 0 else config.probe_lambda
    else:
        lam_val = float(lam)
    report = SolutionReport(
        status="ok", lam=lam_val, lambda_star=geo.lambda_star, rho=rho, alpha=geo.alpha,
        alpha_lower=geo.alpha_lower, exponent=geo.exponent, c1_estimate=c1.value,
        c1_samples=c1.n_samples, ring_bound=geo.ring_bound(lam_val, nl.C2, c1.value, nl.q),
        probe_lambda=config.probe_lambda, provisional_norm=prov_norm,
        hypotheses_passed=hyp.passed, messages=messages, hypotheses=hyp)
    refuse = []
    if not hyp.passed:
        failed = [k for k, ok in hyp.details["checks"].items() if not ok]
        refuse.append("hypotheses failed: " + ", ".join(failed))
    if not lam_val < geo.lambda_star:  # also catches an undefined lambda*
        refuse.append(f"lambda={lam_val:.6g} is not below lambda*={geo.lambda_star:.6g}")
    if refuse:
        messages.extend(refuse)
        if not force:
            report.status = "refused"
            return report
        messages.append("gate overridden by force")

    res1 = minimize(ctx, nl, lam_val, config)
    report.u1, report.I1 = res1.u, res1.energy
    report.residual1, report.iterations1 = res1.residual, res1.iterations
    partial = bool(refuse)
    if not (res1.converged and res1.energy.total < 0):
        messages.append(f"minimize: {res1.message}, I1={res1.energy.total:.6g}")
        report.status = "partial"
        return report
    report.norm_u1 = seminorm_gagliardo(M, res1.u, ctx.s, ctx.scope, ctx.scheme).norm
    if not rho < report.norm_u1:
        messages.append(f"rho={rho:.6g} is not below ||u1||={report.norm_u1:.6g}")

    mp = mountain_pass(ctx, nl, lam_val, res1.u, config, alpha=geo.alpha)
    report.mountain_pass_status, report.sweeps = mp.status, mp.sweeps
    report.iterations2 = mp.refine_iterations
    if mp.message:
        messages.append(f"mountain pass: {mp.message}")
    if mp.u is not None:
        report.u2, report.I2, report.residual2 = mp.u, mp.energy, mp.residual
        report.distance = _sup(mp.u.interior - res1.u.interior)
    ok = (mp.ok and report.I2 is not None and report.I2.total > 0
          and report.distance > 1e-6 * _sup(res1.u.interior))
    report.status = "ok" if ok and not partial else "partial"
    return report
