"""Load distribution and power control for a fixed association.

Loads follow the on/off rule; powers of the fully loaded BSs solve the
exponential-transformed convex program via its dual: closed-form primal
recovery per iteration (bisection inverse for the SINR variables, a
T-regularized closed form for the log powers) and multiplier gradient
steps.  A projected-Newton polish in log-power space then drives the KKT
residuals of the transformed problem to tolerance, and a plain projected
gradient ascent on the same concave objective is kept as an independent
cross-check solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BracketFailure, EmptyActiveSet, TooLarge
from .model import (
    RATE_UNIT_SCALE,
    Association,
    NetworkState,
    Scenario,
    derive_load_from_association,
    opt_resource_allocation,
    weighted_utility,
)

LN2 = float(np.log(2.0))


# --- the decreasing link function and its inverse -----------------------------

def f_of(x):
    """f(x) = e^x / ((1+e^x) ln(1+e^x)), decreasing from 1 to 0.

    Evaluated as sigmoid(x)/softplus(x) with an asymptotic branch for very
    negative x where both factors underflow.
    """
    x = np.asarray(x, dtype=float)
    small = x < -30.0
    safe = np.where(small, 0.0, x)
    neg = np.exp(-np.abs(safe))
    sig = np.where(safe >= 0, 1.0 / (1.0 + neg), neg / (1.0 + neg))
    sp = np.logaddexp(0.0, safe)
    core = sig / sp
    out = np.where(small, 1.0 - np.exp(np.minimum(x, 0.0)) / 2.0, core)
    return out if out.shape else float(out)


def fbar_sinr(eta):
    """f expressed in the SINR domain: fbar(eta) = f(ln eta)."""
    eta = np.asarray(eta, dtype=float)
    out = eta / ((1.0 + eta) * np.log1p(eta))
    small = eta < 1e-8
    if np.any(small):
        out = np.where(small, 1.0 - eta / 2.0, out)
    return out if out.shape else float(out)


def f_prime_of(x):
    """Derivative of f; negative everywhere."""
    x = np.asarray(x, dtype=float)
    small = x < -30.0
    safe = np.where(small, 0.0, x)
    neg = np.exp(-np.abs(safe))
    sig = np.where(safe >= 0, 1.0 / (1.0 + neg), neg / (1.0 + neg))
    sp = np.logaddexp(0.0, safe)
    core = sig * ((1.0 - sig) * sp - sig) / sp**2
    out = np.where(small, -np.exp(np.minimum(x, 0.0)) / 2.0, core)
    return out if out.shape else float(out)


def f_inverse(y, tol: float = 1e-10):
    """Inverse of f by bisection; y is clamped into (1e-9, 1-1e-9).

    Vectorized; the initial bracket [-50, 50] is widened geometrically if a
    clamped target escapes it.  Raises BracketFailure on NaN input.
    """
    y = np.asarray(y, dtype=float)
    if np.isnan(y).any():
        raise BracketFailure("NaN target for the inverse link function")
    target = np.clip(y, 1e-9, 1.0 - 1e-9)
    lo = np.full(target.shape, -50.0)
    hi = np.full(target.shape, 50.0)
    # f is decreasing: f(lo) ~ 1, f(hi) ~ 1/hi; widen until the target brackets.
    for _ in range(45):
        bad_lo = f_of(lo) < target
        bad_hi = f_of(hi) > target
        if not (np.any(bad_lo) or np.any(bad_hi)):
            break
        lo = np.where(bad_lo, lo * 2.0, lo)
        hi = np.where(bad_hi, hi * 2.0, hi)
    else:
        raise BracketFailure("could not bracket the inverse link target")
    mid = 0.5 * (lo + hi)
    for k in range(200):
        fmid = f_of(mid)
        if k % 8 == 7 and np.max(hi - lo) < 1e-13 and np.max(np.abs(fmid - target)) <= tol:
            break
        high_side = fmid > target  # need larger x to reduce f
        lo = np.where(high_side, mid, lo)
        hi = np.where(high_side, hi, mid)
        mid = 0.5 * (lo + hi)
    out = mid
    return out if out.shape else float(out)


def _f_inverse_warm(target: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Newton solve of f(x) = target from a warm start, bisection fallback.

    f is smooth and strictly decreasing, so Newton from the previous iterate
    converges in a few steps along the dual iteration's slowly moving
    targets.  Targets are clamped to keep the log-SINR inside +-60.
    """
    target = np.clip(target, f_of(60.0) * (1.0 + 1e-12), 1.0 - 1e-12)
    x = np.clip(x0, -60.0, 60.0)
    err = f_of(x) - target
    for _ in range(12):
        if np.max(np.abs(err)) <= 1e-12:
            break
        slope = f_prime_of(x)
        x = np.clip(x - err / np.where(np.abs(slope) > 1e-18, slope, -1e-18), -60.0, 60.0)
        err = f_of(x) - target
    bad = np.abs(err) > 1e-10
    if np.any(bad):
        x = np.where(bad, f_inverse(target), x)
    return x


# --- fixed-association structure ----------------------------------------------

@dataclass
class FullLoadStructure:
    """Active-set view of the network for a fixed association.

    Rows of every matrix here are the active (fully loaded) BSs in network
    order; users keep their global indices.  The transform constants are
    a[k, j] = ln(g_kj / g_b(j)j) on interferer entries and
    b[j] = ln(noise / g_b(j)j).
    """

    active: np.ndarray  # (m,) BS indices with load 1
    serving_pos: np.ndarray  # (J,) position of the serving BS within `active`
    gains: np.ndarray  # (m, J)
    max_power: np.ndarray  # (m,)
    priorities: np.ndarray  # (J,)
    noise: float
    interferer_mask: np.ndarray  # (m, J) True where row is not the server
    a: np.ndarray  # (m, J), 0 on serving entries
    b: np.ndarray  # (J,)

    @property
    def num_active(self) -> int:
        return self.active.shape[0]

    @property
    def num_users(self) -> int:
        return self.priorities.shape[0]


def build_structure(scenario: Scenario, association: Association) -> FullLoadStructure:
    load = derive_load_from_association(association, scenario.num_bs)
    active = np.flatnonzero(load > 0)
    if active.size == 0:
        raise EmptyActiveSet("association leaves every BS unloaded")
    pos_of = -np.ones(scenario.num_bs, dtype=int)
    pos_of[active] = np.arange(active.size)
    serving_pos = pos_of[association.serving]
    gains = scenario.gains[active, :]
    cols = np.arange(scenario.num_users)
    g_serv = gains[serving_pos, cols]
    mask = np.ones((active.size, scenario.num_users), dtype=bool)
    mask[serving_pos, cols] = False
    a = np.where(mask, np.log(gains / g_serv[None, :]), 0.0)
    b = np.log(scenario.noise / g_serv)
    return FullLoadStructure(
        active=active,
        serving_pos=serving_pos,
        gains=gains,
        max_power=scenario.max_power[active],
        priorities=scenario.priorities,
        noise=scenario.noise,
        interferer_mask=mask,
        a=a,
        b=b,
    )


def _log_sinr(st: FullLoadStructure, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ln eta_j at log powers v, plus each interferer's share of I_j."""
    p = np.exp(v)
    cols = np.arange(st.num_users)
    received = p[:, None] * st.gains
    interference = np.where(st.interferer_mask, received, 0.0)
    total = interference.sum(axis=0) + st.noise
    t = v[st.serving_pos] + np.log(st.gains[st.serving_pos, cols]) - np.log(total)
    share = interference / total[None, :]
    return t, share


def transformed_objective(st: FullLoadStructure, v: np.ndarray) -> float:
    """sum_j w_j ln(ln(1+eta_j(v))); concave in the log powers."""
    t, _ = _log_sinr(st, v)
    return float(np.sum(st.priorities * np.log(np.logaddexp(0.0, t))))


def objective_gradient(st: FullLoadStructure, v: np.ndarray) -> np.ndarray:
    t, share = _log_sinr(st, v)
    wf = st.priorities * f_of(t)
    own = np.bincount(st.serving_pos, weights=wf, minlength=st.num_active)
    return own - share @ wf


def objective_hessian(st: FullLoadStructure, v: np.ndarray) -> np.ndarray:
    """Hessian of the transformed objective in log powers.

    Per user: w_j [f'(t_j) g_j g_j^T + f(t_j) H_tj] with g_j the gradient of
    ln eta_j and H_tj = -(diag(pi_j) - pi_j pi_j^T) its curvature, pi_j the
    interference shares.
    """
    t, share = _log_sinr(st, v)
    fp = st.priorities * f_prime_of(t)
    f0 = st.priorities * f_of(t)
    grad_t = -share.copy()  # (m, J), columns are the per-user gradients
    grad_t[st.serving_pos, np.arange(st.num_users)] += 1.0
    hess = (grad_t * fp[None, :]) @ grad_t.T
    hess += (share * f0[None, :]) @ share.T
    diag = (share * f0[None, :]).sum(axis=1)
    hess[np.arange(st.num_active), np.arange(st.num_active)] -= diag
    return hess


def utility_of_power(
    scenario: Scenario, association: Association, st: FullLoadStructure, v: np.ndarray
) -> float:
    p = np.zeros(scenario.num_bs)
    p[st.active] = np.exp(v)
    d = np.zeros(scenario.num_bs)
    d[st.active] = 1.0
    return weighted_utility(scenario, association, d, p)


# --- dual method ----------------------------------------------------------------

@dataclass
class LdpcOptions:
    t_reg: float = 1e-3  # strength of the log-power regularizer
    kkt_tol: float = 1e-6
    max_iter: int = 20000
    step0: float = 0.3  # multiplier step scale, delta(t) = step0/sqrt(t)
    v_step0: float = 0.3  # bounded log-power step scale, same schedule
    step_mode: str = "log"  # "log" (scale-free) or "additive" (literal updates)
    polish: bool = True
    polish_max_iter: int = 200
    dual_tol: float = 1e-6  # dual phase exits at this residual
    stall_window: int = 600
    trace_every: int = 10


@dataclass
class LdpcDuals:
    alpha: np.ndarray  # (J,) > 0
    beta: np.ndarray  # (J,) < 0
    lam: np.ndarray  # (m, J) < 0 on interferer entries
    zeta: np.ndarray  # (m,) >= 0


@dataclass
class LdpcResult:
    state: NetworkState
    duals: LdpcDuals
    utility: float
    kkt_residuals: dict
    converged: bool
    dual_iterations: int
    dual_phase_utility: float
    polish_iterations: int
    trace_utility: np.ndarray
    trace_residual: np.ndarray
    flags: list = field(default_factory=list)


def _consistent_duals(st, v):
    """Multipliers consistent with log powers v via the stationarity maps.

    At this point every equality constraint and the interference budget hold
    exactly, so the iteration starts from zero residuals on a correct scale
    regardless of how heterogeneous the gains are.
    """
    u = _log_sinr(st, v)[0]
    wvar = u - v[st.serving_pos] + st.b
    svar = np.where(
        st.interferer_mask,
        u[None, :] + v[:, None] - v[st.serving_pos][None, :] + st.a,
        0.0,
    )
    alpha = st.priorities * f_of(u)
    beta = -alpha * np.exp(wvar)
    lam = np.where(st.interferer_mask, -alpha[None, :] * np.exp(svar), 0.0)
    return u, alpha, beta, lam


def kkt_report(st: FullLoadStructure, v: np.ndarray, duals: LdpcDuals | None = None):
    """KKT residuals of the transformed problem at log powers v.

    Multipliers, unless supplied, are reconstructed from the stationarity
    identities, which makes every condition except log-power stationarity
    hold by construction; the reported bottleneck is then exactly the
    projected-gradient residual of the concave objective over v <= ln P.
    """
    cols = np.arange(st.num_users)
    t, share = _log_sinr(st, v)
    ln_p = np.log(st.max_power)
    u = t
    wvar = u - v[st.serving_pos] + st.b
    svar = np.where(
        st.interferer_mask, u[None, :] + v[:, None] - v[st.serving_pos][None, :] + st.a, 0.0
    )
    if duals is None:
        alpha = st.priorities * f_of(u)
        beta = -alpha * np.exp(wvar)
        lam = np.where(st.interferer_mask, -alpha[None, :] * np.exp(svar), 0.0)
    else:
        alpha, beta, lam = duals.alpha, duals.beta, duals.lam

    lam_col = lam.sum(axis=0)
    r_u = np.abs(st.priorities * f_of(u) + beta + lam_col)
    own_beta = np.bincount(st.serving_pos, weights=-beta, minlength=st.num_active)
    lam_into_cell = np.bincount(st.serving_pos, weights=lam_col, minlength=st.num_active)
    grad_v = own_beta + lam.sum(axis=1) - lam_into_cell
    at_cap = v >= ln_p - 1e-9
    zeta_hat = np.where(at_cap, np.maximum(grad_v, 0.0), 0.0)
    r_v = np.abs(grad_v - zeta_hat)
    r_w = np.abs(alpha * np.exp(wvar) + beta)
    r_s = np.abs(np.where(st.interferer_mask, alpha[None, :] * np.exp(svar) + lam, 0.0))
    ineq = np.exp(wvar) + np.where(st.interferer_mask, np.exp(svar), 0.0).sum(axis=0) - 1.0
    feas = np.maximum(ineq, 0.0)
    comp_alpha = np.abs(alpha * ineq)
    comp_zeta = np.abs(zeta_hat * (v - ln_p))
    cap = np.maximum(v - ln_p, 0.0)
    report = {
        "stationarity_u": float(r_u.max()),
        "stationarity_v": float(r_v.max()),
        "stationarity_w": float(r_w.max()),
        "stationarity_s": float(r_s.max(initial=0.0)),
        "primal_feasibility": float(max(feas.max(), cap.max())),
        "complementarity": float(max(comp_alpha.max(), comp_zeta.max())),
    }
    report["overall"] = max(report.values())
    return report, LdpcDuals(alpha=alpha, beta=beta, lam=lam, zeta=zeta_hat)


def _polish_newton(st, v, tol, max_iter):
    """Projected Newton ascent of the concave objective over v <= ln P."""
    ln_p = np.log(st.max_power)
    v = np.minimum(v, ln_p)
    obj = transformed_objective(st, v)
    it = 0
    for it in range(1, max_iter + 1):
        grad = objective_gradient(st, v)
        at_cap = v >= ln_p - 1e-12
        residual = np.abs(np.where(at_cap, np.minimum(grad, 0.0), grad))
        if residual.max() <= tol:
            break
        free = ~(at_cap & (grad > 0))
        direction = np.zeros_like(v)
        if free.any():
            hess = objective_hessian(st, v)[np.ix_(free, free)]
            g_free = grad[free]
            try:
                step = np.linalg.solve(hess - 1e-12 * np.eye(free.sum()), -g_free)
            except np.linalg.LinAlgError:
                step = g_free
            if float(step @ g_free) <= 0:
                step = g_free
            direction[free] = step
        else:
            break
        scale = 1.0
        improved = False
        g_dot_d = float(grad @ direction)
        for _ in range(60):
            trial = np.minimum(v + scale * direction, ln_p)
            trial_obj = transformed_objective(st, trial)
            if trial_obj >= obj + 1e-4 * scale * g_dot_d - 1e-15:
                v, obj = trial, trial_obj
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    return v, it


def ldpc_solve(
    scenario: Scenario,
    association: Association,
    options: LdpcOptions | None = None,
    warm_power: np.ndarray | None = None,
) -> LdpcResult:
    """Solve loads and powers for a fixed association.

    Loads are the on/off rule.  Powers run the dual iteration (closed-form
    primal maps, multiplier gradient steps with a diminishing step halved on
    residual divergence), then the projected-Newton polish unless disabled.
    The returned power never yields a utility below the warm-start point.
    """
    opts = options or LdpcOptions()
    st = build_structure(scenario, association)
    m, n = st.num_active, st.num_users
    ln_p = np.log(st.max_power)

    if warm_power is None:
        p_warm = st.max_power / 2.0
    else:
        p_warm = np.asarray(warm_power, dtype=float)[st.active]
        p_warm = np.clip(p_warm, 1e-12 * st.max_power, st.max_power)
    v = np.log(p_warm)
    warm_utility = utility_of_power(scenario, association, st, v)

    u, alpha, beta, lam = _consistent_duals(st, v)
    zeta = np.zeros(m)

    scale = 1.0  # halved only on outright divergence of the residual norm
    best_merit = np.inf
    init_merit = None
    best_v = v.copy()
    best_utility = warm_utility
    trace_u, trace_r = [], []
    mark_t, mark_merit = 0, np.inf
    flags: list = []
    t = 0
    merit = np.inf
    for t in range(1, opts.max_iter + 1):
        lam_col = lam.sum(axis=0)
        u = _f_inverse_warm(
            np.clip(-(beta + lam_col) / st.priorities, 1e-9, 1.0 - 1e-9), u
        )
        own_beta = np.bincount(st.serving_pos, weights=-beta, minlength=m)
        lam_into = np.bincount(st.serving_pos, weights=lam_col, minlength=m)
        e_coef = own_beta + lam.sum(axis=1) - lam_into - zeta
        # Bounded ascent on the regularized Lagrangian in v; shares its fixed
        # point with the closed-form min(1 + ln P - T/E, ln P) update but
        # moves a limited distance per iteration, which keeps the strongly
        # coupled instances from slamming between the cap and the interior.
        g_v = e_coef - opts.t_reg / (1.0 + ln_p - v)
        v = np.minimum(v + (opts.v_step0 / np.sqrt(t)) * np.clip(g_v, -2.0, 2.0), ln_p)
        wvar = np.log(np.maximum(-beta, 1e-300) / alpha)
        svar = np.where(
            st.interferer_mask,
            np.log(np.maximum(-lam, 1e-300) / alpha[None, :]),
            0.0,
        )
        r_alpha = (
            np.exp(wvar)
            + np.where(st.interferer_mask, np.exp(svar), 0.0).sum(axis=0)
            - 1.0
        )
        r_beta = wvar - u + v[st.serving_pos] - st.b
        r_lam = np.where(
            st.interferer_mask,
            svar - u[None, :] - v[:, None] + v[st.serving_pos][None, :] - st.a,
            0.0,
        )
        at_cap = v >= ln_p - 1e-9
        r_v = np.abs(np.where(at_cap, np.minimum(g_v, 0.0), g_v))
        merit = max(
            np.abs(r_alpha).max(),
            np.abs(r_beta).max(),
            np.abs(r_lam).max(initial=0.0),
            float(r_v.max()),
        )
        if init_merit is None:
            init_merit = max(merit, 1e-6)
        if t % opts.trace_every == 0 or t == 1 or merit <= opts.dual_tol:
            util_now = utility_of_power(scenario, association, st, v)
            if util_now > best_utility:
                best_utility = util_now
                best_v = v.copy()
            trace_u.append(util_now)
            trace_r.append(merit)
        if merit <= opts.dual_tol:
            break
        if merit > 10.0 * max(best_merit, init_merit):
            scale = max(scale * 0.5, 1e-4)
        best_merit = min(best_merit, merit)
        if t - mark_t >= opts.stall_window:
            if best_merit > 0.9 * mark_merit:
                flags.append("dual-phase-stall")
                break
            mark_t, mark_merit = t, best_merit

        delta = scale * opts.step0 / np.sqrt(t)
        if opts.step_mode == "log":
            alpha = alpha * np.exp(np.clip(delta * r_alpha, -0.7, 0.7))
            beta = beta * np.exp(np.clip(-delta * r_beta, -0.7, 0.7))
            lam = np.where(
                st.interferer_mask,
                lam * np.exp(np.clip(-delta * r_lam, -0.7, 0.7)),
                0.0,
            )
        else:
            alpha = np.maximum(alpha + delta * r_alpha, 1e-12)
            beta = np.minimum(beta + delta * r_beta, -1e-300)
            lam = np.where(
                st.interferer_mask, np.minimum(lam + delta * r_lam, -1e-300), 0.0
            )
        zeta = np.maximum(zeta + delta * (v - ln_p), 0.0)

    dual_iterations = t
    util_final = utility_of_power(scenario, association, st, v)
    if util_final > best_utility:
        best_utility = util_final
        best_v = v.copy()
    dual_phase_utility = best_utility
    v = best_v

    polish_iterations = 0
    if opts.polish:
        v, polish_iterations = _polish_newton(st, v, opts.kkt_tol, opts.polish_max_iter)
        final_utility = utility_of_power(scenario, association, st, v)
        if final_utility < best_utility:  # keep the better iterate; should not trigger
            v = best_v
            final_utility = best_utility
            flags.append("polish-rejected")
    else:
        final_utility = best_utility

    report, duals_hat = kkt_report(st, v)
    converged = report["overall"] <= opts.kkt_tol
    if not converged:
        flags.append("non-convergence")
    if final_utility < warm_utility - 1e-9:
        flags.append("below-warm-start")

    load = np.zeros(scenario.num_bs)
    load[st.active] = 1.0
    power = np.zeros(scenario.num_bs)
    power[st.active] = np.exp(v)
    fractions = opt_resource_allocation(
        association, load, scenario.priorities, scenario.num_bs
    )
    state = NetworkState(load=load, power=power, fractions=fractions)
    return LdpcResult(
        state=state,
        duals=duals_hat,
        utility=final_utility,
        kkt_residuals=report,
        converged=converged,
        dual_iterations=dual_iterations,
        dual_phase_utility=dual_phase_utility,
        polish_iterations=polish_iterations,
        trace_utility=np.asarray(trace_u),
        trace_residual=np.asarray(trace_r),
        flags=flags,
    )


def pga_solve(
    scenario: Scenario,
    association: Association,
    tol: float = 1e-8,
    max_iter: int = 5000,
    warm_power: np.ndarray | None = None,
) -> tuple[NetworkState, float, int]:
    """Projected gradient ascent on the concave log-power objective.

    Independent cross-check for the dual method: plain Armijo backtracking
    from the same warm start, no Newton, no multipliers.
    """
    st = build_structure(scenario, association)
    ln_p = np.log(st.max_power)
    if warm_power is None:
        v = np.log(st.max_power / 2.0)
    else:
        p0 = np.clip(np.asarray(warm_power, dtype=float)[st.active], 1e-12, None)
        v = np.minimum(np.log(p0), ln_p)
    obj = transformed_objective(st, v)
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        grad = objective_gradient(st, v)
        at_cap = v >= ln_p - 1e-12
        residual = np.abs(np.where(at_cap, np.minimum(grad, 0.0), grad))
        if residual.max() <= tol:
            break
        step = min(step * 2.0, 1e3)
        accepted = False
        for _ in range(80):
            trial = np.minimum(v + step * grad, ln_p)
            trial_obj = transformed_objective(st, trial)
            gain = float(grad @ (trial - v))
            if trial_obj >= obj + 1e-4 * gain:
                v, obj = trial, trial_obj
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    load = np.zeros(scenario.num_bs)
    load[st.active] = 1.0
    power = np.zeros(scenario.num_bs)
    power[st.active] = np.exp(v)
    fractions = opt_resource_allocation(
        association, load, scenario.priorities, scenario.num_bs
    )
    state = NetworkState(load=load, power=power, fractions=fractions)
    return state, utility_of_power(scenario, association, st, v), it


def binary_load_grid_oracle(
    scenario: Scenario,
    association: Association,
    grid_step: float = 0.1,
    power_points: int = 50,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Exhaustive search over a load grid with a power grid per load point.

    Small instances only.  Returns the maximizing (loads, powers, utility);
    used to confirm that binary loads dominate every interior grid point.
    """
    num_bs, num_users = scenario.num_bs, scenario.num_users
    if num_bs > 3 or num_users > 6:
        raise TooLarge("grid oracle limited to 3 BSs and 6 users")
    levels = np.arange(0.0, 1.0 + grid_step / 2, grid_step)
    p_axes = [np.linspace(p / power_points, p, power_points) for p in scenario.max_power]
    mesh = np.meshgrid(*p_axes, indexing="ij")
    powers = np.column_stack([m.ravel() for m in mesh])  # (M, I)

    w = scenario.priorities
    kb = scenario.bandwidth_total / RATE_UNIT_SCALE
    serving = association.serving
    cols = np.arange(num_users)
    mass = np.bincount(serving, weights=w, minlength=num_bs)

    best = (-np.inf, None, None)
    load_grids = np.meshgrid(*([levels] * num_bs), indexing="ij")
    load_points = np.column_stack([g.ravel() for g in load_grids])
    for d in load_points:
        dp = powers * d[None, :]  # (M, I)
        received = dp[:, :, None] * scenario.gains[None, :, :]  # (M, I, J)
        total = received.sum(axis=1) + scenario.noise  # (M, J)
        own = received[:, serving, cols]
        denom = total - own
        eta = powers[:, serving] * scenario.gains[serving, cols][None, :] / denom
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = kb * w[None, :] * d[serving][None, :] * np.log2(1.0 + eta) / mass[serving][None, :]
            vals = np.where(inner > 0, w[None, :] * np.log2(np.where(inner > 0, inner, 1.0)), -np.inf)
        util = vals.sum(axis=1)
        k = int(np.argmax(util))
        if util[k] > best[0]:
            best = (float(util[k]), d.copy(), powers[k].copy())
    return best[1], best[2], best[0]
