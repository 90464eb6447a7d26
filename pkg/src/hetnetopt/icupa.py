"""Per-cell unequal resource fractions and powers under a fixed power budget.

With the average transmit power of every full-load BS frozen, each cell's
joint fraction/power problem is an independent convex program.  The dual
method iterates: per-user fractions from a monotone scalar equation (root
by safeguarded Newton/bisection), budget shares in closed form, and two
multiplier updates per cell; a tiny Broyden polish then zeroes the two
constraint residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyActiveSet, NoRoot
from .model import Association, NetworkState, Scenario, network_utility

LN2 = float(np.log(2.0))


def fbar_of(x):
    """fbar(x) = x / ((1+x) ln(1+x)) on x > 0, decreasing with limit 1 at 0+."""
    x = np.asarray(x, dtype=float)
    if (x <= 0).any():
        raise DomainError("fbar is defined for positive arguments only")
    out = np.where(x < 1e-8, 1.0 - x / 2.0, x / ((1.0 + x) * np.log1p(x)))
    return out if out.shape else float(out)


def _fbar_prime(x):
    x = np.asarray(x, dtype=float)
    sp = np.log1p(x)
    out = np.where(x < 1e-8, -0.5, (sp - x) / ((1.0 + x) ** 2 * sp**2))
    return out


@dataclass(frozen=True)
class CellProblem:
    """One full-load BS with its users, frozen interference, and budget."""

    bs_index: int
    users: np.ndarray  # (n,) global user indices
    priorities: np.ndarray  # (n,)
    gains: np.ndarray  # (n,) direct gains of this BS to its users
    interference: np.ndarray  # (n,) fixed interference-plus-noise, watts
    budget: float  # average per-block transmit power, watts

    def __post_init__(self):
        if self.users.size == 0:
            raise EmptyActiveSet(f"BS {self.bs_index} has no users")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if (self.interference <= 0).any():
            raise ValueError("interference must include the noise floor")


@dataclass
class CellSolution:
    fractions: np.ndarray  # (n,) sums to 1
    shares: np.ndarray  # (n,) q_ij, sums to the budget
    powers: np.ndarray  # (n,) q/y
    psi: float
    phi: float
    kkt_residuals: dict
    converged: bool
    iterations: int


@dataclass
class IcupaOptions:
    kappa0: float = 0.1
    tol: float = 1e-6
    bisect_tol: float = 1e-10
    max_iter: int = 2000
    polish: bool = True


def _h_value(y, w, g, inter, psi, phi):
    z = w * g / (inter * phi * y) - psi * g / (inter * phi)
    return 1.0 - psi * y / w - fbar_of(z), z


def _solve_y_vector(w, g, inter, psi, phi, tol):
    """Roots of the per-user fraction equations for one (psi, phi) pair.

    h is strictly decreasing in y on (0, w/psi) running from 1 to -1, so a
    unique root exists; Newton with a bisection safeguard finds it to |h| <=
    tol.
    """
    hi = w / psi
    lo = np.full_like(hi, 1e-12) * hi
    hi = hi * (1.0 - 1e-12)
    h_lo, _ = _h_value(lo, w, g, inter, psi, phi)
    h_hi, _ = _h_value(hi, w, g, inter, psi, phi)
    if (h_lo <= 0).any() or (h_hi >= 0).any():
        raise NoRoot("fraction equation has one sign over the bracket")
    y = 0.5 * (lo + hi)
    for _ in range(200):
        h, z = _h_value(y, w, g, inter, psi, phi)
        if np.max(np.abs(h)) <= tol:
            break
        dz_dy = -w * g / (inter * phi * y**2)
        dh = -psi / w - _fbar_prime(z) * dz_dy
        lo = np.where(h > 0, y, lo)
        hi = np.where(h > 0, hi, y)
        step = np.where(np.abs(dh) > 1e-300, h / dh, 0.0)
        y_newton = y - step
        inside = (y_newton > lo) & (y_newton < hi)
        y = np.where(inside, y_newton, 0.5 * (lo + hi))
    return y


def solve_y_bisection(
    cell: CellProblem, j: int, psi: float, phi: float, tol: float = 1e-10
) -> float:
    """Root of the fraction equation for one user of a cell."""
    if psi <= 0 or phi <= 0:
        raise DomainError("multipliers must be positive")
    y = _solve_y_vector(
        np.asarray([cell.priorities[j]], dtype=float),
        np.asarray([cell.gains[j]], dtype=float),
        np.asarray([cell.interference[j]], dtype=float),
        psi,
        phi,
        tol,
    )
    return float(y[0])


def cell_utility(cell: CellProblem, y: np.ndarray, q: np.ndarray) -> float:
    """sum_j w_j ln(y_j ln(1 + q_j g_j / (I_j y_j))); natural-log scale."""
    z = q * cell.gains / (cell.interference * y)
    return float(np.sum(cell.priorities * np.log(y * np.log1p(z))))


def _kkt_residuals(cell, y, q, psi, phi):
    w, g, inter = cell.priorities, cell.gains, cell.interference
    z = q * g / (inter * y)
    fb = fbar_of(z)
    stat_y = np.abs((w / y) * (1.0 - fb) - psi)
    stat_q = np.abs(w * fb / q - phi)
    report = {
        "stationarity_y": float(stat_y.max()),
        "stationarity_q": float(stat_q.max()),
        "fraction_sum": float(abs(y.sum() - 1.0)),
        "budget_sum": float(abs(q.sum() - cell.budget)),
    }
    report["overall"] = max(report.values())
    return report


def icupa_solve_cell(cell: CellProblem, options: IcupaOptions | None = None) -> CellSolution:
    """Dual solve of one cell's fraction/power program.

    Multipliers start at the aggregate-priority scale, move with a
    diminishing step halved whenever the constraint residual jumps, and a
    two-variable Broyden polish finishes the constraint roots.
    """
    opts = options or IcupaOptions()
    w, g, inter = cell.priorities, cell.gains, cell.interference
    n = w.size
    p_star = cell.budget

    if n == 1:
        y = np.array([1.0])
        q = np.array([p_star])
        z = float(q[0] * g[0] / (inter[0] * y[0]))
        fb = float(fbar_of(z))
        psi = float(w[0] * (1.0 - fb))
        phi = float(w[0] * fb / p_star)
        return CellSolution(
            fractions=y,
            shares=q,
            powers=q / y,
            psi=psi,
            phi=phi,
            kkt_residuals=_kkt_residuals(cell, y, q, psi, phi),
            converged=True,
            iterations=0,
        )

    psi = float(w.sum())
    phi = float(w.sum() / p_star)

    def constraint_resid(log_psi, log_phi):
        if not (np.isfinite(log_psi) and np.isfinite(log_phi)):
            raise NoRoot("multiplier escaped to an invalid range")
        ps, ph = np.exp(np.clip(log_psi, -80, 80)), np.exp(np.clip(log_phi, -80, 80))
        y = _solve_y_vector(w, g, inter, ps, ph, opts.bisect_tol)
        q = (w - ps * y) / ph
        return np.array([y.sum() - 1.0, q.sum() / p_star - 1.0]), y, q

    scale = 1.0
    best_norm = np.inf
    it = 0
    lp, lf = np.log(psi), np.log(phi)
    resid, y, q = constraint_resid(lp, lf)
    for it in range(1, opts.max_iter + 1):
        norm = np.abs(resid).max()
        if norm <= opts.tol * 1e-2:
            break
        if norm > 2.0 * best_norm:
            scale = max(scale * 0.5, 1e-3)  # halve on constraint divergence
        best_norm = min(best_norm, norm)
        kappa = scale * opts.kappa0 / np.sqrt(it)
        try:
            lp_new = lp + np.clip(kappa * resid[0], -0.5, 0.5)
            lf_new = lf + np.clip(kappa * resid[1], -0.5, 0.5)
            resid_new, y_new, q_new = constraint_resid(lp_new, lf_new)
        except NoRoot:
            scale = max(scale * 0.5, 1e-6)
            continue
        lp, lf, resid, y, q = lp_new, lf_new, resid_new, y_new, q_new
        if opts.polish and it >= 8:
            break

    if opts.polish:
        x = np.array([lp, lf])
        fx = resid
        jac = None
        failures = 0
        for _ in range(80):
            if np.abs(fx).max() <= 1e-12 or failures >= 2:
                break
            if jac is None:
                jac = np.empty((2, 2))
                eps = 1e-7
                for k in range(2):
                    xp = x.copy()
                    xp[k] += eps
                    try:
                        fp, _, _ = constraint_resid(*xp)
                    except (NoRoot, DomainError):
                        fp = fx
                    jac[:, k] = (fp - fx) / eps
            try:
                step = np.linalg.solve(jac, -fx)
            except np.linalg.LinAlgError:
                break
            norm_step = float(np.abs(step).max())
            if norm_step > 2.0:  # trust region in log-multiplier space
                step = step * (2.0 / norm_step)
            damp = 1.0
            accepted = False
            for _ in range(40):
                try:
                    f_new, y_new, q_new = constraint_resid(*(x + damp * step))
                except (NoRoot, DomainError):
                    damp *= 0.5
                    continue
                if np.abs(f_new).max() <= np.abs(fx).max() * (1.0 - 1e-4 * damp) + 1e-15:
                    accepted = True
                    break
                damp *= 0.5
            if not accepted:
                failures += 1
                jac = None  # refresh the Jacobian and retry once
                continue
            failures = 0
            delta_x = damp * step
            delta_f = f_new - fx
            x = x + delta_x
            denom = float(delta_x @ delta_x)
            if denom > 0:
                jac = jac + np.outer(delta_f - jac @ delta_x, delta_x) / denom
            fx, y, q = f_new, y_new, q_new
        lp, lf = x

    psi, phi = float(np.exp(lp)), float(np.exp(lf))
    report = _kkt_residuals(cell, y, q, psi, phi)
    return CellSolution(
        fractions=y,
        shares=q,
        powers=q / y,
        psi=psi,
        phi=phi,
        kkt_residuals=report,
        converged=report["overall"] <= opts.tol,
        iterations=it,
    )


def build_cell_problems(
    scenario: Scenario, association: Association, state: NetworkState
) -> list[CellProblem]:
    active = np.flatnonzero(state.load > 0)
    if active.size == 0:
        raise EmptyActiveSet("no fully loaded BS to post-optimize")
    cells = []
    for i in active:
        users = np.flatnonzero(association.serving == i)
        others = active[active != i]
        inter = (
            state.power[others][:, None] * scenario.gains[np.ix_(others, users)]
        ).sum(axis=0) + scenario.noise
        cells.append(
            CellProblem(
                bs_index=int(i),
                users=users,
                priorities=scenario.priorities[users],
                gains=scenario.gains[i, users],
                interference=inter,
                budget=float(state.power[i]),
            )
        )
    return cells


def equal_power_cell_utility(cell: CellProblem) -> float:
    """Feasible reference point: even fractions, every user at the budget power."""
    n = cell.priorities.size
    y = np.full(n, 1.0 / n)
    q = y * cell.budget
    return cell_utility(cell, y, q)


def icupa_all(
    scenario: Scenario,
    association: Association,
    state: NetworkState,
    options: IcupaOptions | None = None,
) -> tuple[NetworkState, list[CellSolution]]:
    """Run the per-cell post-optimization and assemble the network state.

    Average BS powers, loads and hence inter-cell interference stay exactly
    as given; fractions and per-user powers are replaced by each cell's
    optimum.  The resulting utility can only improve, because the incoming
    split (proportional fractions at the cell's average power) is feasible
    for every cell problem.
    """
    try:
        before = network_utility(scenario, state, association).value
    except Exception:
        before = float("-inf")
    cells = build_cell_problems(scenario, association, state)
    new_state = state.copy()
    new_state.p_user = np.zeros_like(scenario.gains)
    solutions = []
    for cell in cells:
        try:
            sol = icupa_solve_cell(cell, options)
        except NoRoot as exc:
            raise NoRoot(f"BS {cell.bs_index}: {exc}") from exc
        solutions.append(sol)
        new_state.fractions[cell.bs_index, :] = 0.0
        new_state.fractions[cell.bs_index, cell.users] = sol.fractions
        new_state.p_user[cell.bs_index, cell.users] = sol.powers
    after = network_utility(scenario, new_state, association).value
    if after < before - 1e-9:
        raise AssertionError(
            f"per-cell optimization decreased utility: {before} -> {after}"
        )
    return new_state, solutions
