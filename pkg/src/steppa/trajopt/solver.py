"""Direct transcription of the transition problem and its penalty-method solver.

Decision vector, in order: CoM positions and velocities at knots 1..N, swing
foot positions at knots 1..N, swing-foot velocities and stance-force pyramid
coefficients at knots 0..N-1, and the in-plane offset of the realised landing
from the planned foothold. Knot 0 is fixed to the source mode at rest.

Friction holds by construction: each stance force is a non-negative
combination of pyramid edge rays, so only dynamics, the landing constraint
and collisions are penalised. Apart from collisions every term is affine in
the decision vector, which the solver exploits with exact quadratic steps.
"""

from __future__ import annotations

import enum
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize, nnls

from .problem import TransitionProblem, facet_directions, tangent_basis


class SolveStatus(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class Layout:
    N: int
    F: int

    def slices(self) -> dict:
        n3 = self.N * 3
        out, k = {}, 0
        for name, size in (("C", n3), ("V", n3), ("S", n3), ("W", n3), ("B", self.N * 3 * self.F), ("X", 2)):
            out[name] = slice(k, k + size)
            k += size
        return out

    @property
    def size(self) -> int:
        return 4 * self.N * 3 + self.N * 3 * self.F + 2


def layout(problem: TransitionProblem) -> Layout:
    return Layout(problem.N, problem.config.facets)


def unpack(problem: TransitionProblem, z: np.ndarray) -> dict:
    lay = layout(problem)
    sl = lay.slices()
    N, F = lay.N, lay.F
    return {
        "C": z[sl["C"]].reshape(N, 3),
        "V": z[sl["V"]].reshape(N, 3),
        "S": z[sl["S"]].reshape(N, 3),
        "W": z[sl["W"]].reshape(N, 3),
        "B": z[sl["B"]].reshape(N, 3, F),
        "X": z[sl["X"]],
    }


def pack(problem: TransitionProblem, parts: dict) -> np.ndarray:
    return np.concatenate([np.asarray(parts[k], dtype=float).ravel() for k in ("C", "V", "S", "W", "B", "X")])


def _forces(problem: TransitionProblem, B: np.ndarray) -> np.ndarray:
    # f[k, l] = scale * G_l @ B[k, l]
    return problem.force_scale * np.einsum("lif,klf->kli", problem.generators, B)


def _full(problem: TransitionProblem, P: dict):
    c = np.vstack([problem.com0, P["C"]])
    v = np.vstack([np.zeros(3), P["V"]])
    s = np.vstack([problem.liftoff, P["S"]])
    return c, v, s


def _defects(problem: TransitionProblem, P: dict):
    cfg = problem.config
    c, v, s = _full(problem, P)
    f = _forces(problem, P["B"])
    fsum = f.sum(axis=1)
    g = np.array([0.0, 0.0, -cfg.gravity])
    dt = cfg.dt
    dv = v[1:] - v[:-1] - dt * (fsum / cfg.mass + g)
    dc = c[1:] - c[:-1] - 0.5 * dt * (v[:-1] + v[1:])
    ds = s[1:] - s[:-1] - dt * P["W"]
    chi = problem.landing + problem.landing_tangents @ P["X"]
    dT = s[-1] - chi
    return c, v, s, f, dv, dc, ds, dT


def _collision(problem: TransitionProblem, S: np.ndarray):
    """Clearance violation max(0, clearance - sdf) per swing knot and its gradient."""
    viol = np.zeros(len(S))
    grad = np.zeros_like(S)
    for obs in problem.obstacles:
        d, gd = obs.sdf(S)
        v = np.maximum(0.0, problem.config.clearance - d)
        # the worst obstacle per knot drives the penalty
        take = v > viol
        viol = np.where(take, v, viol)
        grad = np.where(take[:, None], -gd, grad)
    return viol, grad


def objective_terms(problem: TransitionProblem, z: np.ndarray) -> dict:
    """Unpenalised objective components."""
    cfg = problem.config
    P = unpack(problem, z)
    c, v, s = _full(problem, P)
    f = _forces(problem, P["B"])
    Qc, Qv, Qs = cfg.Q
    Fc, Fv, Fs = cfg.Qf
    ec, ev, es = c - problem.com_des, v, s - problem.foot_des
    running = Qc * (ec[1:-1] ** 2).sum() + Qv * (ev[1:-1] ** 2).sum() + Qs * (es[1:-1] ** 2).sum()
    terminal = Fc * (ec[-1] ** 2).sum() + Fv * (ev[-1] ** 2).sum() + Fs * (es[-1] ** 2).sum()
    Rf, Rw = cfg.R
    inputs = Rf * (f**2).sum() + Rw * (P["W"] ** 2).sum()
    return {"running": float(running), "terminal": float(terminal), "input": float(inputs)}


def objective_and_gradient(problem: TransitionProblem, z: np.ndarray, rho: float = 0.0) -> tuple[float, np.ndarray]:
    """Penalised objective and its analytic gradient; ``rho = 0`` disables penalties."""
    cfg = problem.config
    P = unpack(problem, z)
    c, v, s, f, dv, dc, ds, dT = _defects(problem, P)
    Qc, Qv, Qs = cfg.Q
    Fc, Fv, Fs = cfg.Qf
    Rf, Rw = cfg.R
    dt = cfg.dt

    wc = np.full(len(c), Qc)
    wv = np.full(len(c), Qv)
    ws = np.full(len(c), Qs)
    wc[-1], wv[-1], ws[-1] = Fc, Fv, Fs
    wc[0] = wv[0] = ws[0] = 0.0
    ec, ev, es = c - problem.com_des, v, s - problem.foot_des
    val = (wc[:, None] * ec**2).sum() + (wv[:, None] * ev**2).sum() + (ws[:, None] * es**2).sum()
    val += Rf * (f**2).sum() + Rw * (P["W"] ** 2).sum()
    gc = 2 * wc[:, None] * ec
    gv = 2 * wv[:, None] * ev
    gs = 2 * ws[:, None] * es
    gW = 2 * Rw * P["W"]
    gf = 2 * Rf * f
    gX = np.zeros(2)

    if rho > 0:
        val += 0.5 * rho * ((dv**2).sum() + (dc**2).sum() + (ds**2).sum() + (dT**2).sum())
        rdv, rdc, rds = rho * dv, rho * dc, rho * ds
        gv[1:] += rdv
        gv[:-1] -= rdv
        gc[1:] += rdc
        gc[:-1] -= rdc
        gv[1:] -= 0.5 * dt * rdc
        gv[:-1] -= 0.5 * dt * rdc
        gs[1:] += rds
        gs[:-1] -= rds
        gW -= dt * rds
        gf += (-dt / cfg.mass) * rdv[:, None, :]
        gs[-1] += rho * dT
        gX -= rho * (problem.landing_tangents.T @ dT)
        if problem.obstacles:
            viol, gcol = _collision(problem, s[1:])
            val += 0.5 * rho * (viol**2).sum()
            gs[1:] += rho * viol[:, None] * gcol

    gB = problem.force_scale * np.einsum("lif,kli->klf", problem.generators, gf)
    grad = np.concatenate([gc[1:].ravel(), gv[1:].ravel(), gs[1:].ravel(), gW.ravel(), gB.ravel(), gX])
    return float(val), grad


def residuals(problem: TransitionProblem, z: np.ndarray) -> dict:
    """Max-norm residual of each constraint family."""
    cfg = problem.config
    P = unpack(problem, z)
    c, v, s, f, dv, dc, ds, dT = _defects(problem, P)
    dyn = np.sqrt((dv**2).sum(axis=1) + (dc**2).sum(axis=1) + (ds**2).sum(axis=1))
    viol, _ = _collision(problem, s[1:]) if problem.obstacles else (np.zeros(1), None)
    # friction: normal component and facet inequalities in each contact frame
    fr = 0.0
    dirs = facet_directions(cfg.facets)
    for l, n in enumerate(problem.stance_normals):
        t1, t2 = tangent_basis(n)
        fn = f[:, l] @ n
        ft = np.stack([f[:, l] @ t1, f[:, l] @ t2], axis=1)
        fr = max(fr, float(np.max(-fn, initial=0.0)), float(np.max(ft @ dirs.T - cfg.mu * fn[:, None], initial=0.0)))
    fr /= problem.force_scale
    return {
        "dynamics": float(dyn.max()),
        "terminal": float(np.linalg.norm(dT)),
        "collision": float(viol.max()),
        "friction": max(0.0, fr),
        "landing_offset": float(np.abs(P["X"]).max()),
    }


def initial_guess(problem: TransitionProblem) -> np.ndarray:
    """Linear CoM interpolation, the nominal swing arc, gravity split evenly over the stance."""
    cfg = problem.config
    N, F = problem.N, cfg.facets
    C = problem.com_des[1:]
    V = np.zeros((N, 3))
    S = problem.foot_des[1:]
    W = np.diff(problem.foot_des, axis=0) / cfg.dt
    B = np.zeros((N, 3, F))
    target = np.array([0.0, 0.0, 1.0])  # one third of the weight, in force_scale units
    for l in range(3):
        beta, _ = nnls(problem.generators[l], target)
        B[:, l] = beta
    return pack(problem, {"C": C, "V": V, "S": S, "W": W, "B": B, "X": np.zeros(2)})


def bounds(problem: TransitionProblem) -> list:
    lay = layout(problem)
    sl = lay.slices()
    lo = np.full(lay.size, -np.inf)
    hi = np.full(lay.size, np.inf)
    lo[sl["B"]] = 0.0
    lo[sl["X"]] = -problem.config.landing_slack
    hi[sl["X"]] = problem.config.landing_slack
    return list(zip(lo, hi))


@dataclass
class Solution:
    com: np.ndarray  # (N+1, 3)
    com_vel: np.ndarray
    feet: np.ndarray  # (N+1, 4, 3)
    forces: np.ndarray  # (N, 4, 3)
    swing_vel: np.ndarray  # (N, 3)
    chi: np.ndarray
    objective: float
    status: SolveStatus
    residuals: dict
    iterations: int = 0
    merit_history: list = field(default_factory=list)
    wall_time: float = 0.0
    dt: float = 0.05

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED

    @property
    def feasible(self) -> bool:
        return self.status is not SolveStatus.INFEASIBLE

    def to_dict(self, include_time: bool = False) -> dict:
        knots = []
        for k in range(len(self.com)):
            knots.append(
                {
                    "t": k * self.dt,
                    "com": self.com[k].tolist(),
                    "com_vel": self.com_vel[k].tolist(),
                    "feet": self.feet[k].tolist(),
                    "forces": self.forces[k].tolist() if k < len(self.forces) else None,
                }
            )
        d = {
            "status": self.status.value,
            "objective": self.objective,
            "residuals": self.residuals,
            "iterations": self.iterations,
            "chi": self.chi.tolist(),
            "knots": knots,
        }
        if include_time:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _assemble(problem: TransitionProblem, z: np.ndarray, status, iterations, history, wall) -> Solution:
    P = unpack(problem, z)
    c, v, s = _full(problem, P)
    f3 = _forces(problem, P["B"])
    N = problem.N
    feet = np.repeat(problem.source.positions[None], N + 1, axis=0)
    feet[:, problem.swing_foot] = s
    forces = np.zeros((N, 4, 3))
    for l, foot in enumerate(problem.stance_feet):
        forces[:, foot] = f3[:, l]
    terms = objective_terms(problem, z)
    return Solution(
        com=c,
        com_vel=v,
        feet=feet,
        forces=forces,
        swing_vel=P["W"].copy(),
        chi=problem.landing + problem.landing_tangents @ P["X"],
        objective=terms["running"] + terms["terminal"] + terms["input"],
        status=status,
        residuals=residuals(problem, z),
        iterations=iterations,
        merit_history=history,
        wall_time=wall,
        dt=problem.config.dt,
    )


def within_tolerance(problem: TransitionProblem, res: dict) -> bool:
    cfg = problem.config
    return (
        res["dynamics"] <= cfg.tol_dynamics
        and res["terminal"] <= cfg.tol_terminal
        and res["collision"] <= cfg.tol_collision
        and res["friction"] <= cfg.tol_friction
    )


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Affine maps of the decision vector: weighted cost rows and defect rows.

    objective(z) = sum(w * (A z - b)**2) and defects(z) = D z - d, so the
    penalised objective without collisions is an exact quadratic.
    """

    A: np.ndarray
    b: np.ndarray
    w: np.ndarray
    D: np.ndarray
    d: np.ndarray

    @property
    def gram_cost(self) -> np.ndarray:
        return (self.A * self.w[:, None]).T @ self.A

    @property
    def gram_defect(self) -> np.ndarray:
        return self.D.T @ self.D


def linear_model(problem: TransitionProblem) -> LinearModel:
    cfg = problem.config
    N, F = problem.N, cfg.facets
    n = problem.n_vars
    sl = layout(problem).slices()
    ix = np.arange(n)
    Ci = ix[sl["C"]].reshape(N, 3)
    Vi = ix[sl["V"]].reshape(N, 3)
    Si = ix[sl["S"]].reshape(N, 3)
    Wi = ix[sl["W"]].reshape(N, 3)
    Bi = ix[sl["B"]].reshape(N, 3, F)
    Xi = ix[sl["X"]]
    G = problem.generators * problem.force_scale  # (3 feet, 3 axes, F)
    dt, m = cfg.dt, cfg.mass

    rows_A, rows_b, rows_w = [], [], []

    def cost_row(cols, vals, target, weight):
        r = np.zeros(n)
        r[cols] = vals
        rows_A.append(r)
        rows_b.append(target)
        rows_w.append(weight)

    for k in range(1, N + 1):
        wq = cfg.Qf if k == N else cfg.Q
        for a in range(3):
            cost_row(Ci[k - 1, a], 1.0, problem.com_des[k, a], wq[0])
            cost_row(Vi[k - 1, a], 1.0, 0.0, wq[1])
            cost_row(Si[k - 1, a], 1.0, problem.foot_des[k, a], wq[2])
    for k in range(N):
        for l in range(3):
            for a in range(3):
                cost_row(Bi[k, l], G[l, a], 0.0, cfg.R[0])
        for a in range(3):
            cost_row(Wi[k, a], 1.0, 0.0, cfg.R[1])

    n_def = 9 * N + 3
    D = np.zeros((n_def, n))
    d = np.zeros(n_def)
    gvec = np.array([0.0, 0.0, -cfg.gravity])
    r = 0
    for k in range(N):
        for a in range(3):
            # velocity: v[k+1] - v[k] - dt/m * sum f - dt g
            D[r, Vi[k, a]] += 1.0
            if k > 0:
                D[r, Vi[k - 1, a]] -= 1.0
            for l in range(3):
                D[r, Bi[k, l]] -= dt / m * G[l, a]
            d[r] = dt * gvec[a]
            # position: c[k+1] - c[k] - dt/2 (v[k] + v[k+1])
            D[r + 1, Ci[k, a]] += 1.0
            D[r + 1, Vi[k, a]] -= dt / 2
            if k > 0:
                D[r + 1, Ci[k - 1, a]] -= 1.0
                D[r + 1, Vi[k - 1, a]] -= dt / 2
            else:
                d[r + 1] = problem.com0[a]
            # swing foot: s[k+1] - s[k] - dt w[k]
            D[r + 2, Si[k, a]] += 1.0
            D[r + 2, Wi[k, a]] -= dt
            if k > 0:
                D[r + 2, Si[k - 1, a]] -= 1.0
            else:
                d[r + 2] = problem.liftoff[a]
            r += 3
    for a in range(3):
        D[r, Si[N - 1, a]] = 1.0
        D[r, Xi] = -problem.landing_tangents[a]
        d[r] = problem.landing[a]
        r += 1
    return LinearModel(np.array(rows_A), np.array(rows_b), np.array(rows_w), D, d)


def _collision_rows(problem: TransitionProblem, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Violations of the violated swing knots and their Jacobian rows."""
    if not problem.obstacles:
        return np.zeros(0), np.zeros((0, problem.n_vars))
    P = unpack(problem, z)
    viol, grad = _collision(problem, P["S"])
    active = np.flatnonzero(viol > 0)
    J = np.zeros((active.size, problem.n_vars))
    start = layout(problem).slices()["S"].start
    for row, k in enumerate(active):
        J[row, start + 3 * k : start + 3 * k + 3] = grad[k]
    return viol[active], J


def box_qp(H: np.ndarray, q: np.ndarray, lo: np.ndarray, hi: np.ndarray, z0: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """min 1/2 z'Hz + q'z subject to lo <= z <= hi by primal-dual active sets.

    Falls back to L-BFGS-B from the last iterate if the active set cycles.
    """
    lower = z0 <= lo
    upper = z0 >= hi
    z = np.clip(z0, lo, hi)
    for _ in range(max_iter):
        free = ~(lower | upper)
        z = np.where(lower, lo, np.where(upper, hi, 0.0))
        fixed = ~free
        rhs = -q[free] - H[np.ix_(free, fixed)] @ z[fixed]
        z[free] = cho_solve(cho_factor(H[np.ix_(free, free)]), rhs)
        g = H @ z + q
        new_lower = np.where(lower, g > 0, z < lo)
        new_upper = np.where(upper, g < 0, z > hi)
        if np.array_equal(new_lower, lower) and np.array_equal(new_upper, upper):
            return z
        lower, upper = new_lower, new_upper
    res = minimize(
        lambda x: (0.5 * x @ H @ x + q @ x, H @ x + q),
        np.clip(z, lo, hi),
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(lo, hi)),
        options={"maxiter": 2000, "ftol": 1e-16, "gtol": 1e-12},
    )
    return res.x


# curvature added to the pyramid weights only; their null space is otherwise flat
_BETA_DAMPING = 1e-6


def solve(problem: TransitionProblem, x0: np.ndarray | None = None) -> Solution:
    """Penalty continuation with Gauss-Newton steps on the penalised objective.

    Each step minimises the exact quadratic model (collisions linearised at the
    current iterate) under the bounds, then backtracks until the true
    penalised objective does not increase.
    """
    t0 = time.perf_counter()
    cfg = problem.config
    z = initial_guess(problem) if x0 is None else np.asarray(x0, dtype=float).copy()
    lm = linear_model(problem)
    Hc = 2.0 * lm.gram_cost
    qc = -2.0 * (lm.A * lm.w[:, None]).T @ lm.b
    Hd = lm.gram_defect
    qd = -lm.D.T @ lm.d
    damp = np.zeros(problem.n_vars)
    damp[layout(problem).slices()["B"]] = _BETA_DAMPING
    lo, hi = (np.array(v) for v in zip(*bounds(problem)))
    z = np.clip(z, lo, hi)

    rho = cfg.rho0
    used = 0
    history: list[list[float]] = []
    capped = False
    for _ in range(cfg.rounds):
        merit = objective_and_gradient(problem, z, rho)[0]
        round_hist = [merit]
        while True:
            if used >= cfg.max_iter:
                capped = True
                break
            viol, J = _collision_rows(problem, z)
            H = Hc + rho * (Hd + J.T @ J)
            H[np.diag_indices_from(H)] += damp
            q = qc + rho * (qd + J.T @ (viol - J @ z))
            z_new = box_qp(H, q, lo, hi, z)
            used += 1
            step = z_new - z
            alpha, accepted = 1.0, False
            for _ls in range(30):
                trial = z + alpha * step
                val = objective_and_gradient(problem, trial, rho)[0]
                if val <= merit:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            decrease = merit - val
            z, merit = trial, val
            round_hist.append(merit)
            if np.abs(alpha * step).max() < 1e-10 or decrease <= 1e-12 * max(1.0, merit):
                break
            if J.shape[0] == 0 and alpha == 1.0 and not _collision_rows(problem, z)[0].size:
                # the quadratic model is exact here, so this step already hit the round optimum
                break
        history.append(round_hist)
        if capped:
            break
        rho *= cfg.rho_factor
    resid = residuals(problem, z)
    if not within_tolerance(problem, resid):
        status = SolveStatus.INFEASIBLE
    elif capped:
        status = SolveStatus.MAX_ITER
    else:
        status = SolveStatus.CONVERGED
    return _assemble(problem, z, status, used, history, time.perf_counter() - t0)
