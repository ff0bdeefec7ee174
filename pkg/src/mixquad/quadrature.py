"""Optimization-based quadrature for correlated mixtures.

Nodes and nonnegative weights are found by minimizing ||Phi(nodes) w - e1||^2,
where row j of Phi holds basis function Psi_j at all nodes and e1 encodes
E[Psi_j] = delta_1j. Block coordinate descent alternates an exact nonnegative
least-squares solve in w with a damped Gauss-Newton move of the nodes; an
adaptive driver grows the node count until the solve converges, then prunes
low-weight nodes while convergence holds.
"""

import json
from dataclasses import dataclass, field, replace
from math import ceil

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage

from .basis import eval_basis_batch, eval_basis_jacobian_batch
from .distribution import sample

__all__ = [
    "SolverConfig",
    "QuadratureRule",
    "IncreasePhaseError",
    "assemble_phi",
    "residual",
    "solve_weights",
    "stacked_jacobian",
    "gauss_newton_step",
    "bcd_solve",
    "init_nodes",
    "adaptive_rule",
    "rule_to_json",
    "rule_from_json",
    "nodes_to_csv",
    "nodes_from_csv",
]

# consecutive failed Gauss-Newton moves before an early non-converged exit;
# by then lambda has grown by 10^10 and the step is numerically dead
STALL_LIMIT = 10


class IncreasePhaseError(RuntimeError):
    """Increase phase hit the node budget without converging."""

    def __init__(self, M, cap, last_residual):
        self.M = M
        self.cap = cap
        self.last_residual = last_residual
        super().__init__(
            f"increase phase reached M = {M} > {cap} without convergence "
            f"(last residual {last_residual:.3e}); "
            "ill-posed basis or tolerance too tight"
        )


@dataclass(frozen=True)
class SolverConfig:
    """Solver constants. Defaults are deliberate choices, not tuned per run.

    candidate_count = None means "10 * N_2p", resolved once the basis size is
    known (adaptive_rule does this); standalone init_nodes callers without a
    basis get 10 * M candidates.
    """

    residual_tol: float = 1e-8
    max_outer_iters: int = 200
    candidate_count: int = None
    seed: int = 0
    increase_factor: float = 1.5
    gn_damping: float = 1e-6
    line_search_shrink: float = 0.5
    max_gn_backtracks: int = 20

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be > 0")
        if self.increase_factor <= 1:
            raise ValueError("increase_factor must be > 1")


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes, nonnegative weights, and the achieved exactness residual.

    history holds the per-outer-iteration residuals of the producing solve
    (monotone non-increasing by the line-search contract). converged records
    whether residual_norm met the tolerance; seed is the solver seed for
    reproducibility of the whole construction.
    """

    nodes: np.ndarray
    weights: np.ndarray
    residual_norm: float
    basis_order: int
    history: tuple = ()
    converged: bool = False
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.atleast_2d(np.asarray(self.nodes, dtype=float)))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        if self.weights.shape != (self.nodes.shape[0],):
            raise ValueError("one weight per node required")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative, exactly")

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def dim(self):
        return self.nodes.shape[1]


def assemble_phi(basis, nodes):
    """Exactness matrix Phi with Phi[j, k] = Psi_j(node_k), shape (N, M)."""
    return eval_basis_batch(basis, nodes).T


def residual(phi, w):
    """Residual r = Phi w - e1 and its Euclidean norm."""
    r = phi @ w
    r[0] -= 1.0
    return r, float(np.linalg.norm(r))


def _unit_rhs(N):
    e1 = np.zeros(N)
    e1[0] = 1.0
    return e1


def solve_weights(phi, max_iter=None):
    """Nonnegative least squares min_{w >= 0} ||phi w - e1||^2, active-set style.

    Lawson-Hanson: grow a passive set by the most positive dual coordinate,
    solve the unconstrained problem on it, and step back to the feasible
    boundary whenever the passive solution leaves the positive orthant. The
    returned point satisfies the KKT conditions of the convex problem: for
    active coordinates (w_i = 0) the gradient of ||phi w - e1||^2 is
    >= -1e-10, for inactive ones its magnitude is <= 1e-10 * ||phi^T e1||_inf.

    Parameters
    ----------
    phi : ndarray, shape (N, M)
    max_iter : int, optional
        Inner-solve budget; default 3 * M.

    Returns
    -------
    (w, converged) : ndarray of shape (M,), bool
        On budget exhaustion, the best (most recent feasible) iterate with
        converged = False.
    """
    phi = np.asarray(phi, dtype=float)
    N, M = phi.shape
    b = _unit_rhs(N)
    if max_iter is None:
        max_iter = 3 * M
    w = np.zeros(M)
    passive = np.zeros(M, dtype=bool)
    dual_scale = max(1.0, float(np.abs(phi.T @ b).max()))
    # dual tolerance sized so the KKT gradient bounds hold with slack two
    tol = 1e-11 * dual_scale
    it = 0
    while True:
        dual = phi.T @ (b - phi @ w)
        free = np.where(~passive)[0]
        if free.size == 0:
            break
        j = free[np.argmax(dual[free])]
        if dual[j] <= tol:
            break
        if it >= max_iter:
            return w, False
        passive[j] = True
        while True:
            it += 1
            cols = np.where(passive)[0]
            z = np.linalg.lstsq(phi[:, cols], b, rcond=None)[0]
            if np.all(z > 0):
                w = np.zeros(M)
                w[cols] = z
                break
            # step from w toward z until the first coordinate hits zero
            wp = w[cols]
            bad = z <= 0
            denom = wp[bad] - z[bad]
            ratios = np.where(denom > 0, wp[bad] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = float(np.min(ratios))
            wp = wp + alpha * (z - wp)
            w = np.zeros(M)
            w[cols] = np.maximum(wp, 0.0)
            passive[:] = w > 0
            if it >= max_iter:
                return w, False
    # one refinement solve tightens the inactive-gradient residual; keep it
    # only if it stays strictly feasible
    cols = np.where(passive)[0]
    if cols.size:
        z = np.linalg.lstsq(phi[:, cols], b, rcond=None)[0]
        if np.all(z > 0):
            w = np.zeros(M)
            w[cols] = z
    return w, True


def stacked_jacobian(basis, nodes, w):
    """Derivative of the residual with respect to all node coordinates.

    Shape (N, M * dim): column k * dim + i holds w_k * dPsi/dxi_i evaluated
    at node k, i.e. the blocks G_k = w_k * dPsi/dxi side by side.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    M, d = nodes.shape
    jall = eval_basis_jacobian_batch(basis, nodes)  # (N, d, M)
    return (jall * w[None, None, :]).transpose(0, 2, 1).reshape(basis.size, M * d)


def gauss_newton_step(basis, nodes, w, r, lam, cfg):
    """One damped Gauss-Newton move of all nodes at fixed weights.

    The step solves min ||J d + r||^2 + lam ||d||^2 with J the stacked
    Jacobian, and is halved up to cfg.max_gn_backtracks times until the new
    residual does not exceed ||r||. A failed line search leaves the nodes
    unchanged and raises the damping tenfold; success resets it to
    cfg.gn_damping.

    Returns
    -------
    (nodes, lam, improved)
    """
    nodes = np.asarray(nodes, dtype=float)
    M, d = nodes.shape
    nrm = float(np.linalg.norm(r))
    J = stacked_jacobian(basis, nodes, w)
    A = np.vstack([J, np.sqrt(lam) * np.eye(M * d)])
    rhs = np.concatenate([-r, np.zeros(M * d)])
    step = np.linalg.lstsq(A, rhs, rcond=None)[0].reshape(M, d)
    s = 1.0
    for _ in range(cfg.max_gn_backtracks):
        cand = nodes + s * step
        r2, nrm2 = residual(assemble_phi(basis, cand), w)
        if nrm2 <= nrm:
            return cand, cfg.gn_damping, True
        s *= cfg.line_search_shrink
    return nodes, lam * 10.0, False


def bcd_solve(basis, init_nodes, cfg):
    """Block coordinate descent from a fixed set of starting nodes.

    Alternates the exact weight solve with a Gauss-Newton node move until the
    residual meets cfg.residual_tol, the outer budget runs out, or the node
    move has failed STALL_LIMIT times in a row (the damping is then so large
    that further outer iterations cannot make progress).

    Returns
    -------
    QuadratureRule with converged set accordingly.
    """
    nodes = np.atleast_2d(np.asarray(init_nodes, dtype=float))
    lam = cfg.gn_damping
    hist = []
    stall = 0
    converged = False
    w = np.zeros(nodes.shape[0])
    nrm = 1.0
    for _ in range(cfg.max_outer_iters):
        phi = assemble_phi(basis, nodes)
        w, _ = solve_weights(phi)
        r, nrm = residual(phi, w)
        hist.append(nrm)
        if nrm <= cfg.residual_tol:
            converged = True
            break
        new_nodes, lam, improved = gauss_newton_step(basis, nodes, w, r, lam, cfg)
        stall = 0 if improved else stall + 1
        nodes = new_nodes
        if stall >= STALL_LIMIT:
            break
    else:
        # outer budget exhausted after a node move: refresh weights so the
        # reported state is consistent with the final nodes
        phi = assemble_phi(basis, nodes)
        w, _ = solve_weights(phi)
        _, nrm = residual(phi, w)
        hist.append(nrm)
        converged = nrm <= cfg.residual_tol
    return QuadratureRule(
        nodes=nodes,
        weights=w,
        residual_norm=nrm,
        basis_order=basis.order,
        history=tuple(hist),
        converged=converged,
        seed=cfg.seed,
    )


def init_nodes(gm, M, cfg):
    """Initial nodes: cluster a seeded Monte Carlo cloud down to M centroids.

    Draws cfg.candidate_count i.i.d. samples (10 * M when unset), runs
    complete-linkage agglomerative clustering on Euclidean distances, and
    returns the component-wise mean of each cluster. Deterministic given
    cfg.seed.
    """
    if M < 1:
        raise ValueError(f"need M >= 1 nodes, got {M}")
    count = cfg.candidate_count if cfg.candidate_count is not None else 10 * M
    if M > count:
        raise ValueError(f"M = {M} exceeds candidate_count = {count}")
    X = sample(gm, count, cfg.seed)
    if M == count:
        return X.copy()
    Z = linkage(X, method="complete")
    labels = cut_tree(Z, n_clusters=M).ravel()
    return np.array([X[labels == c].mean(axis=0) for c in range(M)])


def adaptive_rule(basis, gm, cfg, on_accept=None):
    """Full node-count adaptation: init, increase until converged, then prune.

    Step 1 starts from M0 = ceil(N_2p / (d + 1)) clustered nodes, balancing
    unknown count M (d + 1) against the N_2p exactness equations. Step 2
    multiplies M by cfg.increase_factor (fresh clustering of the same seeded
    candidate cloud at the new M) until bcd_solve converges, aborting past
    10 * N_2p nodes. Step 3 repeatedly deletes the minimum-weight node (ties:
    lowest index) and re-solves warm-started from the remaining nodes,
    accepting while the tolerance holds; the last converged rule is returned.

    on_accept, when given, is called with every accepted (converged) rule in
    order, which exposes the decrease-phase trajectory for verification.

    Raises
    ------
    IncreasePhaseError
        If the increase phase exceeds 10 * N_2p nodes without converging.
    """
    N2p = basis.size
    d = gm.dim
    cfg = replace(
        cfg,
        candidate_count=cfg.candidate_count if cfg.candidate_count is not None else 10 * N2p,
    )
    cap = 10 * N2p
    M = ceil(N2p / (d + 1))
    while True:
        start = init_nodes(gm, M, cfg)
        rule = bcd_solve(basis, start, cfg)
        if rule.converged:
            break
        M = ceil(cfg.increase_factor * M)
        if M > cap:
            raise IncreasePhaseError(M, cap, rule.residual_norm)
    if on_accept is not None:
        on_accept(rule)
    while rule.n_nodes > 1:
        k = int(np.argmin(rule.weights))
        trial_nodes = np.delete(rule.nodes, k, axis=0)
        trial = bcd_solve(basis, trial_nodes, cfg)
        if not trial.converged:
            break
        rule = trial
        if on_accept is not None:
            on_accept(rule)
    return rule


def rule_to_json(rule):
    """Serialize to canonical JSON (fixed key order, round-trip decimals)."""
    obj = {
        "dim": int(rule.dim),
        "order_2p": int(rule.basis_order),
        "nodes": [[float(v) for v in row] for row in rule.nodes],
        "weights": [float(v) for v in rule.weights],
        "residual_norm": float(rule.residual_norm),
        "converged": bool(rule.converged),
        "seed": None if rule.seed is None else int(rule.seed),
    }
    return json.dumps(obj, indent=2) + "\n"


def rule_from_json(text):
    obj = json.loads(text)
    try:
        return QuadratureRule(
            nodes=np.array(obj["nodes"], dtype=float),
            weights=np.array(obj["weights"], dtype=float),
            residual_norm=float(obj["residual_norm"]),
            basis_order=int(obj["order_2p"]),
            converged=bool(obj["converged"]),
            seed=obj["seed"],
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed quadrature document: {exc}") from exc


def nodes_to_csv(nodes):
    """One node per row, full round-trip decimals, comma separated."""
    lines = [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(nodes)]
    return "\n".join(lines) + "\n"


def nodes_from_csv(text):
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(tok) for tok in line.split(",")])
    return np.array(rows, dtype=float)
