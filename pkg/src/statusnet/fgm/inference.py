"""Marginal inference: loopy belief propagation and exhaustive enumeration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import entr, logsumexp

from .. import kernels
from ..errors import NumericalError
from ..graph import StatusLabels
from .model import CLAMP, FactorGraph, Theta, clamp_unary, triangle_logpot, unary_logpot

EXACT_MAX_NODES = 20
# enumeration work bound (configurations x factors) for automatic exact inference
EXACT_MAX_WORK = 2**22


@dataclass(frozen=True)
class LBPConfig:
    max_iters: int = 100
    damping: float = 0.5
    tol: float = 1e-6

    def validate(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError("damping must lie in [0, 1)")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class Marginals:
    node_beliefs: np.ndarray  # (n, 2), columns M, S
    triangle_beliefs: np.ndarray  # (C, 8)
    converged: bool
    iterations: int
    max_residual: float
    log_partition: float  # exact, or the Bethe approximation
    exact: bool
    messages: np.ndarray | None = None  # (C, 3, 2) log messages, for warm starts

    @property
    def p_manager(self) -> np.ndarray:
        return self.node_beliefs[:, 0]


def _softmax(a, axis=-1):
    return np.exp(a - logsumexp(a, axis=axis, keepdims=True))


def _energy(fg, unary, tri_pot, node_b, tri_b):
    u = float(np.sum(node_b * unary))
    if fg.n_triangles:
        u += float(np.sum(tri_b @ tri_pot))
    return u


def lbp_marginals(
    fg: FactorGraph,
    theta: Theta,
    clamped: StatusLabels | None = None,
    max_iters: int = 100,
    damping: float = 0.5,
    tol: float = 1e-6,
    init_messages: np.ndarray | None = None,
) -> Marginals:
    """Sum-product LBP in log space with a synchronous, damped schedule.

    Clamped variables carry delta beliefs. ``log_partition`` is the Bethe
    free-energy estimate of log Z (restricted to the clamped labels).
    """
    LBPConfig(max_iters, damping, tol).validate()
    theta.check(fg)
    unary = unary_logpot(fg, theta)
    eff = np.ascontiguousarray(clamp_unary(unary, clamped))
    tri_pot = triangle_logpot(theta)
    tri = np.ascontiguousarray(fg.triangles, dtype=np.int64)
    n_tri = len(tri)
    if init_messages is not None and init_messages.shape == (n_tri, 3, 2):
        msgs = np.array(init_messages, dtype=np.float64, order="C")
    else:
        msgs = np.full((n_tri, 3, 2), -np.log(2.0))
    iters, residual, bad = kernels.lbp_iterate(tri, eff, tri_pot, msgs, max_iters, damping, tol)
    if bad >= 0:
        u, v, w = tri[bad]
        raise NumericalError(f"non-finite message from triangle factor {bad} ({u}, {v}, {w})")

    total = eff.copy()
    if n_tri:
        flat = msgs.reshape(-1, 2)
        idx = tri.ravel()
        total[:, 0] += np.bincount(idx, weights=flat[:, 0], minlength=fg.n)
        total[:, 1] += np.bincount(idx, weights=flat[:, 1], minlength=fg.n)
    node_b = _softmax(total)
    if n_tri:
        mu = total[tri] - msgs
        joint = (
            tri_pot.reshape(1, 2, 2, 2)
            + mu[:, 0, :, None, None]
            + mu[:, 1, None, :, None]
            + mu[:, 2, None, None, :]
        ).reshape(n_tri, 8)
        tri_b = _softmax(joint)
    else:
        tri_b = np.zeros((0, 8))
    if not (np.isfinite(node_b).all() and np.isfinite(tri_b).all()):
        raise NumericalError("non-finite beliefs")

    # Bethe estimate: energy + sum of factor entropies - (d_i - 1) node entropies
    unary_safe = np.where(eff <= CLAMP / 2, 0.0, unary)
    energy = _energy(fg, unary_safe, tri_pot, node_b, tri_b)
    h_node = entr(node_b).sum(axis=1)
    h_tri = float(entr(tri_b).sum())
    d = fg.triangle_degree()
    entropy = h_tri - float(np.sum((d - 1) * h_node))
    return Marginals(
        node_beliefs=node_b,
        triangle_beliefs=tri_b,
        converged=bool(residual < tol),
        iterations=int(iters),
        max_residual=float(residual),
        log_partition=energy + entropy,
        exact=False,
        messages=msgs,
    )


def _free_nodes(fg, clamped):
    if clamped is None:
        return np.arange(fg.n)
    return np.flatnonzero(clamped.values < 0)


def enumeration_work(fg: FactorGraph, clamped: StatusLabels | None = None) -> int:
    return 2 ** len(_free_nodes(fg, clamped)) * (fg.n_triangles + fg.n)


def _config_blocks(fg, clamped, block=2**14):
    """Yield ``(Y, start)`` with Y an int8 ``(B, n)`` block of full assignments."""
    free = _free_nodes(fg, clamped)
    base = np.zeros(fg.n, dtype=np.int8)
    if clamped is not None:
        base = np.where(clamped.values < 0, 0, clamped.values).astype(np.int8)
    total = 2 ** len(free)
    shifts = np.arange(len(free), dtype=np.int64)
    for start in range(0, total, block):
        codes = np.arange(start, min(total, start + block), dtype=np.int64)
        y = np.tile(base, (len(codes), 1))
        y[:, free] = ((codes[:, None] >> shifts) & 1).astype(np.int8)
        yield y


def _scores(fg, unary, tri_pot, y):
    # unary: column 0 contributes when y == 0 (Manager)
    s = ((y == 0) * unary[:, 0] + (y == 1) * unary[:, 1]).sum(axis=1)
    tri = fg.triangles
    if len(tri):
        cfg = (y[:, tri[:, 0]].astype(np.int64) << 2) | (y[:, tri[:, 1]] << 1) | y[:, tri[:, 2]]
        s = s + tri_pot[cfg].sum(axis=1)
    return s


def exact_log_partition(fg: FactorGraph, theta: Theta, clamped: StatusLabels | None = None) -> float:
    """log Z by enumerating every assignment of the unclamped variables."""
    theta.check(fg)
    if len(_free_nodes(fg, clamped)) > EXACT_MAX_NODES:
        raise ValueError(f"exact enumeration limited to {EXACT_MAX_NODES} free variables")
    unary = unary_logpot(fg, theta)
    tri_pot = triangle_logpot(theta)
    parts = [logsumexp(_scores(fg, unary, tri_pot, y)) for y in _config_blocks(fg, clamped)]
    return float(logsumexp(parts))


def exact_marginals(fg: FactorGraph, theta: Theta, clamped: StatusLabels | None = None) -> Marginals:
    """Node and triangle marginals by brute-force enumeration."""
    theta.check(fg)
    if len(_free_nodes(fg, clamped)) > EXACT_MAX_NODES:
        raise ValueError(f"exact enumeration limited to {EXACT_MAX_NODES} free variables")
    unary = unary_logpot(fg, theta)
    tri_pot = triangle_logpot(theta)
    log_z = exact_log_partition(fg, theta, clamped)
    node = np.zeros((fg.n, 2))
    tri_b = np.zeros((fg.n_triangles, 8))
    tri = fg.triangles
    for y in _config_blocks(fg, clamped):
        p = np.exp(_scores(fg, unary, tri_pot, y) - log_z)
        node[:, 0] += p @ (y == 0)
        node[:, 1] += p @ (y == 1)
        if len(tri):
            cfg = (y[:, tri[:, 0]].astype(np.int64) << 2) | (y[:, tri[:, 1]] << 1) | y[:, tri[:, 2]]
            for k in range(8):
                tri_b[:, k] += p @ (cfg == k)
    return Marginals(node, tri_b, True, 0, 0.0, log_z, True, None)


def use_exact(fg: FactorGraph, clamped: StatusLabels | None, inference: str) -> bool:
    if inference == "exact":
        return True
    if inference == "lbp":
        return False
    if inference != "auto":
        raise ValueError(f"unknown inference mode {inference!r}")
    free = len(_free_nodes(fg, clamped))
    return free <= EXACT_MAX_NODES and enumeration_work(fg, clamped) <= EXACT_MAX_WORK


def marginals(
    fg: FactorGraph,
    theta: Theta,
    clamped: StatusLabels | None = None,
    inference: str = "auto",
    lbp: LBPConfig = LBPConfig(),
    init_messages=None,
) -> Marginals:
    if use_exact(fg, clamped, inference):
        return exact_marginals(fg, theta, clamped)
    return lbp_marginals(fg, theta, clamped, lbp.max_iters, lbp.damping, lbp.tol, init_messages)
