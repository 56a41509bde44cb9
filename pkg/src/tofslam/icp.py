"""Iterative closest point alignment of 2D scans.

Plain nearest-neighbor correspondences (exhaustive, ties to the lowest
index) and the closed-form least-squares rigid transform, repeated for a
fixed number of iterations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Rigid2

DEFAULT_ITERATIONS = 25

# Per-iteration transform magnitude below which further iterations are a no-op.
_CONVERGENCE_EPS = 1e-12


def _points(scan) -> np.ndarray:
    pts = getattr(scan, "points", scan)
    return np.asarray(pts, dtype=float).reshape(-1, 2)


@dataclass
class IcpResult:
    """Alignment mapping the source scan onto the destination scan.

    e_icp is the mean correspondence distance after the final iteration;
    iterations_run always reports the fixed iteration budget, with
    converged_early flagging runs whose later iterations were no-ops.
    """

    transform: Rigid2
    e_icp: float
    iterations_run: int
    converged_early: bool = False
    e_icp_history: list[float] = field(default_factory=list)


def find_correspondences(src, dst, n_workers: int = 1) -> np.ndarray:
    """Index of the closest destination point for every source point.

    Exhaustive search; equal distances resolve to the lowest destination
    index.  Partitioning over workers cannot change the result, so
    n_workers only controls the chunking of the distance computation.
    """
    p = _points(src)
    q = _points(dst)
    if len(p) == 0 or len(q) == 0:
        raise ValueError("cannot match empty scans")
    n_workers = max(1, int(n_workers))
    chunk = (len(p) + n_workers - 1) // n_workers
    out = np.empty(len(p), dtype=np.int64)
    for start in range(0, len(p), chunk):
        block = p[start:start + chunk]
        d2 = ((block[:, None, :] - q[None, :, :]) ** 2).sum(axis=2)
        out[start:start + chunk] = np.argmin(d2, axis=1)
    return out


def optimal_transform(src_pts, dst_pts) -> Rigid2:
    """Least-squares rigid transform minimizing sum ||q - (R p + t)||^2.

    Closed form: remove centroids, then atan2 over the cross/dot sums of
    the centered pairs.  Raises when the rotation is unobservable (fewer
    than two pairs or all source points coincident).
    """
    p = _points(src_pts)
    q = _points(dst_pts)
    if len(p) != len(q):
        raise ValueError("point sets must pair up")
    if len(p) < 2:
        raise ValueError("need at least two pairs for a rigid transform")
    p_mean = p.mean(axis=0)
    q_mean = q.mean(axis=0)
    pc = p - p_mean
    qc = q - q_mean
    if not (pc ** 2).sum() > 0:
        raise ValueError("rotation unobservable: all source points coincide")
    dot = float((pc * qc).sum())
    cross = float((pc[:, 0] * qc[:, 1] - pc[:, 1] * qc[:, 0]).sum())
    theta = math.atan2(cross, dot)
    c, s = math.cos(theta), math.sin(theta)
    t = q_mean - np.array([c * p_mean[0] - s * p_mean[1], s * p_mean[0] + c * p_mean[1]])
    return Rigid2(theta, (float(t[0]), float(t[1])))


def icp_align(src, dst, n_iter: int = DEFAULT_ITERATIONS, n_workers: int = 1) -> IcpResult:
    """Align src onto dst with a fixed iteration budget.

    Each iteration pairs every transformed source point with its nearest
    destination point, solves the closed-form transform, and applies it;
    the returned transform is the composition of all per-iteration
    transforms.  Iterations after the per-step transform magnitude drops
    below 1e-12 are skipped but still counted.
    """
    p = _points(src)
    q = _points(dst)
    if len(p) < 2 or len(q) < 2:
        raise ValueError("ICP needs at least two points per scan")
    total = Rigid2.identity()
    moved = p
    history = []
    converged_early = False
    for _ in range(n_iter):
        corr = find_correspondences(moved, q, n_workers=n_workers)
        matched = q[corr]
        history.append(float(np.linalg.norm(moved - matched, axis=1).mean()))
        step = optimal_transform(moved, matched)
        if step.magnitude < _CONVERGENCE_EPS:
            converged_early = True
            break
        total = step.compose(total)
        moved = step.apply(moved)
    corr = find_correspondences(moved, q, n_workers=n_workers)
    e_icp = float(np.linalg.norm(moved - q[corr], axis=1).mean())
    return IcpResult(total, e_icp, n_iter, converged_early, history)
