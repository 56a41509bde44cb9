"""Synthetic pose graphs for benchmarks and solver studies.

Chain graphs with evenly spaced loop closures reproduce the sparsity
study; drifted square-loop graphs exercise the optimizer and the
hierarchical pipeline at any size without running a mission.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import Pose2, angle_norm
from .graph import LOOP_CLOSURE_WEIGHT, PoseGraph, odometry_edge


def chain_graph(n_poses: int, n_lc: int = 0, step: float = 0.1, seed: int = 0) -> PoseGraph:
    """Chain of poses with n_lc loop closures from the tail back to pose 0.

    The k-th of n closures connects pose N-1-2(n-k) to pose 0, i.e. they
    sit at the end of the chain two poses apart, like repeated revisits
    of the start.  Measurements are consistent with the poses, so the
    graph is already optimal; it exists for structural studies.
    """
    if n_poses < 2:
        raise ValueError("need at least two poses")
    rng = np.random.default_rng(seed)
    g = PoseGraph()
    pose = Pose2(0.0, 0.0, 0.0)
    g.add_pose(pose)
    for k in range(1, n_poses):
        heading = angle_norm(pose.psi + rng.normal(0.0, 0.02))
        pose = Pose2(pose.x + step * math.cos(heading),
                     pose.y + step * math.sin(heading), heading)
        g.add_pose(pose, timestamp=k)
    for k in range(n_lc):
        src = n_poses - 1 - 2 * (n_lc - 1 - k)
        if src <= 0:
            raise ValueError("chain too short for the requested loop closures")
        z = odometry_edge(g.entries[src].pose, g.entries[0].pose)
        g.add_loop_closure(src, 0, z, LOOP_CLOSURE_WEIGHT)
    return g


def square_loop_graph(n_poses: int, laps: int = 2, side: float = 6.075,
                      drift_scale: float = 1.02, yaw_noise: float = 0.002,
                      corner_ticks: int = 20, seed: int = 42,
                      lc_per_lap: int = 4) -> tuple[PoseGraph, list[Pose2]]:
    """Drifted square-loop graph with loop closures at revisited corners.

    Returns the graph (drifted estimates as poses, ground-truth-derived
    loop closures from the second lap on) and the ground-truth poses.
    Corners are turned in place over corner_ticks poses so headings vary
    smoothly, as they would in flight.
    """
    rng = np.random.default_rng(seed)
    n_corners = 4 * laps
    turn_budget = n_corners * corner_ticks
    if n_poses <= turn_budget + 8 * laps:
        raise ValueError("not enough poses for the requested lap count")
    straight_each = (n_poses - turn_budget) // (4 * laps)

    truth: list[Pose2] = [Pose2(0.0, 0.0, 0.0)]
    corner_ids: list[int] = []
    x, y, psi = 0.0, 0.0, 0.0
    step = side / straight_each
    for _lap in range(laps):
        for _leg in range(4):
            for _ in range(straight_each):
                x += step * math.cos(psi)
                y += step * math.sin(psi)
                truth.append(Pose2(x, y, psi))
            corner_ids.append(len(truth) - 1)
            for _ in range(corner_ticks):
                psi = angle_norm(psi + (math.pi / 2) / corner_ticks)
                truth.append(Pose2(x, y, psi))

    g = PoseGraph()
    g.add_pose(truth[0])
    ex, ey, epsi = 0.0, 0.0, 0.0
    for k in range(1, len(truth)):
        prev, cur = truth[k - 1], truth[k]
        dpsi = angle_norm(cur.psi - prev.psi)
        epsi = angle_norm(epsi + dpsi + rng.normal(0.0, yaw_noise))
        dist = prev.distance_to(cur) * drift_scale
        ex += dist * math.cos(epsi)
        ey += dist * math.sin(epsi)
        g.add_pose(Pose2(ex, ey, epsi), timestamp=k)

    # Loop closures: corners revisited on laps >= 2 constrain back to the
    # matching corner of the first lap, with ground-truth measurements.
    scan_ids = list(corner_ids[:4])
    lc_budget = (laps - 1) * lc_per_lap
    added = 0
    for lap in range(1, laps):
        for c in range(4):
            if added >= lc_budget:
                break
            cur_id = corner_ids[4 * lap + c]
            ref_id = corner_ids[c]
            z = odometry_edge(truth[cur_id], truth[ref_id])
            g.add_loop_closure(cur_id, ref_id, z, LOOP_CLOSURE_WEIGHT)
            scan_ids.append(cur_id)
            added += 1
    g.scan_pose_ids = sorted(set(scan_ids))
    return g, truth
