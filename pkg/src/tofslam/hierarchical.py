"""Hierarchical graph optimization for graphs beyond the direct solver size.

A sparse subset of the graph (every pose that moved or turned enough,
plus all scan poses) is optimized with the real loop-closure edges.  The
optimized members then correct each in-between subgraph: the subgraph is
rigidly moved so its first pose lands on the optimized member, a
synthesized constraint ties its last pose to the next optimized member,
and a normal optimization run distributes the residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2, angle_norm, relative_pose
from .graph import (
    DEFAULT_ITERATIONS,
    LOOP_CLOSURE_WEIGHT,
    Edge,
    PoseGraph,
    odometry_edge,
    optimize,
)


class GraphTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class HierarchicalConfig:
    d_min: float = 0.3
    dpsi_min: float = math.radians(30.0)
    max_sparse_poses: int = 440

    def __post_init__(self):
        if self.d_min < 0:
            raise ValueError("d_min must be non-negative")
        if not (0 < self.max_sparse_poses <= 440):
            raise ValueError("the solver handles at most 440 poses at a time")


@dataclass
class SparseGraph:
    """Ordered ids of the representative subset; always contains pose 0,
    every scan pose, and the final pose."""

    member_ids: list[int]


def build_sparse_graph(graph: PoseGraph, cfg: HierarchicalConfig) -> SparseGraph:
    """Greedy chronological thresholding on travelled distance and heading.

    A pose joins the sparse graph when its Euclidean distance from the
    last member exceeds d_min or its heading differs by more than
    dpsi_min; scan poses and the endpoints are always included.
    """
    if not graph.entries:
        raise ValueError("cannot sample an empty graph")
    poses = graph.poses()
    members = {0, len(poses) - 1}
    members.update(pid for pid in graph.scan_pose_ids if 0 <= pid < len(poses))
    for edge in graph.lc_edges:  # LC endpoints are scan poses by construction
        members.add(edge.from_id)
        members.add(edge.to_id)
    last = poses[0]
    for pid in range(1, len(poses)):
        p = poses[pid]
        if p.distance_to(last) > cfg.d_min or abs(angle_norm(p.psi - last.psi)) > cfg.dpsi_min:
            members.add(pid)
            last = p
    ids = sorted(members)
    if len(ids) > cfg.max_sparse_poses:
        raise GraphTooLargeError(
            f"environment too large: sparse graph needs {len(ids)} poses, "
            f"limit is {cfg.max_sparse_poses}")
    return SparseGraph(ids)


def subgraph_constraint(x_opt_i: Pose2, x_opt_j: Pose2) -> tuple[float, float, float]:
    """Measurement of the synthesized end constraint for one subgraph.

    The edge runs from the subgraph's last node to its first, so the
    measurement is the first optimized member expressed in the frame of
    the second: odometry_edge(x_opt_j, x_opt_i).
    """
    return odometry_edge(x_opt_j, x_opt_i)


def _offset_to(poses: list[Pose2], target_first: Pose2) -> list[Pose2]:
    """Rigidly move a pose chain so its first pose matches target_first."""
    shift = target_first.transform().compose(poses[0].transform().inverse())
    return [shift.apply_pose(p) for p in poses]


def optimize_hierarchical(graph: PoseGraph, cfg: HierarchicalConfig | None = None,
                          n_iter: int = DEFAULT_ITERATIONS) -> SparseGraph:
    """Optimize a graph of any size through the sparse graph and subgraphs.

    Four steps: extract the sparse graph; optimize it against the real
    loop-closure edges; re-anchor each subgraph on its optimized first
    member and synthesize its end constraint; optimize every subgraph and
    write the corrected poses back.  Pose 0 is never modified.
    """
    cfg = cfg or HierarchicalConfig()
    sparse = build_sparse_graph(graph, cfg)
    ids = sparse.member_ids
    poses = graph.poses()
    index_of = {pid: k for k, pid in enumerate(ids)}

    sg = PoseGraph()
    for pid in ids:
        sg.add_pose(poses[pid])
    for edge in graph.lc_edges:
        if edge.from_id not in index_of or edge.to_id not in index_of:
            raise ValueError(f"loop closure ({edge.from_id}, {edge.to_id}) endpoints "
                             "must be scan poses present in the sparse graph")
        sg.add_loop_closure(index_of[edge.from_id], index_of[edge.to_id], edge.z, edge.omega_scale)
    optimize(sg, n_iter)
    # The gauge anchor pins pose 0 up to float noise; snap it exactly.
    opt_members = sg.poses()
    opt_members[0] = poses[0]

    corrected: dict[int, Pose2] = {ids[k]: opt_members[k] for k in range(len(ids))}
    for k in range(len(ids) - 1):
        lo, hi = ids[k], ids[k + 1]
        if hi - lo + 1 > cfg.max_sparse_poses:
            raise GraphTooLargeError(
                f"subgraph {lo}..{hi} exceeds the {cfg.max_sparse_poses}-pose limit")
        if hi == lo + 1:
            continue  # nothing between the members to correct
        chain = _offset_to(poses[lo:hi + 1], opt_members[k])
        sub = PoseGraph()
        for p in chain:
            sub.add_pose(p)
        sub.add_loop_closure(len(chain) - 1, 0,
                             subgraph_constraint(opt_members[k], opt_members[k + 1]),
                             LOOP_CLOSURE_WEIGHT)
        optimize(sub, n_iter)
        sub_poses = sub.poses()
        for off in range(1, hi - lo):
            corrected[lo + off] = sub_poses[off]

    new_poses = [corrected.get(pid, poses[pid]) for pid in range(len(poses))]
    new_poses[0] = poses[0]
    graph.set_poses(new_poses)
    return sparse
