"""Pose graph storage and direct graph-based SLAM.

The graph is a table of timestamped poses plus a list of loop-closure
edges; odometry constraints are recomputed from consecutive poses right
before every optimization, so storing the poses is enough.  Optimization
is Gauss-Newton: assemble the sparse normal equations from analytic
Jacobians, reorder with reverse Cuthill-McKee, factor with the sparse
Cholesky, and back-substitute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2, angle_norm
from .sparse import CsrLower, Permutation, cholesky_crout, permute_lower, rcm, solve_lower, solve_upper_transposed, symbolic_cholesky

ODOMETRY_WEIGHT = 1.0
LOOP_CLOSURE_WEIGHT = 20.0
DEFAULT_ITERATIONS = 3

# Lower-triangle slots of a 3x3 diagonal block; the (0,1)/(1,0) cells are
# identically zero because the Jacobians' rotation part is orthonormal.
_DIAG_SLOTS = ((0, 0), (1, 1), (2, 0), (2, 1), (2, 2))
# Off-diagonal block patterns, depending on whether the lower block holds
# the from-side (A^T W B) or to-side (B^T W A) product.
_BLOCK_AB_SLOTS = ((0, 0), (1, 1), (2, 0), (2, 1), (2, 2))
_BLOCK_BA_SLOTS = ((0, 0), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass
class GraphEntry:
    """One graph table row: id, timestamp, pose, and reduced ToF rows.

    tof is a 4x8 int16 grid of millimeter distances with 0 marking an
    invalid zone, exactly what travels on the wire.
    """

    pose_id: int
    timestamp: int
    pose: Pose2
    tof: np.ndarray

    def __post_init__(self):
        self.tof = np.asarray(self.tof, dtype=np.int16)
        if self.tof.shape != (4, 8):
            raise ValueError("graph entry ToF data must be 4x8")


@dataclass(frozen=True)
class Edge:
    """Relative pose constraint z (in from_id's frame) between two nodes."""

    from_id: int
    to_id: int
    z: tuple[float, float, float]
    kind: str = "odometry"
    omega_scale: float = ODOMETRY_WEIGHT


@dataclass
class PoseGraph:
    """Graph table of poses plus loop-closure edges and scan-pose bookkeeping."""

    entries: list[GraphEntry] = field(default_factory=list)
    lc_edges: list[Edge] = field(default_factory=list)
    scan_pose_ids: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def add_pose(self, pose: Pose2, timestamp: int = 0, tof=None) -> int:
        pid = len(self.entries)
        if self.entries and timestamp < self.entries[-1].timestamp:
            raise ValueError("timestamps must be non-decreasing")
        tof = np.zeros((4, 8), dtype=np.int16) if tof is None else tof
        self.entries.append(GraphEntry(pid, timestamp, pose, tof))
        return pid

    def add_loop_closure(self, from_id: int, to_id: int, z, omega_scale: float = LOOP_CLOSURE_WEIGHT) -> Edge:
        n = len(self.entries)
        if not (0 <= from_id < n and 0 <= to_id < n) or from_id == to_id:
            raise ValueError(f"loop closure ({from_id}, {to_id}) must reference distinct existing poses")
        edge = Edge(from_id, to_id, (float(z[0]), float(z[1]), float(z[2])), "loop_closure", omega_scale)
        self.lc_edges.append(edge)
        return edge

    def poses(self) -> list[Pose2]:
        return [e.pose for e in self.entries]

    def set_poses(self, poses) -> None:
        for entry, pose in zip(self.entries, poses, strict=True):
            entry.pose = pose

    def pose_array(self) -> np.ndarray:
        return np.array([[e.pose.x, e.pose.y, e.pose.psi] for e in self.entries])


def odometry_edge(x_i: Pose2, x_j: Pose2) -> tuple[float, float, float]:
    """Relative measurement of x_j expressed in x_i's frame (rotated coordinates)."""
    dx, dy = x_j.x - x_i.x, x_j.y - x_i.y
    c, s = math.cos(x_i.psi), math.sin(x_i.psi)
    return (c * dx + s * dy, -s * dx + c * dy, angle_norm(x_j.psi - x_i.psi))


def all_edges(graph: PoseGraph) -> list[Edge]:
    """Odometry edges recomputed from consecutive poses, then the LC edges."""
    poses = graph.poses()
    edges = [Edge(i, i + 1, odometry_edge(poses[i], poses[i + 1]))
             for i in range(len(poses) - 1)]
    edges.extend(graph.lc_edges)
    return edges


def edge_error_and_jacobians(edge: Edge, x_i: Pose2, x_j: Pose2):
    """Error z - zhat and its exact partial derivatives w.r.t. both poses."""
    dx, dy = x_j.x - x_i.x, x_j.y - x_i.y
    c, s = math.cos(x_i.psi), math.sin(x_i.psi)
    zx_hat = c * dx + s * dy
    zy_hat = -s * dx + c * dy
    e = np.array([
        edge.z[0] - zx_hat,
        edge.z[1] - zy_hat,
        angle_norm(edge.z[2] - angle_norm(x_j.psi - x_i.psi)),
    ])
    a = np.array([
        [c, s, -zy_hat],
        [-s, c, zx_hat],
        [0.0, 0.0, 1.0],
    ])
    b = np.array([
        [-c, -s, 0.0],
        [s, -c, 0.0],
        [0.0, 0.0, -1.0],
    ])
    return e, a, b


def _objective(poses, edges) -> float:
    total = 0.0
    for edge in edges:
        e, _, _ = edge_error_and_jacobians(edge, poses[edge.from_id], poses[edge.to_id])
        total += edge.omega_scale * float(e @ e)
    return total


def graph_objective(graph: PoseGraph) -> float:
    """Weighted squared error sum over all edges at the current estimate."""
    return _objective(graph.poses(), all_edges(graph))


def _h_pattern(n_poses: int, edges) -> CsrLower:
    """Structural slots: one uniform diagonal block per pose plus one
    off-diagonal block per edge, at the paper-faithful block sparsity."""
    slots = set()
    for p in range(n_poses):
        for r, c in _DIAG_SLOTS:
            slots.add((3 * p + r, 3 * p + c))
    for edge in edges:
        f, t = edge.from_id, edge.to_id
        if t > f:
            base, pat = (3 * t, 3 * f), _BLOCK_BA_SLOTS
        else:
            base, pat = (3 * f, 3 * t), _BLOCK_AB_SLOTS
        for r, c in pat:
            slots.add((base[0] + r, base[1] + c))
    return CsrLower.from_pattern(3 * n_poses, sorted(slots))


def assemble(graph: PoseGraph, edges=None, pattern: CsrLower | None = None):
    """Build the lower normal matrix H and the gradient vector b.

    Every edge adds its A/B Jacobian products into the four touched
    blocks; the identity is added to the first pose's diagonal block as
    the gauge anchor.  Only lower-triangle slots are stored, and the
    structural zeros inside blocks are never allocated.
    """
    if not graph.entries:
        raise ValueError("cannot assemble an empty graph")
    poses = graph.poses()
    n = len(poses)
    if edges is None:
        edges = all_edges(graph)
    for edge in graph.lc_edges:
        if not (0 <= edge.from_id < n and 0 <= edge.to_id < n):
            raise ValueError(f"loop closure references missing pose ({edge.from_id}, {edge.to_id})")
    h = pattern if pattern is not None else _h_pattern(n, edges)
    h.values[:] = 0.0
    b = np.zeros(3 * n)

    def add_block(bi: int, bj: int, m: np.ndarray, pat) -> None:
        for r, c in pat:
            h.add_to(3 * bi + r, 3 * bj + c, m[r, c])

    for edge in edges:
        f, t = edge.from_id, edge.to_id
        e, a_jac, b_jac = edge_error_and_jacobians(edge, poses[f], poses[t])
        w = edge.omega_scale
        add_block(f, f, w * (a_jac.T @ a_jac), _DIAG_SLOTS)
        add_block(t, t, w * (b_jac.T @ b_jac), _DIAG_SLOTS)
        if t > f:
            add_block(t, f, w * (b_jac.T @ a_jac), _BLOCK_BA_SLOTS)
        else:
            add_block(f, t, w * (a_jac.T @ b_jac), _BLOCK_AB_SLOTS)
        b[3 * f:3 * f + 3] += w * (a_jac.T @ e)
        b[3 * t:3 * t + 3] += w * (b_jac.T @ e)

    for k in range(3):
        h.add_to(k, k, 1.0)  # gauge anchor on the first pose
    return h, b


@dataclass
class OptimizeReport:
    iterations: int
    step_inf_norms: list[float]
    objectives: list[float]
    objective_increased: bool


def optimize(graph: PoseGraph, n_iter: int = DEFAULT_ITERATIONS) -> OptimizeReport:
    """Run Gauss-Newton iterations in place on the graph table.

    Each iteration assembles H and b, permutes with RCM, factors, solves
    the two triangular systems, un-permutes, and applies the update with
    re-normalized headings.  The objective is monitored; an increase is
    reported, not corrected.
    """
    if not graph.entries:
        raise ValueError("cannot optimize an empty graph")
    step_norms: list[float] = []
    edges = all_edges(graph)  # measurements are fixed for the whole run
    objectives = [_objective(graph.poses(), edges)]
    pattern = _h_pattern(len(graph), edges)
    perm = rcm(pattern)
    factor: CsrLower | None = None
    for _ in range(n_iter):
        h, b = assemble(graph, edges, pattern)
        hp = permute_lower(h, perm)
        if factor is None:
            factor = symbolic_cholesky(hp)
        cholesky_crout(hp, factor)
        y = solve_lower(factor, -perm.apply_vector(b))
        dx = perm.unapply_vector(solve_upper_transposed(factor, y))
        step_norms.append(float(np.abs(dx).max()))
        poses = graph.poses()
        updated = []
        for k, pose in enumerate(poses):
            updated.append(Pose2(pose.x + dx[3 * k], pose.y + dx[3 * k + 1],
                                 angle_norm(pose.psi + dx[3 * k + 2])))
        graph.set_poses(updated)
        objectives.append(_objective(updated, edges))
    increased = any(b > a + 1e-12 for a, b in zip(objectives, objectives[1:]))
    return OptimizeReport(n_iter, step_norms, objectives, increased)


def export_graph(graph: PoseGraph) -> str:
    """Line-oriented text form: VERTEX id x y psi / EDGE i j zx zy zpsi omega."""
    lines = []
    for e in graph.entries:
        lines.append(f"VERTEX {e.pose_id} {e.pose.x!r} {e.pose.y!r} {e.pose.psi!r}")
    for edge in all_edges(graph):
        zx, zy, zpsi = edge.z
        lines.append(f"EDGE {edge.from_id} {edge.to_id} {zx!r} {zy!r} {zpsi!r} {edge.omega_scale!r}")
    return "\n".join(lines) + "\n"


def import_graph(text: str) -> PoseGraph:
    """Parse the text form back into a graph.

    Consecutive unit-weight edges are odometry and are implied by the
    vertices, so only the remaining lines become loop-closure edges.
    """
    graph = PoseGraph()
    lc: list[tuple[int, int, tuple[float, float, float], float]] = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "VERTEX":
            pid, x, y, psi = int(parts[1]), float(parts[2]), float(parts[3]), float(parts[4])
            if pid != len(graph.entries):
                raise ValueError(f"vertex ids must be contiguous, got {pid}")
            graph.add_pose(Pose2(x, y, psi))
        elif parts[0] == "EDGE":
            i, j = int(parts[1]), int(parts[2])
            z = (float(parts[3]), float(parts[4]), float(parts[5]))
            omega = float(parts[6])
            if not (j == i + 1 and omega == ODOMETRY_WEIGHT):
                lc.append((i, j, z, omega))
        else:
            raise ValueError(f"unknown graph line: {line!r}")
    for i, j, z, omega in lc:
        graph.add_loop_closure(i, j, z, omega)
    return graph
