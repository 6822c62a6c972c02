"""Spatial decomposition of the task set into one exclusive group per vehicle."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .environment import TaskSpot
from .kinematics import VehicleConfig, segment_distance

__all__ = [
    "ClusterAssignment",
    "kmeans",
    "fcm",
    "fcm_memberships",
    "fcm_objective",
    "assign_max",
    "assign_roulette",
    "cluster_tasks",
    "pair_clusters",
    "export_assignment_csv",
    "POLICIES",
]

POLICIES = ("kmeans", "fcm_max", "fcm_roulette")


@dataclass
class ClusterAssignment:
    """Cluster centres, per-task labels and (for FCM) the partition matrix.

    ``task_ids[i]`` names row ``i`` of ``membership``. ``objective`` holds the
    clustering objective after every iteration of the accepted run.
    """

    k: int
    centers: np.ndarray
    task_ids: list[int]
    labels: dict[int, int] = field(default_factory=dict)
    membership: np.ndarray | None = None
    policy: str = "kmeans"
    objective: list[float] = field(default_factory=list)
    iterations: int = 0

    def members(self, cluster: int) -> list[int]:
        return [t for t in self.task_ids if self.labels.get(t) == cluster]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for t in self.task_ids:
            counts[self.labels[t]] += 1
        return counts

    def check(self) -> None:
        for t in self.task_ids:
            lab = self.labels.get(t)
            if lab is None or not 0 <= lab < self.k:
                raise ValueError(f"task {t} has no valid cluster label")
        if self.membership is not None:
            rows = self.membership.sum(axis=1)
            if not np.allclose(rows, 1.0, atol=1e-9, rtol=0):
                raise ValueError("membership rows must sum to one")


def _positions(tasks: Sequence[TaskSpot]) -> tuple[list[int], np.ndarray]:
    ids = [t.id for t in tasks]
    pts = np.array([t.position_xyz for t in tasks], dtype=float).reshape(len(tasks), 3)
    return ids, pts


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int):
    n = len(points)
    centers = points[rng.choice(n, size=k, replace=False)].copy()
    labels = None
    objective = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(points, centers)
        new_labels = d2.argmin(axis=1)
        objective.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            sel = labels == c
            # empty clusters keep their centre
            if sel.any():
                centers[c] = points[sel].mean(axis=0)
    return centers, labels if labels is not None else new_labels, objective, it


def kmeans(tasks: Sequence[TaskSpot], k: int, seed: int | None = None,
           max_iter: int = 300, n_init: int = 10) -> ClusterAssignment:
    """Lloyd's algorithm from ``n_init`` seeded starts; keeps the lowest SSE.

    Each start picks ``k`` distinct tasks uniformly as initial centres.
    """
    if k < 1:
        raise ValueError("cluster count must be at least 1")
    if len(tasks) < k:
        raise ValueError(f"{len(tasks)} tasks cannot fill {k} clusters")
    ids, pts = _positions(tasks)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        centers, labels, objective, it = _lloyd(pts, k, rng, max_iter)
        if best is None or objective[-1] < best[2][-1]:
            best = (centers, labels, objective, it)
    centers, labels, objective, it = best
    return ClusterAssignment(k, centers, ids, {t: int(l) for t, l in zip(ids, labels)},
                             None, "kmeans", objective, it)


def fcm_memberships(points: np.ndarray, centers: np.ndarray, m: float = 2.0) -> np.ndarray:
    """Partition matrix for fixed centres.

    A point sitting exactly on a centre gets membership 1 there (the lowest
    such centre if several coincide) and 0 elsewhere.
    """
    if not m > 1:
        raise ValueError("fuzzifier m must exceed 1")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = np.sqrt(_sq_dists(points, centers))
    w = np.zeros_like(d)
    p = 2.0 / (m - 1.0)
    for i, row in enumerate(d):
        zero = np.flatnonzero(row == 0)
        if zero.size:
            w[i, zero[0]] = 1.0
            continue
        ratio = (row[:, None] / row[None, :]) ** p
        w[i] = 1.0 / ratio.sum(axis=1)
    return w


def fcm_objective(points: np.ndarray, centers: np.ndarray, w: np.ndarray, m: float) -> float:
    return float(((w**m) * _sq_dists(points, centers)).sum())


def fcm(tasks: Sequence[TaskSpot], k: int, fuzzifier_m: float = 2.0, seed: int | None = None,
        tol: float = 1e-6, max_iter: int = 200) -> ClusterAssignment:
    """Fuzzy c-means; labels are left empty for an assignment policy to fill."""
    if not fuzzifier_m > 1:
        raise ValueError("fuzzifier m must exceed 1")
    if k < 1:
        raise ValueError("cluster count must be at least 1")
    if len(tasks) < k:
        raise ValueError(f"{len(tasks)} tasks cannot fill {k} clusters")
    ids, pts = _positions(tasks)
    rng = np.random.default_rng(seed)
    w = rng.random((len(pts), k))
    w /= w.sum(axis=1, keepdims=True)
    centers = np.zeros((k, 3))
    objective = []
    it = 0
    for it in range(1, max_iter + 1):
        wm = w**fuzzifier_m
        new_centers = (wm.T @ pts) / wm.sum(axis=0)[:, None]
        w = fcm_memberships(pts, new_centers, fuzzifier_m)
        objective.append(fcm_objective(pts, new_centers, w, fuzzifier_m))
        shift = np.abs(new_centers - centers).max()
        centers = new_centers
        if it > 1 and shift < tol:
            break
    return ClusterAssignment(k, centers, ids, {}, w, "fcm", objective, it)


def assign_max(assignment: ClusterAssignment) -> ClusterAssignment:
    if assignment.membership is None:
        raise ValueError("assignment carries no membership matrix")
    lab = np.argmax(assignment.membership, axis=1)
    labels = {t: int(l) for t, l in zip(assignment.task_ids, lab)}
    return replace(assignment, labels=labels, policy="fcm_max")


def assign_roulette(assignment: ClusterAssignment, seed: int | None = None) -> ClusterAssignment:
    """Draw each task's cluster with probability equal to its membership."""
    if assignment.membership is None:
        raise ValueError("assignment carries no membership matrix")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(assignment.membership, axis=1)
    u = rng.random(len(cum))
    k = assignment.k
    labels = {}
    for t, row, x in zip(assignment.task_ids, cum, u):
        labels[t] = int(min(np.searchsorted(row, x, side="right"), k - 1))
    return replace(assignment, labels=labels, policy="fcm_roulette")


def cluster_tasks(tasks: Sequence[TaskSpot], k: int, policy: str = "kmeans",
                  seed: int | None = None, **kwargs) -> ClusterAssignment:
    if policy == "kmeans":
        return kmeans(tasks, k, seed, **kwargs)
    if policy not in POLICIES:
        raise ValueError(f"unknown clustering policy {policy!r}")
    ss = np.random.SeedSequence(seed)
    s_fcm, s_wheel = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    fuzzy = fcm(tasks, k, seed=s_fcm, **kwargs)
    if policy == "fcm_max":
        return assign_max(fuzzy)
    return assign_roulette(fuzzy, s_wheel)


def pair_clusters(assignment: ClusterAssignment, fleet: Sequence[VehicleConfig]) -> list[int]:
    """Cluster index for each vehicle, minimising start->centre->goal distance.

    Exhaustive over pairings for up to eight vehicles, greedy beyond. The
    first minimal pairing in lexicographic order wins ties.
    """
    k = len(fleet)
    if k != assignment.k:
        raise ValueError(f"{k} vehicles but {assignment.k} clusters")
    centers = [tuple(c) for c in assignment.centers]
    cost = [[segment_distance(v.start_xyz, c) + segment_distance(c, v.goal_xyz) for c in centers]
            for v in fleet]
    if k <= 8:
        best, best_perm = None, None
        for perm in itertools.permutations(range(k)):
            total = sum(cost[v][perm[v]] for v in range(k))
            if best is None or total < best:
                best, best_perm = total, perm
        return list(best_perm)
    free = set(range(k))
    out = []
    for v in range(k):
        c = min(sorted(free), key=lambda j: cost[v][j])
        free.remove(c)
        out.append(c)
    return out


def export_assignment_csv(assignment: ClusterAssignment, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["task_id", "cluster", "label_policy"]
                   + [f"membership_{j}" for j in range(assignment.k)])
        for i, t in enumerate(assignment.task_ids):
            row = [t, assignment.labels.get(t, ""), assignment.policy]
            if assignment.membership is not None:
                row += [f"{x:.9g}" for x in assignment.membership[i]]
            else:
                row += [""] * assignment.k
            w.writerow(row)
    return path
