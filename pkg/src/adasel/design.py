"""Design-time phase: scenario clustering, platform selection, labeling.

The offline workflow turns a labeled performance table plus training
features into a :class:`DesignProfile`: M unique scenarios (k-means
clusters with a mean feature and a PCA subspace each), a platform chosen
under cost/error constraints, and a best-combo label per scenario per
platform.  Everything is deterministic given the seed; clustering is also
invariant to the order of the input frames (frames are canonicalized by
lexicographic sort before seeding k-means++).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidM, MissingRecord, NoFeasiblePlatform, TooFewSamples
from .subspace import SubspaceBasis, as_feature_matrix, pca_basis

KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10


@dataclass
class AlgoParamCombo:
    """One selectable algorithm configuration: family + fps + resolution."""

    id: str
    algorithm: str
    fps: float
    resolution: tuple[int, int]


@dataclass
class PlatformSpec:
    """A compute platform: per-combo achievable fps and an opaque cost."""

    id: str
    combo_capabilities: dict[str, float]
    cost: float


@dataclass
class PerformanceRecord:
    """Measured error of one combo on one scenario under one platform.

    ``error`` is the primary metric (missed detections per window);
    ``extras`` carries named metrics (MT, ML, IDS, FP) opaquely.
    """

    scenario_id: str
    combo_id: str
    platform_id: str
    error: float
    extras: dict[str, float] = field(default_factory=dict)


@dataclass
class ScenarioProfile:
    """A unique training scenario: representative feature, subspace, labels."""

    scenario_id: str
    representative_feature: np.ndarray
    subspace: SubspaceBasis
    member_count: int
    labels: dict[str, str] = field(default_factory=dict)


@dataclass
class SelectionConstraints:
    max_mean_error: float
    required_fps: float
    max_cost: float


@dataclass
class ProfileConfig:
    dim_ambient: int
    dim_subspace: int
    window_length: int
    seed: int
    constraints: SelectionConstraints | None = None


@dataclass
class DesignProfile:
    """Everything the runtime selector needs, built offline."""

    scenarios: list[ScenarioProfile]
    combos: list[AlgoParamCombo]
    platforms: list[PlatformSpec]
    performance: list[PerformanceRecord]
    selected_platform: str | None
    config: ProfileConfig

    def scenario(self, scenario_id: str) -> ScenarioProfile:
        for s in self.scenarios:
            if s.scenario_id == scenario_id:
                return s
        raise KeyError(f"unknown scenario {scenario_id!r}")


def _canonical_order(X: np.ndarray) -> np.ndarray:
    """Indices sorting rows lexicographically (first column primary)."""
    return np.lexsort(X.T[::-1])


def _kmeans(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Best of several seeded k-means++ runs (lowest within-cluster SSE)."""
    best = None
    for _ in range(KMEANS_RESTARTS):
        assign = _kmeans_once(X, k, rng)
        sse = 0.0
        for j in range(k):
            members = X[assign == j]
            sse += float(((members - members.mean(axis=0)) ** 2).sum())
        if best is None or sse < best[0]:
            best = (sse, assign)
    return best[1]


def _kmeans_once(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """One seeded k-means++ / Lloyd run on rows of X; returns assignments."""
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)

    def dist2_to(center):
        return np.maximum(sq - 2.0 * X @ center + center @ center, 0.0)

    # k-means++ initialization
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = dist2_to(centers[0])
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[j] = X[rng.integers(n)]
        else:
            centers[j] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, dist2_to(centers[j]))

    assign = np.full(n, -1)
    for _ in range(KMEANS_MAX_ITER):
        d2_all = sq[:, None] - 2.0 * X @ centers.T + np.einsum(
            "ij,ij->i", centers, centers)[None, :]
        new_assign = np.argmin(d2_all, axis=1)
        own = d2_all[np.arange(n), new_assign].copy()
        for j in range(k):
            members = new_assign == j
            if not np.any(members):
                # relocate empty cluster to the worst-served point
                worst = int(np.argmax(own))
                centers[j] = X[worst]
                new_assign[worst] = j
                own[worst] = -np.inf  # not eligible for further relocations
            else:
                centers[j] = X[members].mean(axis=0)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return assign


def cluster_scenarios(frames, n_scenarios: int, subspace_dim: int,
                      seed: int) -> list[ScenarioProfile]:
    """Partition training frames into scenario clusters with subspaces.

    k-means on the raw feature vectors (k-means++ init, <=300 iterations,
    convergence on stable assignments, best of several seeded restarts).
    Scenario ids ("s000", ...) are assigned by lexicographic order of the
    cluster means, so the result is independent of the input frame order
    for a fixed seed.

    Raises InvalidM if n_scenarios is out of range, TooFewSamples if a
    cluster ends up with fewer than subspace_dim + 1 members.
    """
    X = as_feature_matrix(frames)
    n = X.shape[0]
    if n_scenarios < 1:
        raise InvalidM(f"need at least 1 scenario, got {n_scenarios}")
    if n_scenarios > n:
        raise InvalidM(
            f"cannot form {n_scenarios} scenarios from {n} frames")

    order = _canonical_order(X)
    Xs = X[order]
    rng = np.random.default_rng(seed)
    assign = _kmeans(Xs, n_scenarios, rng)

    means = np.stack([Xs[assign == j].mean(axis=0)
                      for j in range(n_scenarios)])
    by_mean = _canonical_order(means)

    scenarios = []
    for rank, j in enumerate(by_mean):
        members = Xs[assign == j]
        sid = f"s{rank:03d}"
        if members.shape[0] < subspace_dim + 1:
            raise TooFewSamples(
                f"scenario {sid} has {members.shape[0]} members; "
                f"need at least {subspace_dim + 1} for a {subspace_dim}-dim subspace")
        scenarios.append(ScenarioProfile(
            scenario_id=sid,
            representative_feature=means[j],
            subspace=pca_basis(members, subspace_dim),
            member_count=int(members.shape[0])))
    return scenarios


def feasible_combos(platform: PlatformSpec, combos: list[AlgoParamCombo],
                    required_fps: float) -> list[str]:
    """Ids of combos the platform can run at or above required_fps, in order."""
    return [c.id for c in combos
            if platform.combo_capabilities.get(c.id, 0.0) >= required_fps]


def _error_table(performance: list[PerformanceRecord]) -> dict:
    return {(r.scenario_id, r.combo_id, r.platform_id): r.error
            for r in performance}


def _best_achievable(platform: PlatformSpec, combos: list[AlgoParamCombo],
                     scenario_ids: list[str], table: dict,
                     required_fps: float) -> float:
    """Mean over scenarios of the min error over feasible combos."""
    feas = feasible_combos(platform, combos, required_fps)
    if not feas:
        return float("inf")
    total = 0.0
    for sid in scenario_ids:
        errors = []
        for cid in feas:
            key = (sid, cid, platform.id)
            if key not in table:
                raise MissingRecord(
                    f"no performance record for scenario={sid} "
                    f"combo={cid} platform={platform.id}")
            errors.append(table[key])
        total += min(errors)
    return total / len(scenario_ids)


def select_platform(platforms: list[PlatformSpec],
                    performance: list[PerformanceRecord],
                    constraints: SelectionConstraints,
                    combos: list[AlgoParamCombo] | None = None) -> str:
    """Cheapest platform whose best achievable mean error meets the ceiling.

    Best achievable mean error = mean over scenarios of the min error over
    combos feasible at constraints.required_fps.  Ties on cost break by
    lower error, then id order.  Raises NoFeasiblePlatform with per-platform
    diagnostics when nothing qualifies.
    """
    if combos is None:
        seen: dict[str, AlgoParamCombo] = {}
        for p in platforms:
            for cid in p.combo_capabilities:
                seen.setdefault(cid, AlgoParamCombo(
                    id=cid, algorithm=cid, fps=p.combo_capabilities[cid],
                    resolution=(0, 0)))
        combos = list(seen.values())
    scenario_ids = sorted({r.scenario_id for r in performance})
    table = _error_table(performance)

    diagnostics = {}
    candidates = []
    for p in platforms:
        best = _best_achievable(p, combos, scenario_ids, table,
                                constraints.required_fps)
        cost_ok = p.cost <= constraints.max_cost
        diagnostics[p.id] = {
            "cost": p.cost, "best_mean_error": best, "cost_ok": cost_ok}
        if cost_ok and best <= constraints.max_mean_error:
            candidates.append((p.cost, best, p.id))
    if not candidates:
        lines = "; ".join(
            f"{pid}: cost={d['cost']}"
            f"{'' if d['cost_ok'] else ' (over budget)'}"
            f", best mean error={d['best_mean_error']:.4g}"
            for pid, d in diagnostics.items())
        raise NoFeasiblePlatform(
            f"no platform meets max_mean_error={constraints.max_mean_error} "
            f"at cost <= {constraints.max_cost}: {lines}", diagnostics)
    candidates.sort()
    return candidates[0][2]


def label_scenarios(profile: DesignProfile) -> DesignProfile:
    """Fill labels[platform] = best feasible combo per scenario; idempotent.

    Best = minimal error; ties break by higher achievable fps on that
    platform, then lexicographic combo id.  Raises MissingRecord if the
    table lacks a feasible (scenario, combo, platform) entry.
    """
    constraints = profile.config.constraints
    required_fps = constraints.required_fps if constraints else 0.0
    table = _error_table(profile.performance)
    for scenario in profile.scenarios:
        labels = {}
        for platform in profile.platforms:
            feas = feasible_combos(platform, profile.combos, required_fps)
            ranked = []
            for cid in feas:
                key = (scenario.scenario_id, cid, platform.id)
                if key not in table:
                    raise MissingRecord(
                        f"no performance record for scenario="
                        f"{scenario.scenario_id} combo={cid} platform={platform.id}")
                fps = platform.combo_capabilities[cid]
                ranked.append((table[key], -fps, cid))
            if ranked:
                labels[platform.id] = min(ranked)[2]
        scenario.labels = labels
    return profile


def build_design_profile(frames, combos: list[AlgoParamCombo],
                         platforms: list[PlatformSpec],
                         performance: list[PerformanceRecord],
                         constraints: SelectionConstraints,
                         n_scenarios: int, subspace_dim: int,
                         window_length: int, seed: int) -> DesignProfile:
    """Run the full offline phase: cluster, select platform, label."""
    X = as_feature_matrix(frames)
    scenarios = cluster_scenarios(X, n_scenarios, subspace_dim, seed)
    config = ProfileConfig(
        dim_ambient=X.shape[1], dim_subspace=subspace_dim,
        window_length=window_length, seed=seed, constraints=constraints)
    profile = DesignProfile(
        scenarios=scenarios, combos=list(combos), platforms=list(platforms),
        performance=list(performance), selected_platform=None, config=config)
    profile.selected_platform = select_platform(
        platforms, performance, constraints, combos)
    return label_scenarios(profile)
