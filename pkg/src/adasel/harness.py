"""Synthetic data generation and regret evaluation for the selector.

The generator builds M well-separated random subspaces with distinct mean
features, emits training frames per scenario, a Markov-switching test
stream with per-window ground truth, and a performance table in which the
best combo genuinely depends on the scenario.  The evaluator compares a
selection trace against the hindsight oracle (per-window best combo) and
against every static single-combo policy.

Everything is deterministic given the config seed.  The performance table
is keyed by the scenario ids that deterministic re-clustering of the
training frames produces, so the generated files feed the design-time
pipeline unmodified.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import (AlgoParamCombo, PerformanceRecord, PlatformSpec,
                     cluster_scenarios)
from .errors import ConfigInvalid, MalformedRow, Misaligned
from .runtime import SelectionTrace

REPORT_VERSION = 1


@dataclass
class SyntheticConfig:
    """Knobs for the synthetic scenario/stream generator.

    ``error_model`` maps (scenario index, combo index) to a mean error;
    when None, a model is generated in which scenario i's best combo is
    combo i mod n_combos.  Extra generator knobs (mean_scale, separation,
    stay_prob, error_noise) have fixed defaults and stay deterministic
    under ``seed``.
    """

    dim_ambient: int = 64
    dim_subspace: int = 5
    n_scenarios: int = 5
    n_combos: int = 4
    frames_per_scenario: int = 40
    n_windows: int = 200
    noise_sigma: float = 0.1
    seed: int = 42
    error_model: dict[tuple[int, int], float] | None = None
    mean_scale: float = 4.0
    min_separation: float = 0.2
    stay_prob: float = 0.6
    error_noise: float = 0.5

    def validate(self) -> None:
        checks = [
            (self.dim_ambient >= 2, "dim_ambient must be >= 2"),
            (self.dim_subspace >= 1, "dim_subspace must be >= 1"),
            (2 * self.dim_subspace <= self.dim_ambient,
             "need dim_ambient >= 2 * dim_subspace"),
            (self.n_scenarios >= 1, "n_scenarios must be >= 1"),
            (self.n_combos >= 1, "n_combos must be >= 1"),
            (self.frames_per_scenario > self.dim_subspace,
             "frames_per_scenario must exceed dim_subspace"),
            (self.n_windows >= 1, "n_windows must be >= 1"),
            (self.noise_sigma >= 0.0, "noise_sigma must be >= 0"),
            (0.0 < self.stay_prob <= 1.0, "stay_prob must be in (0, 1]"),
            (self.error_noise >= 0.0, "error_noise must be >= 0"),
        ]
        for ok, reason in checks:
            if not ok:
                raise ConfigInvalid(reason)


@dataclass
class WindowTruth:
    """Ground truth for one test window: generating scenario + true errors."""

    window_id: int
    true_scenario_id: str | None
    errors: dict[str, float]


@dataclass
class SyntheticDataset:
    config: SyntheticConfig
    training_frames: np.ndarray
    training_labels: list[str]
    test_stream: np.ndarray
    test_labels: list[str]
    window_truth: list[WindowTruth]
    combos: list[AlgoParamCombo]
    platforms: list[PlatformSpec]
    performance: list[PerformanceRecord]
    scenario_map: dict[str, str]  # generating id -> clustered scenario id


def _random_subspaces(rng, a, b, count, min_separation):
    """Orthonormal bases with pairwise smallest principal angle >= floor."""
    max_cos = np.cos(min_separation)
    bases = []
    attempts = 0
    while len(bases) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise ConfigInvalid(
                f"could not place {count} subspaces with pairwise "
                f"separation {min_separation} in dimension {a}")
        q, _ = np.linalg.qr(rng.standard_normal((a, b)))
        if all(np.linalg.svd(q.T @ p, compute_uv=False).max() <= max_cos
               for p in bases):
            bases.append(q)
    return bases


def _separated_means(rng, a, count, scale):
    means = []
    attempts = 0
    while len(means) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise ConfigInvalid(
                f"could not place {count} separated means in dimension {a}")
        v = rng.standard_normal(a)
        v = v / np.linalg.norm(v)
        if all(abs(v @ m) <= 0.5 for m in means):
            means.append(v)
    return [scale * m for m in means]


def generate_synthetic(config: SyntheticConfig) -> SyntheticDataset:
    """Training frames, Markov test stream, and matching performance table."""
    config.validate()
    a, b = config.dim_ambient, config.dim_subspace
    M, H = config.n_scenarios, config.n_combos
    rng = np.random.default_rng(config.seed)

    bases = _random_subspaces(rng, a, b, M, config.min_separation)
    means = _separated_means(rng, a, M, config.mean_scale)
    amps = np.linspace(1.2, 0.6, b)

    def draw_frames(scenario, count):
        coeffs = rng.standard_normal((count, b)) * amps
        noise = config.noise_sigma * rng.standard_normal((count, a))
        return means[scenario] + coeffs @ bases[scenario].T + noise

    gen_ids = [f"g{i:03d}" for i in range(M)]
    training_frames = np.vstack([
        draw_frames(i, config.frames_per_scenario) for i in range(M)])
    training_labels = [gen_ids[i] for i in range(M)
                       for _ in range(config.frames_per_scenario)]

    # Markov-switching test stream
    states = []
    state = int(rng.integers(M))
    for _ in range(config.n_windows):
        states.append(state)
        if M > 1 and rng.random() > config.stay_prob:
            others = [s for s in range(M) if s != state]
            state = others[int(rng.integers(M - 1))]
    test_stream = np.vstack([
        draw_frames(s, config.frames_per_scenario) for s in states])

    # scenario-conditional error means
    if config.error_model is not None:
        mean_err = dict(config.error_model)
        for i in range(M):
            for h in range(H):
                if (i, h) not in mean_err:
                    raise ConfigInvalid(
                        f"error_model lacks entry for scenario {i}, combo {h}")
                if mean_err[(i, h)] < 0.0:
                    raise ConfigInvalid(
                        f"error_model[{i}, {h}] is negative")
    else:
        mean_err = {(i, h): 2.0 if h == i % H else float(rng.uniform(5.0, 9.0))
                    for i in range(M) for h in range(H)}

    combos = [AlgoParamCombo(id=f"c{h:02d}", algorithm=f"alg{h}",
                             fps=5.0 * (h + 1), resolution=(320, 240))
              for h in range(H)]
    platforms = [
        PlatformSpec(id="p1", cost=1.0,
                     combo_capabilities={c.id: c.fps for c in combos}),
        PlatformSpec(id="p2", cost=2.0,
                     combo_capabilities={c.id: 2.0 * c.fps for c in combos}),
    ]

    # key the table by the scenario ids the design-time clustering will assign
    clusters = cluster_scenarios(training_frames, M, b, config.seed)
    reps = np.stack([c.representative_feature for c in clusters])
    gen_to_cluster: dict[str, str] = {}
    for i in range(M):
        block = training_frames[i * config.frames_per_scenario:
                                (i + 1) * config.frames_per_scenario]
        d2 = ((block[:, None, :] - reps[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argmin(d2, axis=1)
        majority = int(np.bincount(nearest, minlength=M).argmax())
        gen_to_cluster[gen_ids[i]] = clusters[majority].scenario_id
    if len(set(gen_to_cluster.values())) != M:
        raise ConfigInvalid(
            "clustering did not separate the generated scenarios; "
            "lower noise_sigma or raise mean_scale/min_separation")

    performance = [
        PerformanceRecord(scenario_id=gen_to_cluster[gen_ids[i]],
                          combo_id=combos[h].id, platform_id=p.id,
                          error=mean_err[(i, h)])
        for p in platforms for i in range(M) for h in range(H)]

    window_truth = []
    test_labels = []
    for w, s in enumerate(states):
        noise = rng.uniform(-config.error_noise, config.error_noise, size=H)
        errors = {combos[h].id: float(max(0.0, mean_err[(s, h)] + noise[h]))
                  for h in range(H)}
        window_truth.append(WindowTruth(
            window_id=w, true_scenario_id=gen_to_cluster[gen_ids[s]],
            errors=errors))
        test_labels += [gen_to_cluster[gen_ids[s]]] * config.frames_per_scenario

    return SyntheticDataset(
        config=config, training_frames=training_frames,
        training_labels=training_labels, test_stream=test_stream,
        test_labels=test_labels, window_truth=window_truth, combos=combos,
        platforms=platforms, performance=performance,
        scenario_map=gen_to_cluster)


# --------------------------------------------------------------------------
# regret evaluation

@dataclass
class WindowRegret:
    window_id: int
    selected_error: float
    oracle_error: float
    best_static_error: float


@dataclass
class RegretReport:
    """Per-window and total comparison against oracle and static policies."""

    per_window: list[WindowRegret]
    selected_sum: float
    oracle_sum: float
    static_sums: dict[str, float]
    best_static_id: str | None
    switch_count: int
    scenario_match_accuracy: float | None = None

    @property
    def regret(self) -> float:
        return self.selected_sum - self.oracle_sum


def evaluate_regret(trace: SelectionTrace,
                    window_truth: list[WindowTruth]) -> RegretReport:
    """Compare a trace against hindsight-oracle and static-combo policies."""
    if len(trace.decisions) != len(window_truth):
        raise Misaligned(
            f"trace has {len(trace.decisions)} windows, "
            f"ground truth has {len(window_truth)}")
    if not window_truth:
        return RegretReport(per_window=[], selected_sum=0.0, oracle_sum=0.0,
                            static_sums={}, best_static_id=None,
                            switch_count=0)

    combo_ids = sorted(window_truth[0].errors)
    static_sums = {cid: 0.0 for cid in combo_ids}
    selected_sum = 0.0
    oracle_sum = 0.0
    rows = []
    matches = 0
    have_truth_ids = all(t.true_scenario_id is not None for t in window_truth)

    for decision, truth in zip(trace.decisions, window_truth):
        if sorted(truth.errors) != combo_ids:
            raise Misaligned(
                f"window {truth.window_id}: ground-truth combos differ "
                "from the first window's")
        if decision.chosen_combo_id not in truth.errors:
            raise Misaligned(
                f"window {truth.window_id}: no ground-truth error for "
                f"chosen combo {decision.chosen_combo_id!r}")
        sel = truth.errors[decision.chosen_combo_id]
        selected_sum += sel
        oracle_sum += min(truth.errors.values())
        for cid in combo_ids:
            static_sums[cid] += truth.errors[cid]
        rows.append((decision, truth, sel))
        if have_truth_ids and decision.matched_scenario_id == truth.true_scenario_id:
            matches += 1

    best_static_id = min(combo_ids, key=lambda cid: (static_sums[cid], cid))
    per_window = [WindowRegret(
        window_id=truth.window_id, selected_error=sel,
        oracle_error=min(truth.errors.values()),
        best_static_error=truth.errors[best_static_id])
        for decision, truth, sel in rows]
    accuracy = matches / len(window_truth) if have_truth_ids else None
    return RegretReport(per_window=per_window, selected_sum=selected_sum,
                        oracle_sum=oracle_sum, static_sums=static_sums,
                        best_static_id=best_static_id,
                        switch_count=trace.switch_count(),
                        scenario_match_accuracy=accuracy)


def emit_report(report: RegretReport, format: str = "csv") -> str:
    """Serialize a report; bit-stable for identical input."""
    if format == "csv":
        lines = ["window_id,selected_error,oracle_error,best_static_error"]
        lines += [f"{w.window_id},{repr(w.selected_error)},"
                  f"{repr(w.oracle_error)},{repr(w.best_static_error)}"
                  for w in report.per_window]
        return "\n".join(lines) + "\n"
    if format == "json":
        doc = {
            "format_version": REPORT_VERSION,
            "per_window": [{
                "window_id": w.window_id,
                "selected_error": w.selected_error,
                "oracle_error": w.oracle_error,
                "best_static_error": w.best_static_error,
            } for w in report.per_window],
            "totals": {
                "selected_sum": report.selected_sum,
                "oracle_sum": report.oracle_sum,
                "static_sums": report.static_sums,
            },
            "best_static_id": report.best_static_id,
            "switch_count": report.switch_count,
            "scenario_match_accuracy": report.scenario_match_accuracy,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    raise ValueError(f"unknown report format {format!r}")


def parse_report(text: str) -> RegretReport:
    """Inverse of emit_report(..., 'json')."""
    doc = json.loads(text)
    return RegretReport(
        per_window=[WindowRegret(
            window_id=w["window_id"], selected_error=w["selected_error"],
            oracle_error=w["oracle_error"],
            best_static_error=w["best_static_error"])
            for w in doc["per_window"]],
        selected_sum=doc["totals"]["selected_sum"],
        oracle_sum=doc["totals"]["oracle_sum"],
        static_sums=dict(doc["totals"]["static_sums"]),
        best_static_id=doc["best_static_id"],
        switch_count=doc["switch_count"],
        scenario_match_accuracy=doc["scenario_match_accuracy"])


# --------------------------------------------------------------------------
# window-truth CSV (ground truth for cmd_eval)

def write_window_truth(path, truths: list[WindowTruth]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["window_id", "combo_id", "error", "true_scenario_id"])
    for t in truths:
        for cid in sorted(t.errors):
            writer.writerow([t.window_id, cid, repr(t.errors[cid]),
                             t.true_scenario_id or ""])
    Path(path).write_text(buf.getvalue())


def read_window_truth(path) -> list[WindowTruth]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != \
                ["window_id", "combo_id", "error"]:
            raise MalformedRow(
                f"{path}: header must start with window_id,combo_id,error")
        by_window: dict[int, WindowTruth] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3:
                raise MalformedRow(f"{path}:{lineno}: expected >= 3 columns")
            try:
                wid = int(row[0])
                error = float(row[2])
            except ValueError:
                raise MalformedRow(
                    f"{path}:{lineno}: bad window_id or error") from None
            sid = row[3].strip() if len(row) > 3 and row[3].strip() else None
            truth = by_window.setdefault(
                wid, WindowTruth(window_id=wid, true_scenario_id=sid,
                                 errors={}))
            truth.errors[row[1].strip()] = error
    return [by_window[w] for w in sorted(by_window)]
