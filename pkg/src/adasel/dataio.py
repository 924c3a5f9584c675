"""File formats: binary matrices, stream manifests, tables, profiles, traces.

All formats round-trip exactly.  Matrices use a fixed little-endian binary
layout (magic ``ADSLMAT1``, u64 rows, u64 cols, row-major f64 payload);
JSON documents are written with sorted keys and repr-exact floats so that
identical inputs produce byte-identical files.  Versioned documents carry
``format_version`` and readers reject versions newer than they understand.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import (AlgoParamCombo, DesignProfile, PerformanceRecord,
                     PlatformSpec, ProfileConfig, ScenarioProfile,
                     SelectionConstraints)
from .errors import (BadMagic, DimensionOverflow, DuplicateKey, MalformedRow,
                     ManifestInvalid, NegativeError, TruncatedPayload,
                     UnsupportedVersion)
from .subspace import SubspaceBasis

MATRIX_MAGIC = b"ADSLMAT1"
FORMAT_VERSION = 1
# rows * cols * 8 beyond this cannot be a real file; reject before allocating
MAX_PAYLOAD_BYTES = 1 << 62

CANONICAL_EXTRAS = ("MT", "ML", "IDS", "FP")


# --------------------------------------------------------------------------
# binary matrices

def write_matrix(path, matrix) -> None:
    M = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if M.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {M.shape}")
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<QQ", M.shape[0], M.shape[1]))
        fh.write(M.astype("<f8").tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] != MATRIX_MAGIC:
        raise BadMagic(f"{path}: expected magic {MATRIX_MAGIC!r}, "
                       f"got {data[:8]!r}")
    if len(data) < 24:
        raise TruncatedPayload(f"{path}: header truncated")
    rows, cols = struct.unpack("<QQ", data[8:24])
    nbytes = rows * cols * 8
    if nbytes > MAX_PAYLOAD_BYTES:
        raise DimensionOverflow(
            f"{path}: {rows} x {cols} matrix exceeds addressable size")
    payload = data[24:]
    if len(payload) != nbytes:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, "
            f"header claims {nbytes}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


# --------------------------------------------------------------------------
# JSON helpers

def _canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _check_version(doc, path) -> None:
    version = doc.get("format_version")
    if not isinstance(version, int):
        raise ManifestInvalid(f"{path}: missing integer format_version")
    if version > FORMAT_VERSION:
        raise UnsupportedVersion(
            f"{path}: format_version {version} is newer than supported "
            f"({FORMAT_VERSION})")


# --------------------------------------------------------------------------
# feature stream manifests

@dataclass
class FeatureStream:
    """Frames-as-rows matrix plus optional per-frame scenario labels."""

    frames: np.ndarray
    labels: list[str] | None
    source: str


def write_stream(manifest_path, frames, source: str = "",
                 labels: list[str] | None = None) -> None:
    manifest_path = Path(manifest_path)
    X = np.asarray(frames, dtype=np.float64)
    if labels is not None and len(labels) != X.shape[0]:
        raise ManifestInvalid(
            f"{len(labels)} labels for {X.shape[0]} frames")
    matrix_name = manifest_path.stem + ".mat"
    write_matrix(manifest_path.parent / matrix_name, X)
    doc = {
        "format_version": FORMAT_VERSION,
        "dim": X.shape[1],
        "frame_count": X.shape[0],
        "source": source,
        "matrices": [matrix_name],
    }
    if labels is not None:
        doc["frame_labels"] = list(labels)
    manifest_path.write_text(_canonical_json(doc))


def read_stream(manifest_path) -> FeatureStream:
    manifest_path = Path(manifest_path)
    doc = json.loads(manifest_path.read_text())
    _check_version(doc, manifest_path)
    parts = [read_matrix(manifest_path.parent / name)
             for name in doc["matrices"]]
    X = np.vstack(parts) if parts else np.empty((0, doc["dim"]))
    if X.shape[1] != doc["dim"]:
        raise ManifestInvalid(
            f"{manifest_path}: matrix has {X.shape[1]} columns, "
            f"manifest declares dim={doc['dim']}")
    if X.shape[0] != doc["frame_count"]:
        raise ManifestInvalid(
            f"{manifest_path}: matrices hold {X.shape[0]} frames, "
            f"manifest declares frame_count={doc['frame_count']}")
    labels = doc.get("frame_labels")
    if labels is not None and len(labels) != X.shape[0]:
        raise ManifestInvalid(
            f"{manifest_path}: {len(labels)} frame_labels for "
            f"{X.shape[0]} frames")
    return FeatureStream(frames=X, labels=labels,
                         source=doc.get("source", ""))


# --------------------------------------------------------------------------
# performance tables (CSV)

def write_performance_table(path, records: list[PerformanceRecord]) -> None:
    extra_keys = [k for k in CANONICAL_EXTRAS
                  if any(k in r.extras for r in records)]
    other = sorted({k for r in records for k in r.extras}
                   - set(CANONICAL_EXTRAS))
    extra_keys += other
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario_id", "combo_id", "platform_id", "error",
                     *extra_keys])
    for r in records:
        row = [r.scenario_id, r.combo_id, r.platform_id, repr(float(r.error))]
        row += [repr(float(r.extras[k])) if k in r.extras else ""
                for k in extra_keys]
        writer.writerow(row)
    Path(path).write_text(buf.getvalue())


def read_performance_table(path) -> list[PerformanceRecord]:
    """Parse a performance CSV; rejects duplicates and negative errors.

    Header must start with scenario_id,combo_id,platform_id,error; any
    further columns are carried opaquely as extras.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{path}: empty file") from None
        required = ["scenario_id", "combo_id", "platform_id", "error"]
        if [h.strip() for h in header[:4]] != required:
            raise MalformedRow(
                f"{path}: header must start with {','.join(required)}")
        extra_keys = [h.strip() for h in header[4:]]

        records = []
        seen: dict[tuple, int] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise MalformedRow(
                    f"{path}:{lineno}: expected {len(header)} columns, "
                    f"got {len(row)}")
            sid, cid, pid = (c.strip() for c in row[:3])
            if not sid or not cid or not pid:
                raise MalformedRow(f"{path}:{lineno}: empty id field")
            try:
                error = float(row[3])
            except ValueError:
                raise MalformedRow(
                    f"{path}:{lineno}: bad error value {row[3]!r}") from None
            if error < 0.0:
                raise NegativeError(
                    f"{path}:{lineno}: error must be >= 0, got {error}")
            key = (sid, cid, pid)
            if key in seen:
                raise DuplicateKey(
                    f"{path}:{lineno}: duplicate triple {key} "
                    f"(first seen at line {seen[key]})")
            seen[key] = lineno
            extras = {}
            for k, cell in zip(extra_keys, row[4:]):
                cell = cell.strip()
                if cell:
                    try:
                        extras[k] = float(cell)
                    except ValueError:
                        raise MalformedRow(
                            f"{path}:{lineno}: bad {k} value {cell!r}") from None
            records.append(PerformanceRecord(
                scenario_id=sid, combo_id=cid, platform_id=pid,
                error=error, extras=extras))
    return records


# --------------------------------------------------------------------------
# design profiles (JSON + matrix sidecars)

def _profile_doc(profile: DesignProfile, scenario_files) -> dict:
    cfg = profile.config
    constraints = None
    if cfg.constraints is not None:
        constraints = {
            "max_mean_error": float(cfg.constraints.max_mean_error),
            "required_fps": float(cfg.constraints.required_fps),
            "max_cost": float(cfg.constraints.max_cost),
        }
    return {
        "format_version": FORMAT_VERSION,
        "config": {
            "dim_ambient": int(cfg.dim_ambient),
            "dim_subspace": int(cfg.dim_subspace),
            "window_length": int(cfg.window_length),
            "seed": int(cfg.seed),
            "constraints": constraints,
        },
        "selected_platform": profile.selected_platform,
        "combos": [{"id": c.id, "algorithm": c.algorithm, "fps": float(c.fps),
                    "resolution": [int(v) for v in c.resolution]}
                   for c in profile.combos],
        "platforms": [{"id": p.id, "cost": float(p.cost),
                       "combo_capabilities": {k: float(v) for k, v
                                              in p.combo_capabilities.items()}}
                      for p in profile.platforms],
        "performance": [{"scenario_id": r.scenario_id, "combo_id": r.combo_id,
                         "platform_id": r.platform_id, "error": float(r.error),
                         "extras": {k: float(v) for k, v in r.extras.items()}}
                        for r in profile.performance],
        "scenarios": [{
            "scenario_id": s.scenario_id,
            "member_count": int(s.member_count),
            "labels": s.labels,
            "representative_feature": s.representative_feature.tolist(),
            "basis_file": scenario_files[s.scenario_id][0],
            "complement_file": scenario_files[s.scenario_id][1],
        } for s in profile.scenarios],
    }


def write_profile(path, profile: DesignProfile) -> None:
    path = Path(path)
    stem = path.stem
    scenario_files = {}
    for s in profile.scenarios:
        basis_file = f"{stem}.{s.scenario_id}.basis.mat"
        comp_file = f"{stem}.{s.scenario_id}.complement.mat"
        write_matrix(path.parent / basis_file, s.subspace.basis)
        write_matrix(path.parent / comp_file, s.subspace.complement)
        scenario_files[s.scenario_id] = (basis_file, comp_file)
    path.write_text(_canonical_json(_profile_doc(profile, scenario_files)))


def read_profile(path) -> DesignProfile:
    path = Path(path)
    doc = json.loads(path.read_text())
    _check_version(doc, path)
    cfg = doc["config"]
    constraints = None
    if cfg.get("constraints") is not None:
        c = cfg["constraints"]
        constraints = SelectionConstraints(
            max_mean_error=c["max_mean_error"],
            required_fps=c["required_fps"], max_cost=c["max_cost"])
    config = ProfileConfig(
        dim_ambient=cfg["dim_ambient"], dim_subspace=cfg["dim_subspace"],
        window_length=cfg["window_length"], seed=cfg["seed"],
        constraints=constraints)
    combos = [AlgoParamCombo(id=c["id"], algorithm=c["algorithm"],
                             fps=c["fps"], resolution=tuple(c["resolution"]))
              for c in doc["combos"]]
    platforms = [PlatformSpec(id=p["id"], cost=p["cost"],
                              combo_capabilities=dict(p["combo_capabilities"]))
                 for p in doc["platforms"]]
    performance = [PerformanceRecord(
        scenario_id=r["scenario_id"], combo_id=r["combo_id"],
        platform_id=r["platform_id"], error=r["error"],
        extras=dict(r.get("extras", {}))) for r in doc["performance"]]
    scenarios = []
    for s in doc["scenarios"]:
        basis = read_matrix(path.parent / s["basis_file"])
        comp = read_matrix(path.parent / s["complement_file"])
        subspace = SubspaceBasis(basis=basis, complement=comp)
        subspace.validate(tol=1e-8)
        scenarios.append(ScenarioProfile(
            scenario_id=s["scenario_id"],
            representative_feature=np.asarray(s["representative_feature"]),
            subspace=subspace, member_count=s["member_count"],
            labels=dict(s["labels"])))
    return DesignProfile(scenarios=scenarios, combos=combos,
                         platforms=platforms, performance=performance,
                         selected_platform=doc.get("selected_platform"),
                         config=config)


def profile_digest(profile: DesignProfile) -> str:
    """Content hash of a profile, independent of where its files live."""
    files = {}
    for s in profile.scenarios:
        bh = hashlib.sha256(
            np.ascontiguousarray(s.subspace.basis, dtype="<f8")
            .tobytes()).hexdigest()
        ch = hashlib.sha256(
            np.ascontiguousarray(s.subspace.complement, dtype="<f8")
            .tobytes()).hexdigest()
        files[s.scenario_id] = (bh, ch)
    doc = _profile_doc(profile, files)
    return hashlib.sha256(_canonical_json(doc).encode()).hexdigest()


# --------------------------------------------------------------------------
# combo/platform capability files (Table-II-shaped)

def write_platforms(path, combos: list[AlgoParamCombo],
                    platforms: list[PlatformSpec]) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "combos": [{"id": c.id, "algorithm": c.algorithm, "fps": float(c.fps),
                    "resolution": [int(v) for v in c.resolution]}
                   for c in combos],
        "platforms": [{"id": p.id, "cost": float(p.cost),
                       "combo_capabilities": {k: float(v) for k, v
                                              in p.combo_capabilities.items()}}
                      for p in platforms],
    }
    Path(path).write_text(_canonical_json(doc))


def read_platforms(path) -> tuple[list[AlgoParamCombo], list[PlatformSpec]]:
    doc = json.loads(Path(path).read_text())
    _check_version(doc, path)
    combos = [AlgoParamCombo(id=c["id"], algorithm=c["algorithm"],
                             fps=c["fps"], resolution=tuple(c["resolution"]))
              for c in doc["combos"]]
    platforms = [PlatformSpec(id=p["id"], cost=p["cost"],
                              combo_capabilities=dict(p["combo_capabilities"]))
                 for p in doc["platforms"]]
    return combos, platforms


# --------------------------------------------------------------------------
# selection traces (JSON lines + CSV projection)

def write_trace(path, trace) -> None:
    lines = [json.dumps({
        "format_version": FORMAT_VERSION,
        "kind": "adasel-trace",
        "profile_reference": trace.profile_reference,
    }, sort_keys=True)]
    for d, ms in zip(trace.decisions, trace.timing_ms):
        lines.append(json.dumps({
            "window_id": d.window_id,
            "matched_scenario_id": d.matched_scenario_id,
            "similarity": float(d.similarity),
            "all_similarities": [float(v) for v in d.all_similarities],
            "chosen_combo_id": d.chosen_combo_id,
            "platform_id": d.platform_id,
            "elapsed_ms": float(ms),
        }, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path):
    from .runtime import SelectionDecision, SelectionTrace

    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MalformedRow(f"{path}: empty trace")
    header = json.loads(lines[0])
    _check_version(header, path)
    decisions = []
    timing_ms = []
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        decisions.append(SelectionDecision(
            window_id=rec["window_id"],
            matched_scenario_id=rec["matched_scenario_id"],
            similarity=rec["similarity"],
            all_similarities=np.asarray(rec["all_similarities"]),
            chosen_combo_id=rec["chosen_combo_id"],
            platform_id=rec["platform_id"]))
        timing_ms.append(rec["elapsed_ms"])
    return SelectionTrace(decisions=decisions,
                          profile_reference=header["profile_reference"],
                          timing_ms=timing_ms)


def write_trace_csv(path, trace) -> None:
    """Plot-friendly projection: one row per window decision."""
    lines = ["window_id,combo_id,similarity"]
    lines += [f"{d.window_id},{d.chosen_combo_id},{repr(float(d.similarity))}"
              for d in trace.decisions]
    Path(path).write_text("\n".join(lines) + "\n")
