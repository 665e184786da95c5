"""File formats: ranking lists, labels, parameters, traces, manifests.

Every writer here is deterministic given its inputs (no timestamps, no
machine identifiers, floats serialized via repr) so that a rerun with the
same seed produces byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .dpm import ChainConfig, SampleTrace, Snapshot
from .errors import RankingFormatError
from .model import GmParams
from .rankings import Permutation, TopTRanking

__all__ = [
    "read_rankings",
    "write_rankings",
    "read_items",
    "write_items",
    "read_labels",
    "write_labels",
    "read_params",
    "write_params",
    "read_trace",
    "write_trace",
    "write_summary_csv",
    "write_manifest",
    "read_manifest",
    "file_sha256",
]


def _jsonable(obj):
    # numpy scalars and arrays sneak into configs; keep json.dumps happy
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")

_MAX_DIAGNOSTICS = 20


def _fail(problems: list[str]):
    shown = problems[:_MAX_DIAGNOSTICS]
    if len(problems) > len(shown):
        shown.append(f"... and {len(problems) - len(shown)} more")
    raise RankingFormatError("\n".join(shown))


def read_rankings(
    path, items: list[str] | None = None, declared_n: int | None = None
) -> tuple[list[TopTRanking], list[str], int]:
    """Parse a rankings file into (rankings, item names, n).

    One ranking per line, best item first, whitespace-separated tokens.
    A first line of the form ``#n=<count>`` declares the item universe
    size; other ``#`` lines are comments.  Without a declaration, n is
    the number of distinct tokens in the file.  A line listing all n
    items is truncated to its first n-1 entries, which carry the same
    information.  When ``items`` is given the token -> index mapping is
    fixed in advance; otherwise tokens are indexed in order of first
    appearance.  All malformed lines are reported together, as
    path:lineno: problem.
    """
    path = Path(path)
    text = path.read_text().splitlines()
    problems: list[str] = []
    n = declared_n
    if text and text[0].startswith("#n="):
        try:
            n = int(text[0][3:])
        except ValueError:
            _fail([f"{path}:1: bad item count {text[0][3:]!r}"])
        if n is not None and n < 2:
            _fail([f"{path}:1: need at least two items, got n={n}"])

    fixed = items is not None
    if fixed and n is not None and len(items) > n:
        raise ValueError("item dictionary larger than declared n")
    names: list[str] = list(items) if fixed else []
    index = {tok: i for i, tok in enumerate(names)}
    rows: list[tuple[int, list[int]]] = []
    for lineno, line in enumerate(text, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(set(tokens)) != len(tokens):
            problems.append(f"{path}:{lineno}: repeated item in ranking")
            continue
        row = []
        ok = True
        for tok in tokens:
            if tok not in index:
                if fixed:
                    problems.append(f"{path}:{lineno}: unknown item {tok!r}")
                    ok = False
                    break
                if n is not None and len(names) == n:
                    problems.append(
                        f"{path}:{lineno}: item {tok!r} exceeds declared n={n}")
                    ok = False
                    break
                index[tok] = len(names)
                names.append(tok)
            row.append(index[tok])
        if ok:
            rows.append((lineno, row))
    if problems:
        _fail(problems)
    if not rows:
        _fail([f"{path}:1: no rankings found"])

    if n is None:
        n = len(names)
    if n < 2:
        _fail([f"{path}:1: need at least two items, got n={n}"])
    rankings = []
    for lineno, row in rows:
        if len(row) > n:
            problems.append(
                f"{path}:{lineno}: ranking lists {len(row)} items but n={n}")
            continue
        if len(row) == n:
            row = row[:-1]  # full ranking, the last entry is implied
        rankings.append(TopTRanking(np.asarray(row, dtype=np.int64), n))
    if problems:
        _fail(problems)
    return rankings, names, n


def write_rankings(path, rankings: list[TopTRanking], names: list[str], n: int):
    lines = [f"#n={n}"]
    for pi in rankings:
        lines.append(" ".join(names[i] for i in pi.items))
    Path(path).write_text("\n".join(lines) + "\n")


def write_items(path, names: list[str], n: int):
    Path(path).write_text(
        json.dumps({"n": n, "items": list(names)}, indent=2) + "\n")


def read_items(path) -> tuple[list[str], int]:
    blob = json.loads(Path(path).read_text())
    return list(blob["items"]), int(blob["n"])


def write_labels(path, labels):
    Path(path).write_text("".join(f"{int(x)}\n" for x in labels))


def read_labels(path) -> np.ndarray:
    out = []
    path = Path(path)
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise RankingFormatError(
                f"{path}:{lineno}: label {line.strip()!r} is not an integer")
    if not out:
        raise RankingFormatError(f"{path}:1: no labels found")
    return np.asarray(out, dtype=np.int64)


def write_params(path, params: list[GmParams]):
    rows = [{"order": [int(x) for x in p.sigma.order],
             "theta": [float(x) for x in np.atleast_1d(p.theta)]}
            for p in params]
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")


def read_params(path) -> list[GmParams]:
    rows = json.loads(Path(path).read_text())
    return [GmParams(Permutation(np.asarray(r["order"], dtype=np.int64)),
                     np.asarray(r["theta"], dtype=np.float64))
            for r in rows]


def write_trace(trace: SampleTrace, path):
    """Serialize a trace as JSONL: a metadata line, then one snapshot per
    line.

    Cluster rows are label-sorted and relabeled densely; assignments are
    remapped to match.  Wall-clock timings are deliberately dropped so two
    runs with equal seeds serialize to equal bytes.
    """
    head = {"sampler": trace.sampler_kind, "n": trace.n, "t_max": trace.t_max,
            "n_points": trace.n_points, "seed": trace.seed}
    lines = [json.dumps(head, sort_keys=True)]
    for snap in trace.snapshots:
        remap = {lab: row for row, (lab, _, _, _) in enumerate(snap.clusters)}
        body = {
            "sweep": snap.sweep,
            "sizes": [int(sz) for _, _, _, sz in snap.clusters],
            "centers": [[int(x) for x in order] for _, order, _, _ in snap.clusters],
            "thetas": [[float(x) for x in theta] for _, _, theta, _ in snap.clusters],
            "assignments": [remap[int(a)] for a in snap.assignments],
        }
        lines.append(json.dumps(body, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> SampleTrace:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise RankingFormatError(f"{path}:1: empty trace file")
    try:
        head = json.loads(lines[0])
        trace = SampleTrace(head["sampler"], int(head["n"]), int(head["t_max"]),
                            int(head["n_points"]), int(head["seed"]))
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            body = json.loads(line)
            clusters = [
                (row,
                 np.asarray(order, dtype=np.int64),
                 np.asarray(theta, dtype=np.float64),
                 int(size))
                for row, (order, theta, size) in enumerate(
                    zip(body["centers"], body["thetas"], body["sizes"]))
            ]
            trace.snapshots.append(Snapshot(
                int(body["sweep"]),
                np.asarray(body["assignments"], dtype=np.int64),
                clusters, 0.0))
    except (KeyError, ValueError, TypeError) as exc:
        raise RankingFormatError(f"{path}: not a valid trace file: {exc}")
    return trace


def write_summary_csv(trace: SampleTrace, path):
    """Per-recorded-sweep cluster count and largest-cluster share."""
    lines = ["sweep,n_clusters,largest_fraction"]
    for snap in trace.snapshots:
        sizes = [sz for _, _, _, sz in snap.clusters]
        frac = max(sizes) / trace.n_points if sizes else 0.0
        lines.append(f"{snap.sweep},{len(sizes)},{frac!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, cfg: ChainConfig, dataset_path, chain_seeds: list[int],
                   version: str):
    """Record everything needed to reproduce a run bit-exactly."""
    blob = {
        "version": version,
        "dataset": Path(dataset_path).name,
        "dataset_sha256": file_sha256(dataset_path),
        "chain_seeds": [int(s) for s in chain_seeds],
        "config": asdict(cfg),
    }
    Path(path).write_text(
        json.dumps(blob, sort_keys=True, indent=2, default=_jsonable) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
