"""Completion points and repository snapshots on disk.

Layout of a dataset root::

    <root>/points.jsonl                      one completion point per line
    <root>/snapshots/<repo>/<revision>/...   plain file tree, or
    <root>/snapshots/<repo>/<revision>.zip   (also .tar, .tar.gz, .tgz)

The snapshot is the repository state *before* the completion was written.
"""

from __future__ import annotations

import json
import logging
import tarfile
import zipfile
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

LANGUAGES = ("python", "kotlin")
POINTS_FILE = "points.jsonl"
SNAPSHOT_DIR = "snapshots"
ARCHIVE_SUFFIXES = (".zip", ".tar.gz", ".tgz", ".tar")

# on-disk field name -> CompletionPoint attribute, in serialization order
_FIELDS = (
    ("id", "point_id"),
    ("repo", "repo_id"),
    ("revision", "revision"),
    ("path", "file_path"),
    ("prefix", "prefix"),
    ("suffix", "suffix"),
    ("ground_truth", "ground_truth"),
    ("modified_files", "co_changed_files"),
)
_REQUIRED = ("id", "repo", "revision", "path", "prefix", "suffix")


class DatasetError(Exception):
    """Raised when a dataset cannot be loaded."""


def check_relative_path(path: str) -> str | None:
    """Return a reason string if ``path`` is not a clean relative path."""
    if not path:
        return "empty path"
    if path.startswith("/") or "\\" in path or (len(path) > 1 and path[1] == ":"):
        return "not a relative '/'-separated path"
    parts = path.split("/")
    if any(p in ("", ".", "..") for p in parts):
        return "contains empty, '.' or '..' segment"
    return None


class RepoSnapshot:
    """Immutable map of relative paths to file text for one repository revision."""

    def __init__(self, repo_id: str, revision: str, files: Mapping[str, str]):
        for path in files:
            reason = check_relative_path(path)
            if reason:
                raise DatasetError(f"{repo_id}@{revision}: bad path {path!r}: {reason}")
        self.repo_id = repo_id
        self.revision = revision
        self._files = MappingProxyType(dict(sorted(files.items())))
        # derived, content-determined data (parsed definitions, package maps)
        self.memo: dict = {}

    @property
    def files(self) -> Mapping[str, str]:
        return self._files

    @property
    def key(self) -> tuple[str, str]:
        return (self.repo_id, self.revision)

    def __contains__(self, path: object) -> bool:
        return path in self._files

    def __len__(self) -> int:
        return len(self._files)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RepoSnapshot):
            return NotImplemented
        return self.key == other.key and dict(self._files) == dict(other._files)

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"RepoSnapshot({self.repo_id!r}, {self.revision!r}, {len(self._files)} files)"

    def read(self, path: str) -> str:
        try:
            return self._files[path]
        except KeyError:
            raise KeyError(f"{path!r} not in snapshot {self.repo_id}@{self.revision}") from None


@dataclass(frozen=True)
class CompletionPoint:
    point_id: str
    repo_id: str
    revision: str
    file_path: str
    prefix: str
    suffix: str
    ground_truth: str | None = None
    co_changed_files: tuple[str, ...] = ()

    @property
    def snapshot_key(self) -> tuple[str, str]:
        return (self.repo_id, self.revision)

    @classmethod
    def from_record(cls, record: Mapping) -> CompletionPoint:
        missing = [k for k in _REQUIRED if k not in record]
        if missing:
            raise ValueError(f"missing field(s): {', '.join(missing)}")
        kwargs = {}
        for key, attr in _FIELDS:
            if key in record:
                kwargs[attr] = record[key]
        for key in ("id", "repo", "revision", "path", "prefix", "suffix"):
            if not isinstance(record[key], str):
                raise ValueError(f"field {key!r} must be a string")
        gt = record.get("ground_truth")
        if gt is not None and not isinstance(gt, str):
            raise ValueError("field 'ground_truth' must be a string or null")
        modified = record.get("modified_files") or []
        if not isinstance(modified, list) or not all(isinstance(p, str) for p in modified):
            raise ValueError("field 'modified_files' must be a list of strings")
        kwargs["co_changed_files"] = tuple(modified)
        return cls(**kwargs)

    def to_record(self) -> dict:
        record = {key: getattr(self, attr) for key, attr in _FIELDS}
        record["modified_files"] = list(self.co_changed_files)
        return record


def dump_point(point: CompletionPoint) -> str:
    return json.dumps(point.to_record(), ensure_ascii=False)


def dump_points(points: Iterable[CompletionPoint]) -> str:
    return "".join(dump_point(p) + "\n" for p in points)


def point_invariant_errors(point: CompletionPoint) -> list[str]:
    errors = []
    if point.ground_truth is not None and point.ground_truth == "":
        errors.append("ground_truth is present but empty")
    counts = Counter(point.co_changed_files)
    for path, n in counts.items():
        if n > 1:
            errors.append(f"duplicate path in modified_files: {path}")
    if point.file_path in counts:
        errors.append(f"modified_files contains the completion file itself: {point.file_path}")
    for path in (point.file_path, *counts):
        reason = check_relative_path(path)
        if reason:
            errors.append(f"bad path {path!r}: {reason}")
    return errors


@dataclass
class Dataset:
    points: list[CompletionPoint]
    snapshots: dict[tuple[str, str], RepoSnapshot]
    language: str
    warnings: list[str] = field(default_factory=list)

    def snapshot_for(self, point: CompletionPoint) -> RepoSnapshot:
        return self.snapshots[point.snapshot_key]

    def point(self, point_id: str) -> CompletionPoint:
        for p in self.points:
            if p.point_id == point_id:
                return p
        raise KeyError(point_id)


@dataclass(frozen=True)
class DatasetTotals:
    repositories: int
    revisions: int
    points: int


def totals(datasets: Iterable[Dataset]) -> DatasetTotals:
    """Count distinct repositories, revisions and points over one or more datasets."""
    repos: set[tuple[str, str]] = set()
    revisions: set[tuple[str, str, str]] = set()
    n_points = 0
    for ds in datasets:
        for point in ds.points:
            repos.add((ds.language, point.repo_id))
            revisions.add((ds.language, point.repo_id, point.revision))
        n_points += len(ds.points)
    return DatasetTotals(len(repos), len(revisions), n_points)


def _decode(raw: bytes, where: str, warnings: list[str]) -> str | None:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        warnings.append(f"{where}: not valid UTF-8, skipped")
        return None


def _read_tree(base: Path, label: str, warnings: list[str]) -> dict[str, str]:
    files = {}
    for path in sorted(base.rglob("*")):
        if path.is_symlink() or not path.is_file():
            continue
        rel = path.relative_to(base).as_posix()
        text = _decode(path.read_bytes(), f"{label}: {rel}", warnings)
        if text is not None:
            files[rel] = text
    return files


def _member_path(name: str) -> str:
    while name.startswith("./"):
        name = name[2:]
    return name.lstrip("/")


def read_archive(archive: Path, label: str, warnings: list[str]) -> dict[str, str]:
    files = {}
    if archive.name.endswith(".zip"):
        with zipfile.ZipFile(archive) as zf:
            for info in sorted(zf.infolist(), key=lambda i: i.filename):
                if info.is_dir():
                    continue
                rel = _member_path(info.filename)
                text = _decode(zf.read(info), f"{label}: {rel}", warnings)
                if text is not None:
                    files[rel] = text
    else:
        with tarfile.open(archive) as tf:
            for member in sorted(tf.getmembers(), key=lambda m: m.name):
                if not member.isfile():
                    continue
                rel = _member_path(member.name)
                handle = tf.extractfile(member)
                if handle is None:
                    continue
                text = _decode(handle.read(), f"{label}: {rel}", warnings)
                if text is not None:
                    files[rel] = text
    return files


def snapshot_location(root: Path, repo_id: str, revision: str) -> Path | None:
    base = root / SNAPSHOT_DIR / repo_id
    tree = base / revision
    if tree.is_dir():
        return tree
    for suffix in ARCHIVE_SUFFIXES:
        archive = base / (revision + suffix)
        if archive.is_file():
            return archive
    return None


def load_snapshot(root: Path, repo_id: str, revision: str) -> tuple[RepoSnapshot, list[str]]:
    for part in (repo_id, revision):
        reason = check_relative_path(part)
        if reason:
            raise DatasetError(f"bad snapshot key {part!r}: {reason}")
    location = snapshot_location(root, repo_id, revision)
    if location is None:
        raise FileNotFoundError(f"{repo_id}@{revision}")
    warnings: list[str] = []
    label = f"{repo_id}@{revision}"
    if location.is_dir():
        files = _read_tree(location, label, warnings)
    else:
        files = read_archive(location, label, warnings)
    return RepoSnapshot(repo_id, revision, files), warnings


def read_points(path: Path) -> list[CompletionPoint]:
    points = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            try:
                points.append(CompletionPoint.from_record(record))
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    return points


def load_dataset(root: str | Path, language: str, *, strict: bool = True, workers: int = 4) -> Dataset:
    """Load points and their snapshots from ``root``.

    With ``strict`` (the default) any point violating its invariants is an
    error; ``strict=False`` keeps such points so ``validate_dataset`` can
    report them.
    """
    if language not in LANGUAGES:
        raise DatasetError(f"unknown language {language!r}; expected one of {LANGUAGES}")
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    points_path = root / POINTS_FILE
    if not points_path.is_file():
        raise DatasetError(f"{points_path} not found")
    points = read_points(points_path)

    if strict:
        seen: set[str] = set()
        for point in points:
            if point.point_id in seen:
                raise DatasetError(f"duplicate point id {point.point_id!r}")
            seen.add(point.point_id)
            errors = point_invariant_errors(point)
            if errors:
                raise DatasetError(f"point {point.point_id!r}: {errors[0]}")

    keys: list[tuple[str, str]] = []
    owner: dict[tuple[str, str], str] = {}
    for point in points:
        if point.snapshot_key not in owner:
            owner[point.snapshot_key] = point.point_id
            keys.append(point.snapshot_key)

    def _load(key):
        try:
            return load_snapshot(root, *key)
        except FileNotFoundError:
            raise DatasetError(
                f"point {owner[key]!r}: snapshot {key[0]}@{key[1]} not found under {root / SNAPSHOT_DIR}"
            ) from None

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        loaded = list(pool.map(_load, keys))

    snapshots = {}
    warnings: list[str] = []
    for key, (snapshot, snap_warnings) in zip(keys, loaded):
        snapshots[key] = snapshot
        warnings.extend(snap_warnings)
    for message in warnings:
        log.warning(message)
    return Dataset(points=points, snapshots=snapshots, language=language, warnings=warnings)


def _is_valid_text(text: object) -> bool:
    if not isinstance(text, str):
        return False
    try:
        text.encode("utf-8")
    except UnicodeEncodeError:
        return False
    return True


def validate_point(point: CompletionPoint, snapshot: RepoSnapshot) -> list[str]:
    """Diagnostics for one point against its snapshot; empty means clean."""
    tag = point.point_id
    diagnostics = [f"{tag}: {msg}" for msg in point_invariant_errors(point)]
    if point.snapshot_key != snapshot.key:
        diagnostics.append(f"{tag}: snapshot {snapshot.repo_id}@{snapshot.revision} does not match point")
    for name in ("prefix", "suffix"):
        if not _is_valid_text(getattr(point, name)):
            diagnostics.append(f"{tag}: {name} is not valid text")
    for path in dict.fromkeys(point.co_changed_files):
        if path not in snapshot and path != point.file_path:
            diagnostics.append(f"{tag}: modified file missing from snapshot: {path}")
    return diagnostics


def validate_dataset(dataset: Dataset) -> list[str]:
    diagnostics = []
    counts = Counter(p.point_id for p in dataset.points)
    for point_id, n in counts.items():
        if n > 1:
            diagnostics.append(f"{point_id}: point id used {n} times")
    for point in dataset.points:
        diagnostics.extend(validate_point(point, dataset.snapshot_for(point)))
    return diagnostics
