"""``ctxcollect`` command line: validate | collect | evaluate | leaderboard | convert.

Exit codes: 0 success, 1 findings (diagnostics or too many failed requests),
2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ctxcollect import __version__
from ctxcollect.collect import (
    STRATEGY_NAMES,
    CollectorConfig,
    collect_contexts,
    dump_contexts,
    read_contexts,
    write_contexts,
)
from ctxcollect.dataset import (
    LANGUAGES,
    POINTS_FILE,
    SNAPSHOT_DIR,
    CompletionPoint,
    DatasetError,
    read_archive,
    check_relative_path,
    dump_points,
    load_dataset,
    validate_dataset,
)
from ctxcollect.harness import (
    DEFAULT_PROFILES,
    LEADERBOARD_FORMATS,
    ConstantBackend,
    EchoGroundTruthBackend,
    HttpBackend,
    ModelProfile,
    OfflineBackend,
    RunReport,
    VerbatimCopyBackend,
    evaluate_run,
    leaderboard,
)

log = logging.getLogger("ctxcollect")

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE = 0, 1, 2
BACKENDS = ("http", "offline", "constant", "echo", "verbatim")
FAILURE_LIMIT = 0.5
EVALUATE_KEYS = {"backend", "completions", "constant", "timeout", "retries", "backoff"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    dataset_root: Path | None = None
    language: str = "python"
    strategy: str | None = None
    collector: dict = field(default_factory=dict)
    profiles: list[ModelProfile] = field(default_factory=lambda: list(DEFAULT_PROFILES))
    evaluate: dict = field(default_factory=dict)
    out: Path | None = None
    parallelism: int = 8
    rng_seed: int | None = None

    def __post_init__(self):
        if self.parallelism < 1:
            raise UsageError("--parallelism must be >= 1")

    def collector_config(self) -> CollectorConfig:
        values = dict(self.collector)
        if self.strategy is not None:
            values["strategy"] = self.strategy
        if self.rng_seed is not None:
            values["rng_seed"] = self.rng_seed
        strategy = values.get("strategy", "empty")
        if strategy not in STRATEGY_NAMES:
            raise UsageError(f"unknown strategy {strategy!r}; valid strategies: {', '.join(STRATEGY_NAMES)}")
        try:
            return CollectorConfig.from_mapping(values)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad collector config: {exc}") from exc


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(data) - {"collector", "profiles", "evaluate"})
    if unknown:
        raise UsageError(f"unknown config section(s): {', '.join(unknown)}")
    bad = sorted(set(data.get("evaluate", {})) - EVALUATE_KEYS)
    if bad:
        raise UsageError(f"unknown evaluate option(s): {', '.join(bad)}")
    return data


def build_run_config(args: argparse.Namespace) -> RunConfig:
    data = _read_config(getattr(args, "config", None))
    profiles = list(DEFAULT_PROFILES)
    if "profiles" in data:
        try:
            profiles = [ModelProfile.from_mapping(p) for p in data["profiles"]]
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad profile config: {exc}") from exc
    return RunConfig(
        dataset_root=Path(args.dataset) if getattr(args, "dataset", None) else None,
        language=getattr(args, "language", "python"),
        strategy=getattr(args, "strategy", None),
        collector=dict(data.get("collector", {})),
        profiles=profiles,
        evaluate=dict(data.get("evaluate", {})),
        out=Path(args.out) if getattr(args, "out", None) else None,
        parallelism=getattr(args, "parallelism", 8),
        rng_seed=getattr(args, "seed", None),
    )


def _load(cfg: RunConfig, strict: bool = True):
    try:
        return load_dataset(cfg.dataset_root, cfg.language, strict=strict, workers=cfg.parallelism)
    except DatasetError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    dataset = _load(cfg, strict=False)
    diagnostics = validate_dataset(dataset) + list(dataset.warnings)
    for line in diagnostics:
        print(line)
    print(f"{len(dataset.points)} points, {len(dataset.snapshots)} snapshots, {len(diagnostics)} diagnostics", file=sys.stderr)
    return EXIT_FINDINGS if diagnostics else EXIT_OK


def cmd_collect(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    collector = cfg.collector_config()
    dataset = _load(cfg)
    contexts = collect_contexts(dataset, collector, cfg.parallelism)
    if cfg.out is None:
        sys.stdout.write(dump_contexts(contexts))
    else:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        write_contexts(contexts, cfg.out)
    return EXIT_OK


def _backends(cfg: RunConfig, args: argparse.Namespace):
    kind = args.backend or cfg.evaluate.get("backend", "http")
    if kind not in BACKENDS:
        raise UsageError(f"unknown backend {kind!r}; choose from {', '.join(BACKENDS)}")
    if kind == "offline":
        source = args.completions or cfg.evaluate.get("completions")
        if not source:
            raise UsageError("--backend offline needs --completions FILE")
        try:
            return kind, OfflineBackend.from_jsonl(source)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    if kind == "constant":
        return kind, ConstantBackend(cfg.evaluate.get("constant", ""))
    if kind == "echo":
        return kind, EchoGroundTruthBackend()
    if kind == "verbatim":
        return kind, VerbatimCopyBackend()
    http = HttpBackend(
        timeout=float(cfg.evaluate.get("timeout", 60.0)),
        retries=int(cfg.evaluate.get("retries", 3)),
        backoff=float(cfg.evaluate.get("backoff", 0.5)),
    )
    return kind, {p.name: http for p in cfg.profiles}


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    dataset = _load(cfg)
    try:
        contexts = read_contexts(args.contexts)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read contexts: {exc}") from exc
    kind, backends = _backends(cfg, args)
    run_id = args.run_id or Path(args.contexts).stem
    try:
        report = evaluate_run(
            dataset,
            contexts,
            cfg.profiles,
            backends,
            parallelism=cfg.parallelism,
            run_id=run_id,
            config={"backend": kind, "language": cfg.language, "profiles": [p.to_mapping() for p in cfg.profiles]},
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for warning in report.warnings:
        log.warning(warning)
    _emit(report.to_json(), cfg.out)
    print(f"{run_id}: overall chrF {report.overall:.4f} ({report.failures}/{report.requests} failed)", file=sys.stderr)
    if report.requests and report.failures / report.requests > FAILURE_LIMIT:
        return EXIT_FINDINGS
    return EXIT_OK


def cmd_leaderboard(args: argparse.Namespace) -> int:
    reports = []
    for path in args.reports:
        try:
            reports.append(RunReport.from_json(Path(path).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read report {path}: {exc}") from exc
    try:
        table = leaderboard(reports, args.format)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(table, Path(args.out) if args.out else None)
    return EXIT_OK


def _strip_wrapper(files: dict[str, str]) -> dict[str, str]:
    tops = {path.split("/", 1)[0] for path in files}
    if len(tops) == 1 and all("/" in path for path in files):
        return {path.split("/", 1)[1]: text for path, text in files.items()}
    return files


def convert_record(record: dict, index: int, language: str) -> CompletionPoint:
    repo = str(record.get("repo", "repo")).replace("/", "__")
    path = record["path"]
    modified = record.get("modified_files", record.get("modified", [])) or []
    truth = record.get("ground_truth", record.get("middle"))
    return CompletionPoint(
        point_id=str(record.get("id", f"{language}-{index:05d}")),
        repo_id=repo,
        revision=str(record["revision"]),
        file_path=path,
        prefix=record["prefix"],
        suffix=record["suffix"],
        ground_truth=truth or None,
        co_changed_files=tuple(p for p in dict.fromkeys(modified) if p != path),
    )


def cmd_convert(args: argparse.Namespace) -> int:
    """Turn a points JSON-lines file plus per-revision archives into a dataset root."""
    source = Path(args.source)
    archives = Path(args.archives) if args.archives else source.parent
    out = Path(args.out)
    points = []
    try:
        lines = source.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read {source}: {exc}") from exc
    done: set[tuple[str, str]] = set()
    for index, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            point = convert_record(record, index, args.language)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{source}:{index + 1}: cannot convert record ({exc})") from exc
        points.append(point)
        key = point.snapshot_key
        if key in done:
            continue
        done.add(key)
        for part in key:
            if check_relative_path(part):
                raise UsageError(f"{source}:{index + 1}: unsafe repository or revision name {part!r}")
        name = record.get("archive") or f"{point.repo_id}-{point.revision}.zip"
        archive = archives / name
        if not archive.is_file():
            raise UsageError(f"{source}:{index + 1}: archive {archive} not found")
        warnings: list[str] = []
        files = _strip_wrapper(read_archive(archive, f"{point.repo_id}@{point.revision}", warnings))
        for w in warnings:
            log.warning(w)
        target = out / SNAPSHOT_DIR / point.repo_id / point.revision
        for rel, text in files.items():
            if check_relative_path(rel):
                log.warning("%s: skipping unsafe member %s", archive, rel)
                continue
            dest = target / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(text, encoding="utf-8", newline="")
    out.mkdir(parents=True, exist_ok=True)
    (out / POINTS_FILE).write_text(dump_points(points), encoding="utf-8", newline="\n")
    print(f"converted {len(points)} points, {len(done)} snapshots into {out}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="dataset root (points.jsonl + snapshots/)")
    p.add_argument("--language", choices=LANGUAGES, default="python")
    p.add_argument("--config", help="JSON config with 'collector', 'profiles' and 'evaluate' sections")
    p.add_argument("--parallelism", type=int, default=8)
    p.add_argument("--seed", type=int, default=None, help="overrides collector rng_seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxcollect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check points against their snapshots")
    _dataset_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("collect", help="write a contexts file for every point")
    _dataset_flags(p)
    p.add_argument("--strategy", help=f"one of: {', '.join(STRATEGY_NAMES)}")
    p.add_argument("--out", help="contexts JSON-lines file (default: stdout)")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("evaluate", help="complete and score a contexts file")
    _dataset_flags(p)
    p.add_argument("--contexts", required=True)
    p.add_argument("--backend", choices=BACKENDS, default=None)
    p.add_argument("--completions", help="JSON-lines {id, model, completion} for --backend offline")
    p.add_argument("--run-id", default=None)
    p.add_argument("--out", help="report JSON (default: stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("leaderboard", help="rank report files")
    p.add_argument("reports", nargs="+")
    p.add_argument("--format", choices=LEADERBOARD_FORMATS, default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_leaderboard)

    p = sub.add_parser("convert", help="build a dataset root from points JSON-lines and archives")
    p.add_argument("--source", required=True, help="points JSON-lines file")
    p.add_argument("--archives", help="directory holding <repo>-<revision>.zip archives")
    p.add_argument("--language", choices=LANGUAGES, default="python")
    p.add_argument("--out", required=True, help="dataset root to create")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
