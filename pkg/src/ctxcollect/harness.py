"""FIM prompt rendering, completion backends, scoring runs and leaderboards."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from ctxcollect.collect import SEPARATOR
from ctxcollect.dataset import CompletionPoint, Dataset
from ctxcollect.metric import DEFAULT_PARAMS, ChrfParams, aggregate_scores, chrf
from ctxcollect.textutil import CHARS_PER_UNIT, split_lines, units

log = logging.getLogger(__name__)

ORDERS = ("context_first_psm", "context_first_spm")
TIE_THRESHOLD = 0.0005
DEFAULT_TIMEOUT = 60.0
DEFAULT_RETRIES = 3
DEFAULT_PARALLELISM = 8


class CompletionError(Exception):
    pass


@dataclass(frozen=True)
class ModelProfile:
    name: str
    fim_prefix_token: str
    fim_suffix_token: str
    fim_middle_token: str
    file_sep_token: str
    context_budget_units: int = 8000
    order: str = "context_first_psm"
    endpoint: str | None = None
    max_new_units: int = 128
    api_key_env: str | None = None

    def __post_init__(self):
        tokens = self.tokens
        if not all(tokens):
            raise ValueError(f"profile {self.name!r}: special tokens must be non-empty")
        if len(set(tokens)) != len(tokens):
            raise ValueError(f"profile {self.name!r}: special tokens must be pairwise distinct")
        if self.order not in ORDERS:
            raise ValueError(f"profile {self.name!r}: order must be one of {ORDERS}")
        if self.context_budget_units < 0 or self.max_new_units < 1:
            raise ValueError(f"profile {self.name!r}: bad budget")

    @property
    def tokens(self) -> tuple[str, str, str, str]:
        return (self.fim_prefix_token, self.fim_suffix_token, self.fim_middle_token, self.file_sep_token)

    @classmethod
    def from_mapping(cls, data: Mapping) -> ModelProfile:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown profile field(s): {', '.join(unknown)}")
        return cls(**data)

    def to_mapping(self) -> dict:
        return dataclasses.asdict(self)


# Placeholder models; real templates for hosted models are user configuration.
DEFAULT_PROFILES: tuple[ModelProfile, ...] = (
    ModelProfile("mellum-sim", "<fim_prefix>", "<fim_suffix>", "<fim_middle>", "<file_sep>"),
    ModelProfile("codestral-sim", "[PREFIX]", "[SUFFIX]", "[MIDDLE]", "[FILE]", order="context_first_spm"),
    ModelProfile("qwen-sim", "<|fim_prefix|>", "<|fim_suffix|>", "<|fim_middle|>", "<|file_sep|>"),
)


def load_profiles(path: str | Path) -> list[ModelProfile]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("profiles", [])
    return [ModelProfile.from_mapping(item) for item in data]


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------


def _head_lines_within(text: str, max_chars: int) -> str:
    kept = []
    size = 0
    for line in split_lines(text):
        if size + len(line) > max_chars:
            break
        kept.append(line)
        size += len(line)
    return "".join(kept)


def remap_separators(context: str, file_sep_token: str) -> str:
    return file_sep_token.join(context.split(SEPARATOR))


def render_prompt(
    profile: ModelProfile,
    context: str,
    prefix: str,
    suffix: str,
    warnings: list[str] | None = None,
) -> str:
    """Model-specific FIM prompt; context is the first thing sacrificed to the budget."""
    budget_chars = profile.context_budget_units * CHARS_PER_UNIT
    if units(prefix) + units(suffix) > profile.context_budget_units:
        keep_suffix = min(len(suffix), budget_chars // 2)
        keep_prefix = min(len(prefix), budget_chars - keep_suffix)
        keep_suffix = min(len(suffix), budget_chars - keep_prefix)
        prefix = prefix[len(prefix) - keep_prefix :]
        suffix = suffix[:keep_suffix]
        if warnings is not None:
            warnings.append(f"{profile.name}: prefix and suffix exceed the context budget; trimmed")
        context = ""
    room = max(0, profile.context_budget_units - units(prefix) - units(suffix)) * CHARS_PER_UNIT
    context = remap_separators(context, profile.file_sep_token)
    if len(context) > room:
        # trimmed tail-first, at a line boundary so no special token is split
        context = _head_lines_within(context, room)
    if profile.order == "context_first_spm":
        body = profile.fim_suffix_token + suffix + profile.fim_prefix_token + prefix
    else:
        body = profile.fim_prefix_token + prefix + profile.fim_suffix_token + suffix
    return context + body + profile.fim_middle_token


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompletionRequest:
    profile: ModelProfile
    prompt: str
    point: CompletionPoint
    context: str = ""


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


class ConstantBackend:
    def __init__(self, text: str = ""):
        self.text = text

    def complete(self, request: CompletionRequest) -> str:
        return self.text


class EchoGroundTruthBackend:
    """Test double that answers with the point's ground truth."""

    def complete(self, request: CompletionRequest) -> str:
        return request.point.ground_truth or ""


class VerbatimCopyBackend:
    """Returns the first context line equal to the truth's first line (ignoring indentation)."""

    def complete(self, request: CompletionRequest) -> str:
        truth = request.point.ground_truth or ""
        first = next((line.strip() for line in truth.splitlines() if line.strip()), "")
        if not first:
            return ""
        for line in request.context.splitlines():
            if line.strip() == first:
                return line
        return ""


class OfflineBackend:
    """Completions looked up by (point id, model name)."""

    def __init__(self, completions: Mapping[tuple[str, str], str]):
        self.completions = dict(completions)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> OfflineBackend:
        table = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    table[(rec["id"], rec["model"])] = rec["completion"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad completion line ({exc})") from exc
        return cls(table)

    def complete(self, request: CompletionRequest) -> str:
        key = (request.point.point_id, request.profile.name)
        try:
            return self.completions[key]
        except KeyError:
            raise CompletionError(f"no offline completion for {key[0]!r} / {key[1]!r}") from None


class CountingBackend:
    def __init__(self, inner: Backend):
        self.inner = inner
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1
        return self.inner.complete(request)


def _is_transient(exc: Exception) -> bool:
    if isinstance(exc, urllib.error.HTTPError):
        return exc.code >= 500 or exc.code == 429
    return isinstance(exc, (urllib.error.URLError, TimeoutError, ConnectionError))


def request_completion(
    profile: ModelProfile,
    prompt: str,
    *,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """POST the prompt to ``profile.endpoint``; ``timeout`` bounds the whole request including retries."""
    if not profile.endpoint:
        raise CompletionError(f"profile {profile.name!r} has no endpoint")
    body = json.dumps(
        {"model": profile.name, "prompt": prompt, "max_tokens": profile.max_new_units, "temperature": 0}
    ).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    if profile.api_key_env and os.environ.get(profile.api_key_env):
        headers["Authorization"] = f"Bearer {os.environ[profile.api_key_env]}"
    deadline = time.monotonic() + timeout
    last: Exception | None = None
    for attempt in range(retries + 1):
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            break
        req = urllib.request.Request(profile.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=remaining) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
            completion = payload["completion"]
        except (json.JSONDecodeError, KeyError, TypeError, UnicodeDecodeError) as exc:
            raise CompletionError(f"{profile.name}: malformed response ({exc})") from exc
        except Exception as exc:
            if not _is_transient(exc):
                raise CompletionError(f"{profile.name}: {exc}") from exc
            last = exc
            if attempt < retries:
                sleep(min(backoff * 2**attempt, max(0.0, deadline - time.monotonic())))
            continue
        if not isinstance(completion, str):
            raise CompletionError(f"{profile.name}: 'completion' is not a string")
        return completion
    raise CompletionError(f"{profile.name}: gave up after {retries + 1} attempts ({last})")


class HttpBackend:
    def __init__(self, timeout: float = DEFAULT_TIMEOUT, retries: int = DEFAULT_RETRIES, backoff: float = 0.5):
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def complete(self, request: CompletionRequest) -> str:
        return request_completion(
            request.profile, request.prompt, timeout=self.timeout, retries=self.retries, backoff=self.backoff
        )


# ---------------------------------------------------------------------------
# Runs and reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointResult:
    completion: str
    score: float
    error: str | None = None


@dataclass
class RunReport:
    run_id: str
    models: list[str]
    per_point: dict[str, dict[str, PointResult]]
    per_model_mean: dict[str, float]
    overall: float
    config: dict = field(default_factory=dict)
    excluded: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def requests(self) -> int:
        return sum(len(row) for row in self.per_point.values())

    @property
    def failures(self) -> int:
        return sum(1 for row in self.per_point.values() for r in row.values() if r.error is not None)

    def score_table(self) -> dict[str, dict[str, float]]:
        return {pid: {m: r.score for m, r in row.items()} for pid, row in self.per_point.items()}

    def to_dict(self) -> dict:
        """JSON form; scores appear as 4-decimal figures plus their exact values."""

        def result(r: PointResult) -> dict:
            out = {"completion": r.completion, "score": round(r.score, 4), "score_exact": r.score}
            if r.error is not None:
                out["error"] = r.error
            return out

        return {
            "run_id": self.run_id,
            "models": list(self.models),
            "overall": round(self.overall, 4),
            "overall_exact": self.overall,
            "per_model_mean": {m: round(self.per_model_mean[m], 4) for m in self.models},
            "per_model_mean_exact": {m: self.per_model_mean[m] for m in self.models},
            "per_point": {pid: {m: result(row[m]) for m in self.models} for pid, row in self.per_point.items()},
            "excluded": list(self.excluded),
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunReport:
        data = json.loads(text)
        per_point = {
            pid: {
                m: PointResult(r["completion"], float(r.get("score_exact", r["score"])), r.get("error"))
                for m, r in row.items()
            }
            for pid, row in data["per_point"].items()
        }
        means = data.get("per_model_mean_exact", data["per_model_mean"])
        return cls(
            run_id=data["run_id"],
            models=list(data["models"]),
            per_point=per_point,
            per_model_mean={m: float(v) for m, v in means.items()},
            overall=float(data.get("overall_exact", data["overall"])),
            config=data.get("config", {}),
            excluded=list(data.get("excluded", [])),
            warnings=list(data.get("warnings", [])),
        )


def evaluate_run(
    dataset: Dataset,
    contexts: Mapping[str, str],
    profiles: Sequence[ModelProfile],
    backends: Mapping[str, Backend] | Backend,
    *,
    parallelism: int = DEFAULT_PARALLELISM,
    run_id: str = "run",
    config: Mapping | None = None,
    params: ChrfParams = DEFAULT_PARAMS,
) -> RunReport:
    """Render, complete and score every (point, profile) pair.

    Failed requests score 0 and keep their error. The report only depends on
    the inputs and the backends' answers, not on scheduling.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if not profiles:
        raise ValueError("no model profiles")
    names = [p.name for p in profiles]
    if len(set(names)) != len(names):
        raise ValueError("duplicate profile names")

    warnings: list[str] = []
    excluded = sorted(p.point_id for p in dataset.points if p.ground_truth is None)
    points = sorted((p for p in dataset.points if p.ground_truth is not None), key=lambda p: p.point_id)
    if not points:
        raise ValueError("no points with ground truth to evaluate")
    for point in points:
        if point.point_id not in contexts:
            warnings.append(f"{point.point_id}: no context supplied; scored with empty context")

    def backend_for(profile: ModelProfile) -> Backend | None:
        if not isinstance(backends, Mapping):
            return backends
        if profile.name in backends:
            return backends[profile.name]
        return HttpBackend() if profile.endpoint else None

    tasks = [(point, profile) for point in points for profile in profiles]

    def run(task: tuple[CompletionPoint, ModelProfile]) -> tuple[PointResult, list[str]]:
        point, profile = task
        notes: list[str] = []
        context = contexts.get(point.point_id, "")
        prompt = render_prompt(profile, context, point.prefix, point.suffix, notes)
        notes = [f"{point.point_id}: {n}" for n in notes]
        backend = backend_for(profile)
        try:
            if backend is None:
                raise CompletionError(f"no backend or endpoint for model {profile.name!r}")
            completion = backend.complete(CompletionRequest(profile, prompt, point, context))
        except Exception as exc:  # a failed request must not abort the run
            return PointResult("", 0.0, f"{type(exc).__name__}: {exc}"), notes
        return PointResult(completion, chrf(completion, point.ground_truth, params)), notes

    if parallelism == 1:
        results = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(run, tasks))

    per_point: dict[str, dict[str, PointResult]] = {}
    for (point, profile), (result, notes) in zip(tasks, results):
        per_point.setdefault(point.point_id, {})[profile.name] = result
        warnings.extend(notes)
        if result.error:
            warnings.append(f"{point.point_id}: {profile.name} failed: {result.error}")
    per_model, overall = aggregate_scores({pid: {m: r.score for m, r in row.items()} for pid, row in per_point.items()})
    return RunReport(
        run_id=run_id,
        models=names,
        per_point=per_point,
        per_model_mean={m: per_model[m] for m in names},
        overall=overall,
        config=dict(config or {}),
        excluded=excluded,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Leaderboard
# ---------------------------------------------------------------------------

LEADERBOARD_FORMATS = ("markdown", "csv", "json")


def standings(reports: Sequence[RunReport], tie_threshold: float = TIE_THRESHOLD) -> list[tuple[int, RunReport]]:
    """Reports sorted by overall, with shared ranks for near-equal scores."""
    if not reports:
        return []
    models = set(reports[0].models)
    for rep in reports[1:]:
        if set(rep.models) != models:
            raise ValueError(f"report {rep.run_id!r} has models {sorted(rep.models)}, expected {sorted(models)}")
    ordered = sorted(reports, key=lambda r: (-r.overall, r.run_id))
    ranked = []
    rank = 0
    leader = None
    for rep in ordered:
        if leader is None or leader - rep.overall > tie_threshold + 1e-12:
            rank += 1
            leader = rep.overall
        ranked.append((rank, rep))
    return ranked


def leaderboard(reports: Sequence[RunReport], fmt: str = "markdown") -> str:
    if fmt not in LEADERBOARD_FORMATS:
        raise ValueError(f"format must be one of {LEADERBOARD_FORMATS}")
    ranked = standings(reports)
    models = list(reports[0].models) if reports else []
    header = ["Rank", "Run", "Average chrF"] + [f"{m} chrF" for m in models]
    rows = [[str(rank), rep.run_id, f"{rep.overall:.4f}"] + [f"{rep.per_model_mean[m]:.4f}" for m in models] for rank, rep in ranked]
    if fmt == "json":
        data = [
            {"rank": rank, "run": rep.run_id, "average": round(rep.overall, 4)}
            | {m: round(rep.per_model_mean[m], 4) for m in models}
            for rank, rep in ranked
        ]
        return json.dumps(data, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines) + "\n"
