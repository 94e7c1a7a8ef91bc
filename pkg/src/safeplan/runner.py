"""Plan acquisition: read saved outputs, pipe prompts to a command, or call
an OpenAI-compatible chat endpoint.

Per-task failures never abort a batch. They come back as a RawPlanText
with ``error`` set and are scored as infeasible downstream, so every model
keeps the same task denominator.
"""

from __future__ import annotations

import logging
import os
import shlex
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import Any, Callable, Mapping, Sequence

import httpx

from .bundle import TaskBundle
from .bundle_io import read_plans_jsonl
from .errors import MissingPlanFile, ProviderError, ProviderHttpError, ProviderTimeout
from .plan import RawPlanText
from .prompt import audit_prompt, load_template, render_prompt

log = logging.getLogger(__name__)

KINDS = ("directory", "command", "http")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str
    path: str | None = None  # directory: plans/<model>/<task>.txt, or a .jsonl file
    command: str | None = None
    base_url: str | None = None
    model: str | None = None
    token_env: str | None = None
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_s: float = 1.0
    temperature: float = 0.0
    template: str | None = None
    rate_per_s: float | None = None
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"provider kind must be one of {KINDS}")
        need = {"directory": "path", "command": "command", "http": "base_url"}[self.kind]
        if not getattr(self, need):
            raise ValueError(f"{self.kind} provider needs {need}")
        if self.kind == "http" and not self.model:
            raise ValueError("http provider needs a model name")
        if self.max_retries < 0 or self.timeout_s <= 0:
            raise ValueError("max_retries must be >= 0 and timeout_s > 0")

    @classmethod
    def parse(cls, spec: str, **kw) -> "ProviderConfig":
        """``directory:PATH``, ``jsonl:FILE``, ``command:CMD`` or ``http:URL``."""
        kind, sep, rest = spec.partition(":")
        if not sep or not rest:
            raise ValueError(f"provider spec {spec!r} must look like KIND:VALUE")
        if kind in ("directory", "jsonl"):
            return cls("directory", path=rest, **kw)
        if kind == "command":
            return cls("command", command=rest, **kw)
        if kind == "http":
            return cls("http", base_url=rest, **kw)
        raise ValueError(f"unknown provider kind {kind!r}")


class TokenBucket:
    """Blocking rate limiter shared by worker threads."""

    def __init__(self, rate_per_s: float | None, burst: int = 1,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        self.rate = rate_per_s
        self.capacity = max(1, burst)
        self.tokens = float(self.capacity)
        self.clock, self.sleep = clock, sleep
        self.last = clock()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        if not self.rate:
            return
        while True:
            with self.lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.last) * self.rate)
                self.last = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            self.sleep(wait)


class LeakedPrompt(ProviderError):
    pass


# --------------------------------------------------------------------------
# providers


def _directory_models(root: Path) -> list[str]:
    return sorted(p.name for p in root.iterdir() if p.is_dir())


def _read_directory(bundles: Sequence[TaskBundle], cfg: ProviderConfig) -> list[RawPlanText]:
    root = Path(cfg.path)
    out = []
    if root.suffix == ".jsonl":
        plans = read_plans_jsonl(root)
        models = sorted({m for m, _ in plans})
        for model in models:
            for b in bundles:
                text = plans.get((model, b.task_id))
                err = None if text is not None else f"no plan for task {b.task_id!r} in {root}"
                out.append(RawPlanText(text or "", model, b.task_id, err))
        return out
    if not root.is_dir():
        raise MissingPlanFile(f"plan directory {root} does not exist")
    for model in _directory_models(root):
        for b in bundles:
            f = root / model / f"{b.task_id}.txt"
            try:
                out.append(RawPlanText(f.read_text(encoding="utf-8"), model, b.task_id))
            except OSError as exc:
                out.append(RawPlanText("", model, b.task_id, str(MissingPlanFile(f"{f}: {exc.strerror}"))))
    return out


def _run_command(prompt: str, cfg: ProviderConfig) -> str:
    try:
        proc = subprocess.run(shlex.split(cfg.command), input=prompt, capture_output=True, text=True,
                              timeout=cfg.timeout_s, check=False)
    except subprocess.TimeoutExpired:
        raise ProviderTimeout(f"command timed out after {cfg.timeout_s}s") from None
    except OSError as exc:
        raise ProviderError(f"command failed to start: {exc}") from None
    if proc.returncode != 0:
        raise ProviderError(f"command exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
    return proc.stdout


def chat_completion(prompt: str, cfg: ProviderConfig, client: httpx.Client,
                    sleep: Callable[[float], None] = time.sleep) -> str:
    """POST one chat-completions request, retrying timeouts, 429 and 5xx."""
    headers = {"Content-Type": "application/json"}
    if cfg.token_env:
        token = os.environ.get(cfg.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    body = {"model": cfg.model, "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature, **dict(cfg.extra)}
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    last: ProviderError | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            sleep(cfg.backoff_s * 2 ** (attempt - 1))
        try:
            resp = client.post(url, json=body, headers=headers, timeout=cfg.timeout_s)
        except httpx.TimeoutException:
            last = ProviderTimeout(f"request timed out after {cfg.timeout_s}s")
            continue
        except httpx.HTTPError as exc:
            last = ProviderError(f"transport error: {exc}")
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last = ProviderHttpError(f"HTTP {resp.status_code}", resp.status_code)
            continue
        if resp.status_code >= 400:
            raise ProviderHttpError(f"HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code)
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError):
            raise ProviderError("response is not a chat completion") from None
    assert last is not None
    raise last


def collect_plans(bundles: Sequence[TaskBundle], cfg: ProviderConfig, parallel: int = 1,
                  client: httpx.Client | None = None,
                  sleep: Callable[[float], None] = time.sleep) -> list[RawPlanText]:
    """One RawPlanText per (model, bundle), sorted by (task_id, model_id)."""
    if cfg.kind == "directory":
        out = _read_directory(bundles, cfg)
        return sorted(out, key=lambda r: (r.task_id, r.model_id))

    template: Template | None = load_template(cfg.template)
    model_id = cfg.model or (cfg.command or "command")
    bucket = TokenBucket(cfg.rate_per_s, sleep=sleep)
    own_client = cfg.kind == "http" and client is None
    if own_client:
        client = httpx.Client()

    def one(b: TaskBundle) -> RawPlanText:
        prompt = render_prompt(b, template)
        leaked = audit_prompt(prompt, b)
        if leaked:
            # never send; keep the task in the batch as a failure
            return RawPlanText("", model_id, b.task_id, str(LeakedPrompt(f"prompt leaks {leaked}")))
        bucket.acquire()
        try:
            text = _run_command(prompt, cfg) if cfg.kind == "command" else \
                chat_completion(prompt, cfg, client, sleep)
            return RawPlanText(text, model_id, b.task_id)
        except ProviderError as exc:
            log.warning("%s: %s", b.task_id, exc)
            return RawPlanText("", model_id, b.task_id, f"{type(exc).__name__}: {exc}")

    try:
        with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
            out = list(pool.map(one, bundles))
    finally:
        if own_client:
            client.close()
    return sorted(out, key=lambda r: (r.task_id, r.model_id))
