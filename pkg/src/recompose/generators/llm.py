"""Language-model generator speaking the chat-completion HTTP protocol.

The wire format is the widely used one: request
``{"model", "temperature", "n", "messages": [{"role", "content"}]}``,
response ``{"choices": [{"message": {"content": ...}}]}``.  Prompts live in
versioned JSON template files (see ``prompts/``) so they can be inspected
and overridden without touching code.  Model output is never trusted:
completions are mined for fenced code blocks, unparseable candidates are
dropped (and counted), and everything else downstream is re-verified by
execution.
"""
from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import requests

from ..parsing import ArityError, ParseError, parse, pretty, pretty_expr
from ..syntax import Program, Var, substitute
from ..task import Example
from ..values import Value, render_value
from .base import (
    Generator, GeneratorRequest, GeneratorUnavailable, HoleQuery, RequestKind,
)
from .inverse import BACKPROP_TEMPERATURE

logger = logging.getLogger(__name__)

__all__ = [
    "LlmConfig", "LlmClient", "LlmGenerator",
    "extract_programs", "parse_hole_values", "load_prompt", "render_examples",
]

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_ASSIGN_LINE_RE = re.compile(r"(?:input\s+values|answer)\s*(\d+)\s*:(.*)", re.IGNORECASE)
_HOLE_RE = re.compile(r"h(\d+)\s*=\s*")
_SQUOTE_RE = re.compile(r"'((?:[^'\\]|\\.)*)'")


@dataclass
class LlmConfig:
    """Where and how to reach the model endpoint."""

    endpoint: str
    model: str
    api_key_env: str = "RECOMPOSE_API_KEY"
    timeout: float = 60.0
    retries: int = 1
    prompts_dir: Optional[Path] = None
    extra_headers: dict[str, str] = field(default_factory=dict)


class LlmClient:
    """Minimal chat-completion client: one endpoint, 60 s timeout, one retry."""

    def __init__(self, config: LlmConfig):
        self.config = config
        self._session = requests.Session()
        self._lock = threading.Lock()  # serialize: one connection pool, many workers

    def chat(self, messages: list[dict], n: int, temperature: float) -> list[str]:
        payload = {
            "model": self.config.model,
            "temperature": temperature,
            "n": n,
            "messages": messages,
        }
        headers = {"Content-Type": "application/json", **self.config.extra_headers}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            try:
                with self._lock:
                    resp = self._session.post(
                        self.config.endpoint,
                        json=payload,
                        headers=headers,
                        timeout=self.config.timeout,
                    )
                resp.raise_for_status()
                data = resp.json()
                return [
                    str(choice["message"]["content"])
                    for choice in data["choices"]
                ]
            except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
                last_error = exc
                logger.warning("chat call failed (attempt %d): %s", attempt + 1, exc)
        raise GeneratorUnavailable(f"model endpoint unreachable: {last_error}")


# --------------------------------------------------------------------------
# completion mining (shared with the scripted transcript generator)


def extract_programs(text: str) -> tuple[list[Program], int]:
    """Programs from fenced code blocks; (candidates, dropped count).

    Falls back to treating the whole completion as one program when no
    fences are present.  Malformed blocks are dropped silently but counted.
    """
    blocks = [m.group(1) for m in _FENCE_RE.finditer(text)]
    if not blocks:
        blocks = [text]
    programs: list[Program] = []
    seen: set[str] = set()
    dropped = 0
    for block in blocks:
        try:
            prog = parse(block.strip())
        except (ParseError, ArityError):
            dropped += 1
            continue
        rendered = pretty(prog)
        if rendered not in seen:
            seen.add(rendered)
            programs.append(prog)
    return programs, dropped


def _read_value(text: str) -> tuple[Optional[Value], str]:
    """One value from the front of `text` (JSON first, single quotes accepted)."""
    text = text.lstrip()
    decoder = json.JSONDecoder()
    try:
        v, end = decoder.raw_decode(text)
        if isinstance(v, (str, int, bool, list)):
            return v, text[end:]
    except ValueError:
        pass
    m = _SQUOTE_RE.match(text)
    if m:
        raw = m.group(1).replace("\\'", "'").replace('\\"', '"')
        return raw, text[m.end():]
    return None, text


def parse_hole_values(text: str, n_holes: int) -> dict[int, list[tuple[Value, ...]]]:
    """Hole assignments per output index from one completion.

    Recognized lines look like ``Input values 2: h0 = "foo", h1 = ["a"]``;
    the output numbering in the text is 1-based.
    """
    out: dict[int, list[tuple[Value, ...]]] = {}
    for line in text.splitlines():
        m = _ASSIGN_LINE_RE.search(line)
        if not m:
            continue
        query_index = int(m.group(1)) - 1
        rest = m.group(2)
        holes: dict[int, Value] = {}
        pos = 0
        while True:
            hm = _HOLE_RE.search(rest, pos)
            if not hm:
                break
            value, remainder = _read_value(rest[hm.end():])
            if value is None:
                pos = hm.end()
                continue
            holes[int(hm.group(1))] = value
            pos = len(rest) - len(remainder)
        if len(holes) == n_holes and set(holes) == set(range(n_holes)):
            out.setdefault(query_index, []).append(
                tuple(holes[k] for k in range(n_holes))
            )
    return out


# --------------------------------------------------------------------------
# prompt assembly


def load_prompt(name: str, prompts_dir: Optional[Path] = None) -> dict:
    """A prompt template by base name, from `prompts_dir` or the packaged set."""
    if prompts_dir is not None:
        return json.loads((Path(prompts_dir) / f"{name}.json").read_text())
    ref = resources.files("recompose.generators").joinpath(f"prompts/{name}.json")
    return json.loads(ref.read_text())


def render_examples(examples: Sequence[Example]) -> str:
    lines = []
    for ex in examples:
        ins = ", ".join(render_value(v) for v in ex.inputs)
        lines.append(f"Input: [{ins}]  Output: {render_value(ex.output)}")
    return "\n".join(lines)


def _fill(messages: list[dict], **subs: str) -> list[dict]:
    filled = []
    for msg in messages:
        content = msg["content"]
        for key, val in subs.items():
            content = content.replace("{" + key + "}", val)
        filled.append({"role": msg["role"], "content": content})
    return filled


class LlmGenerator(Generator):
    """Synthesis, condition search and inverse evaluation over a chat model."""

    name = "llm"

    def __init__(self, config: LlmConfig, client: Optional[LlmClient] = None):
        self.config = config
        self.client = client or LlmClient(config)
        self.dropped = 0  # unparseable candidates discarded so far

    def _template(self, name: str) -> list[dict]:
        return load_prompt(name, self.config.prompts_dir)["messages"]

    def generate(self, request: GeneratorRequest) -> list[Program]:
        if request.kind is RequestKind.CONDITION_SYNTHESIS:
            messages = self._condition_messages(request)
        else:
            context = ""
            if request.context:
                context = "\n\n" + request.context
            messages = _fill(
                self._template("synthesis"),
                examples=render_examples(request.examples),
                context=context,
            )
        completions = self.client.chat(
            messages, n=request.sample_count, temperature=request.temperature
        )
        programs: list[Program] = []
        seen: set[str] = set()
        for completion in completions:
            found, dropped = extract_programs(completion)
            self.dropped += dropped
            for prog in found:
                rendered = pretty(prog)
                if rendered not in seen:
                    seen.add(rendered)
                    programs.append(prog)
        return programs

    def _condition_messages(self, request: GeneratorRequest) -> list[dict]:
        def states(flag: bool) -> str:
            rows = []
            for ex in request.examples:
                if (ex.output is True) == flag:
                    parts = ", ".join(
                        f"x{i} = {render_value(v)}" for i, v in enumerate(ex.inputs)
                    )
                    rows.append("{" + parts + "}")
            return "\n".join(rows)

        return _fill(
            self._template("condition"), class1=states(True), class2=states(False)
        )

    def propose_hole_values(
        self,
        suffix,
        queries: Sequence[HoleQuery],
        sample_count: int,
    ) -> list[list[tuple[Value, ...]]]:
        hole_vars = {
            k: Var(f"h{k}") for k in range(len(suffix.holes))
        }
        shown = pretty_expr(substitute(suffix.program.ret, input_map=hole_vars))
        blocks = []
        for i, q in enumerate(queries, start=1):
            hints = ", ".join(render_value(h) for h in q.hints)
            blocks.append(
                f"Output value {i}: {render_value(q.output)}\n"
                f"Inspiration values {i}: [{hints}]"
            )
        messages = _fill(
            self._template("backprop"),
            expression=shown,
            queries="\n\n".join(blocks),
        )
        completions = self.client.chat(
            messages, n=sample_count, temperature=BACKPROP_TEMPERATURE
        )
        per_query: list[list[tuple[Value, ...]]] = [[] for _ in queries]
        for completion in completions:
            found = parse_hole_values(completion, len(suffix.holes))
            for qi, tuples in found.items():
                if 0 <= qi < len(queries):
                    per_query[qi].extend(tuples)
        return per_query
