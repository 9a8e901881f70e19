"""Stage-II middleware: agent loops, tool dispatch, and the two-stage pipeline.

The orchestrator is procedural, not a model: it parses agent responses,
executes tools, refines tool output, carries Locator context into the
Generator prompt, and enforces retry/turn/time budgets. Tool failures are
observations returned to the agent; only budget exhaustion ends a run, and
even that surfaces as a controlled-failure result rather than an exception.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field

from .analysis.logs import LoggingStatement, parse_log_statement
from .analysis.parser import parse_method
from .analysis.scopes import extract_variables
from .analysis.slicing import backward_slice
from .backends import ModelBackend
from .errors import (
    BackendError,
    GlobalTimeout,
    LogsmithError,
    MalformedResponse,
    MissingTag,
    NoCodeBlock,
    ParseFailure,
    RetriesExhausted,
    TurnBudgetExceeded,
    UnparseableDecision,
)
from .judger import LOG_LABEL, NO_LOG_LABEL, build_judger_prompt, parse_judge_label
from .retrieval import BM25Index, RetrievalPair, retrieve_similar

logger = logging.getLogger(__name__)

NEED_LOGGING_TAG = "<<need_logging>>"

TOOL_NAMES = ("similar_case_retrieval", "variable_extractor", "backward_slicing")


@dataclass
class ToolCommand:
    tool: str
    args: dict


@dataclass
class FinalAnswer:
    code: str


@dataclass
class AgentTurn:
    thoughts: str
    command: ToolCommand | None = None
    final: FinalAnswer | None = None


@dataclass
class ToolResult:
    tool: str
    content: str


@dataclass
class ToolError:
    tool: str
    message: str


@dataclass
class Telemetry:
    tool_calls: int = 0
    tool_failures: int = 0
    retries: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "tool_calls": self.tool_calls,
            "tool_failures": self.tool_failures,
            "retries": self.retries,
            "wall_time": self.wall_time,
        }


@dataclass
class OrchestratorConfig:
    max_turns: int = 6
    global_timeout: float = 300.0
    retry_limit: int = 2
    retrieval_k: int = 1

    def __post_init__(self) -> None:
        if self.max_turns <= 0 or self.global_timeout <= 0:
            raise ValueError("max_turns and global_timeout must be positive")
        if self.retry_limit <= 0 or self.retrieval_k <= 0:
            raise ValueError("retry_limit and retrieval_k must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "OrchestratorConfig":
        return cls(
            max_turns=int(data.get("max_turns", 6)),
            global_timeout=float(data.get("global_timeout", 300.0)),
            retry_limit=int(data.get("retry_limit", 2)),
            retrieval_k=int(data.get("retrieval_k", 1)),
        )


@dataclass
class ToolContext:
    method_source: str
    index: BM25Index | None
    retrieval_k: int
    telemetry: Telemetry


@dataclass
class PipelineResult:
    method_id: str
    decision: str  # LOG | NO_LOG
    located_line: int | None = None
    generated_statement: LoggingStatement | None = None
    final_code: str | None = None
    telemetry: Telemetry = field(default_factory=Telemetry)
    error: str | None = None
    transcripts: dict = field(default_factory=dict)

    def to_dict(self, zero_wall_time: bool = False) -> dict:
        telemetry = self.telemetry.to_dict()
        if zero_wall_time:
            telemetry["wall_time"] = 0.0
        return {
            "method_id": self.method_id,
            "decision": self.decision,
            "located_line": self.located_line,
            "generated_statement": (self.generated_statement.to_dict()
                                    if self.generated_statement else None),
            "final_code": self.final_code,
            "telemetry": telemetry,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineResult":
        stmt = data.get("generated_statement")
        telemetry = data.get("telemetry", {})
        return cls(
            method_id=data["method_id"],
            decision=data["decision"],
            located_line=data.get("located_line"),
            generated_statement=LoggingStatement.from_dict(stmt) if stmt else None,
            final_code=data.get("final_code"),
            telemetry=Telemetry(
                tool_calls=int(telemetry.get("tool_calls", 0)),
                tool_failures=int(telemetry.get("tool_failures", 0)),
                retries=int(telemetry.get("retries", 0)),
                wall_time=float(telemetry.get("wall_time", 0.0)),
            ),
            error=data.get("error"),
        )


# ---------------------------------------------------------------------------
# response parsing


_FENCE_RE = re.compile(r"```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\r?\n(.*?)```", re.DOTALL)


def extract_code_block(text: str) -> str:
    """Contents of the last fenced code block, outer blank lines trimmed."""
    blocks = _FENCE_RE.findall(text)
    if not blocks:
        raise NoCodeBlock("no fenced code block in response")
    return blocks[-1][1].strip("\n")


def _json_candidates(text: str) -> list[dict]:
    candidates: list[dict] = []
    decoder = json.JSONDecoder()
    sources = [content for tag, content in _FENCE_RE.findall(text)
               if tag in ("", "json")]
    sources.append(text)
    for source in sources:
        for start in [m.start() for m in re.finditer(r"\{", source)][:50]:
            try:
                obj, _ = decoder.raw_decode(source[start:])
            except ValueError:
                continue
            if isinstance(obj, dict) and ("thoughts" in obj or "command" in obj):
                candidates.append(obj)
    return candidates


def parse_agent_response(text: str) -> AgentTurn:
    """JSON envelope with a command, or a fenced code block as the final answer."""
    candidates = _json_candidates(text)
    thoughts = ""
    for obj in candidates:
        if isinstance(obj.get("thoughts"), str) and not thoughts:
            thoughts = obj["thoughts"]
    for obj in reversed(candidates):
        command = obj.get("command")
        if isinstance(command, dict):
            tool = command.get("tool")
            args = command.get("args", {})
            if not isinstance(tool, str) or not isinstance(args, dict):
                raise MalformedResponse("command must carry a tool name and an args map")
            return AgentTurn(thoughts=obj.get("thoughts", "") or thoughts,
                             command=ToolCommand(tool=tool, args=args))
    code_blocks = [content for tag, content in _FENCE_RE.findall(text)
                   if not _is_command_json(tag, content)]
    if code_blocks:
        return AgentTurn(thoughts=thoughts, final=FinalAnswer(code_blocks[-1].strip("\n")))
    raise MalformedResponse("response carries neither a command nor a code block")


def _is_command_json(tag: str, content: str) -> bool:
    if tag == "json":
        return True
    stripped = content.strip()
    if not stripped.startswith("{"):
        return False
    try:
        return isinstance(json.loads(stripped), dict)
    except ValueError:
        return False


def locate_need_logging_tag(code: str) -> tuple[int, str]:
    """Line of the first placeholder; extra tags only warn (one insertion per method)."""
    hits = [i for i, line in enumerate(code.splitlines(), start=1)
            if NEED_LOGGING_TAG in line]
    if not hits:
        raise MissingTag(f"{NEED_LOGGING_TAG} not found in locator output")
    if len(hits) > 1:
        logger.warning("%d %s tags found; keeping the first (line %d)",
                       len(hits), NEED_LOGGING_TAG, hits[0])
    return hits[0], code


# ---------------------------------------------------------------------------
# tools


_TOOL_SCHEMAS: dict[str, dict[str, tuple[type, bool]]] = {
    "similar_case_retrieval": {"code": (str, False)},
    "variable_extractor": {"line": (int, True)},
    "backward_slicing": {"line": (int, True)},
}


def dispatch_tool(command: ToolCommand, context: ToolContext) -> ToolResult | ToolError:
    """Route a command to its tool; every failure is data, never an exception."""
    context.telemetry.tool_calls += 1
    schema = _TOOL_SCHEMAS.get(command.tool)
    if schema is None:
        return _tool_error(context, command.tool,
                           f"unknown tool {command.tool!r}; available: {', '.join(TOOL_NAMES)}")
    for name, (expected, required) in schema.items():
        if name not in command.args:
            if required:
                return _tool_error(
                    context, command.tool,
                    f"missing required argument \"{name}\" for {command.tool}")
            continue
        value = command.args[name]
        if not isinstance(value, expected) or isinstance(value, bool):
            return _tool_error(
                context, command.tool,
                f"argument \"{name}\" must be {expected.__name__}, got {type(value).__name__}")
    unexpected = sorted(set(command.args) - set(schema))
    if unexpected:
        required = [n for n, (_, req) in schema.items() if req and n not in command.args]
        note = f"; did you mean \"{required[0]}\"?" if required else ""
        return _tool_error(context, command.tool,
                           f"unexpected argument(s) {', '.join(unexpected)}{note}")
    try:
        if command.tool == "variable_extractor":
            report = extract_variables(context.method_source, command.args["line"])
            return ToolResult(command.tool, report.to_json())
        if command.tool == "backward_slicing":
            report = backward_slice(context.method_source, command.args["line"])
            return ToolResult(command.tool, report.to_json())
        query = command.args.get("code", context.method_source)
        if context.index is None:
            return _tool_error(context, command.tool, "no retrieval index configured")
        hits = retrieve_similar(context.index, query, k=context.retrieval_k)
        rendered = "\n\n".join(format_retrieved_case(pair) for pair, _ in hits)
        return ToolResult(command.tool, rendered)
    except LogsmithError as exc:
        return _tool_error(context, command.tool, f"{type(exc).__name__}: {exc}")


def _tool_error(context: ToolContext, tool: str, message: str) -> ToolError:
    context.telemetry.tool_failures += 1
    return ToolError(tool, message)


def format_retrieved_case(pair: RetrievalPair) -> str:
    """LLM-friendly rendering of an example pair under fixed headers."""
    return (
        "=== BEFORE (no logging) ===\n"
        f"{pair.code_before.rstrip()}\n"
        "=== AFTER (with logging) ===\n"
        f"{pair.code_after.rstrip()}"
    )


# ---------------------------------------------------------------------------
# prompts


_PROTOCOL = """Respond with a JSON object to call a tool:
{"thoughts": "<reasoning>", "command": {"tool": "<name>", "args": {...}}}
Available tools:
- similar_case_retrieval: args {"code": <string, optional>} -- most similar logged example pair
- variable_extractor: args {"line": <int>} -- fields, parameters, and locals in scope at a line
- backward_slicing: args {"line": <int>} -- placement type, data dependencies, control context"""


def build_locator_prompt(code: str) -> str:
    return f"""You are the Locator. Choose the single best line for one new logging statement in the Java method below.

{_PROTOCOL}

When decided, reply with the complete method in a fenced code block, adding one line containing only {NEED_LOGGING_TAG} at the chosen insertion point.

Method:
```java
{code.rstrip()}
```"""


def build_generator_prompt(marked_code: str, carried_outputs: list[ToolResult]) -> str:
    """Generator prompt embedding the tagged code and every carried tool output."""
    if NEED_LOGGING_TAG not in marked_code:
        raise MissingTag("marked code does not contain the placeholder")
    if carried_outputs:
        sections = "\n\n".join(f"[{r.tool}]\n{r.content}" for r in carried_outputs)
    else:
        sections = "(none)"
    return f"""You are the Generator. The method below contains a {NEED_LOGGING_TAG} placeholder marking where one new logging statement must be inserted.

Context gathered so far:
{sections}

{_PROTOCOL}

When ready, reply with the complete method in a fenced code block, replacing the {NEED_LOGGING_TAG} line with exactly one complete logging statement.

Marked method:
```java
{marked_code.rstrip()}
```"""


_OBSERVATION_TEMPLATE = """

Observation from {tool}:
{content}

Continue. Respond with a JSON command or the final fenced code block."""

_RETRY_NOTE = """

Your previous reply could not be parsed ({reason}). Respond with a JSON object containing "thoughts" and "command", or a fenced code block as the final answer."""


# ---------------------------------------------------------------------------
# loops


def _remaining(deadline: float) -> float:
    remaining = deadline - time.monotonic()
    if remaining <= 0:
        raise GlobalTimeout("global time budget expired")
    return remaining


def _complete_with_retries(backend: ModelBackend, prompt: str,
                           config: OrchestratorConfig, telemetry: Telemetry,
                           deadline: float) -> str:
    while True:
        remaining = _remaining(deadline)
        try:
            # temperature is the backend's own parameter (default 0)
            return backend.complete(prompt, timeout=remaining)
        except Exception as exc:  # transport failures are retryable
            if telemetry.retries >= config.retry_limit:
                raise RetriesExhausted(f"backend kept failing: {exc}") from exc
            telemetry.retries += 1
            logger.warning("backend failure (retry %d/%d): %s",
                           telemetry.retries, config.retry_limit, exc)


def run_agent_loop(role: str, prompt: str, backend: ModelBackend, tools: ToolContext,
                   config: OrchestratorConfig, deadline: float | None = None
                   ) -> tuple[str, list[dict], Telemetry]:
    """ReAct cycle: complete -> parse -> dispatch/observe, until a final answer.

    Also returns the transcript; successful tool results ride in events with
    role "observation" for carry-over into the next agent's prompt.
    """
    telemetry = tools.telemetry
    if deadline is None:
        deadline = time.monotonic() + config.global_timeout
    transcript: list[dict] = [{"role": "prompt", "agent": role, "content": prompt}]
    convo = prompt
    turns = 0
    while turns < config.max_turns:
        _remaining(deadline)
        response = _complete_with_retries(backend, convo, config, telemetry, deadline)
        transcript.append({"role": "agent", "agent": role, "content": response})
        try:
            turn = parse_agent_response(response)
        except MalformedResponse as exc:
            if telemetry.retries >= config.retry_limit:
                raise RetriesExhausted(f"{role} kept replying unparseably: {exc}") from exc
            telemetry.retries += 1
            convo += _RETRY_NOTE.format(reason=exc)
            continue
        turns += 1
        if turn.command is not None:
            outcome = dispatch_tool(turn.command, tools)
            if isinstance(outcome, ToolResult):
                transcript.append({"role": "observation", "tool": outcome.tool,
                                   "content": outcome.content})
                convo += _OBSERVATION_TEMPLATE.format(tool=outcome.tool,
                                                      content=outcome.content)
            else:
                transcript.append({"role": "observation", "tool": outcome.tool,
                                   "error": outcome.message})
                convo += _OBSERVATION_TEMPLATE.format(
                    tool=outcome.tool, content=f"ERROR: {outcome.message}")
            continue
        return turn.final.code, transcript, telemetry
    raise TurnBudgetExceeded(f"{role} exhausted {config.max_turns} turns")


def _carried_results(transcript: list[dict]) -> list[ToolResult]:
    return [ToolResult(e["tool"], e["content"]) for e in transcript
            if e.get("role") == "observation" and "content" in e]


def _judge(record_source: str, example: tuple[str, str], backend: ModelBackend,
           config: OrchestratorConfig, telemetry: Telemetry, deadline: float
           ) -> tuple[str, list[dict]]:
    prompt = build_judger_prompt(record_source, example)
    transcript: list[dict] = [{"role": "prompt", "agent": "judger", "content": prompt}]
    convo = prompt
    while True:
        response = _complete_with_retries(backend, convo, config, telemetry, deadline)
        transcript.append({"role": "agent", "agent": "judger", "content": response})
        try:
            decision = parse_judge_label(response)
        except UnparseableDecision as exc:
            if telemetry.retries >= config.retry_limit:
                raise RetriesExhausted(f"judger kept replying unparseably: {exc}") from exc
            telemetry.retries += 1
            convo += ("\n\nYour previous reply contained neither label. "
                      "Answer with LOG or NO_LOG only.")
            continue
        return decision.label, transcript


def _default_judger_example(source: str, index: BM25Index | None) -> tuple[str, str]:
    """Without a labeled pool, the nearest unlogged pair side serves as a LOG example."""
    if index is not None:
        try:
            pair, _ = retrieve_similar(index, source, k=1)[0]
            return pair.code_before, LOG_LABEL
        except LogsmithError:
            pass
    return source, LOG_LABEL


_ERROR_KINDS = {
    GlobalTimeout: "global_timeout",
    RetriesExhausted: "retries_exhausted",
    TurnBudgetExceeded: "turn_budget_exceeded",
    MissingTag: "missing_tag",
    NoCodeBlock: "no_code_block",
    MalformedResponse: "malformed_response",
    UnparseableDecision: "unparseable_decision",
    BackendError: "backend_error",
    ParseFailure: "parse_failure",
}


def run_pipeline(record, index: BM25Index | None, judger_backend: ModelBackend,
                 agent_backend: ModelBackend, config: OrchestratorConfig,
                 judger_examples=None) -> PipelineResult:
    """Stage I gate, then the Locator/Generator relay; never raises.

    `judger_examples` may supply a labeled one-shot pool (retrieval.ExampleIndex);
    without it the example falls back to the nearest indexed pair.
    """
    telemetry = Telemetry()
    start = time.monotonic()
    deadline = start + config.global_timeout
    result = PipelineResult(method_id=record.id, decision=NO_LOG_LABEL,
                            telemetry=telemetry)
    try:
        if judger_examples is not None:
            example = judger_examples.top1(record.source)
        else:
            example = _default_judger_example(record.source, index)
        label, judger_transcript = _judge(record.source, example, judger_backend,
                                          config, telemetry, deadline)
        result.transcripts["judger"] = judger_transcript
        result.decision = label
        if label == NO_LOG_LABEL:
            return result

        tools = ToolContext(method_source=record.source, index=index,
                            retrieval_k=config.retrieval_k, telemetry=telemetry)
        locator_prompt = build_locator_prompt(record.source)
        locator_code, locator_transcript, _ = run_agent_loop(
            "locator", locator_prompt, agent_backend, tools, config, deadline)
        result.transcripts["locator"] = locator_transcript
        line, marked = locate_need_logging_tag(locator_code)
        result.located_line = line

        carried = _carried_results(locator_transcript)
        generator_prompt = build_generator_prompt(marked, carried)
        final_code, generator_transcript, _ = run_agent_loop(
            "generator", generator_prompt, agent_backend, tools, config, deadline)
        result.transcripts["generator"] = generator_transcript
        result.final_code = final_code

        statement = find_inserted_statement(record.source, final_code, line)
        if statement is None:
            result.error = "no_new_logging_statement"
            return result
        result.generated_statement = statement
        return result
    except LogsmithError as exc:
        result.error = _ERROR_KINDS.get(type(exc), "controlled_failure")
        logger.warning("pipeline for %s terminated: %s (%s)",
                       record.id, result.error, exc)
        return result
    finally:
        telemetry.wall_time = time.monotonic() - start


def find_inserted_statement(input_code: str, final_code: str,
                            near_line: int) -> LoggingStatement | None:
    """The new log statement in the generator output, nearest the tag line.

    Multiset comparison: an inserted statement identical to an existing log
    still counts as new.
    """
    from collections import Counter

    before = Counter(_squash(ls.raw) for ls in _logs_of(input_code))
    seen: Counter = Counter()
    fresh = []
    for statement in _logs_of(final_code):
        key = _squash(statement.raw)
        seen[key] += 1
        if seen[key] > before.get(key, 0):
            fresh.append(statement)
    if not fresh:
        return None
    return min(fresh, key=lambda ls: (abs(ls.line - near_line), ls.line))


def _logs_of(code: str) -> list[LoggingStatement]:
    try:
        tree = parse_method(code)
    except LogsmithError:
        out = []
        for i, line in enumerate(code.splitlines(), start=1):
            parsed = parse_log_statement(line.strip(), line=i)
            if parsed is not None:
                out.append(parsed)
        return out
    from .corpus import _find_logs

    return _find_logs(tree.method, tree.lines, offset=0)


def _squash(text: str) -> str:
    return re.sub(r"\s+", "", text)
