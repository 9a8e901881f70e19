"""Whether-to-log gate: one-shot prompt construction and label parsing."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import UnparseableDecision

LOG_LABEL = "LOG"
NO_LOG_LABEL = "NO_LOG"

INSTRUCTION = (
    "You are reviewing a Java method to decide whether it still needs a new "
    "logging statement. Answer with a single label: LOG if the method is "
    "missing a logging statement it should have, NO_LOG if its logging is "
    "already sufficient or it needs none."
)

_PROMPT_TEMPLATE = """{instruction}

Here is a similar method and its correct label:
```java
{example_code}
```
Answer: {example_label}

Now classify the target method:
```java
{target_code}
```
Answer with LOG or NO_LOG only."""

# NO_LOG first: LOG is a substring of NO_LOG
_LABEL_RE = re.compile(r"(?<![0-9A-Za-z_])(NO_LOG|LOG)(?![0-9A-Za-z_])")


@dataclass
class JudgeDecision:
    label: str  # LOG | NO_LOG
    raw_response: str


def build_judger_prompt(target: str, example: tuple[str, str]) -> str:
    """Instruction, labeled one-shot example, target, answer directive."""
    example_code, example_label = example
    if example_label not in (LOG_LABEL, NO_LOG_LABEL):
        raise ValueError(f"example label must be LOG or NO_LOG, got {example_label!r}")
    return _PROMPT_TEMPLATE.format(
        instruction=INSTRUCTION,
        example_code=example_code.rstrip("\n"),
        example_label=example_label,
        target_code=target.rstrip("\n"),
    )


def parse_judge_label(response: str) -> JudgeDecision:
    """NO_LOG wins whenever it occurs as a standalone token; else LOG; else error."""
    matches = [m.group(1) for m in _LABEL_RE.finditer(response)]
    if not matches:
        raise UnparseableDecision(f"no LOG/NO_LOG token in response: {response[:80]!r}")
    label = NO_LOG_LABEL if NO_LOG_LABEL in matches else LOG_LABEL
    return JudgeDecision(label=label, raw_response=response)
