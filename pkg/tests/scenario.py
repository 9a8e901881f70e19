"""Fully scripted five-method pipeline scenario shared across tests.

Method m1 is gated NO_LOG; m2 runs both agents without tools; m3..m5 exercise
each tool. Golden final codes live in tests/golden/ and drive both the
scripted generator replies and the byte-exact assertions.
"""

import json
from pathlib import Path

from logsmith.corpus import record_from_source
from logsmith.retrieval import RetrievalPair, build_index

GOLDEN_DIR = Path(__file__).parent / "golden"

M1 = """class A {
  int idle() {
    return 0;
  }
}
"""

M2 = """class A {
  void greet(String name) {
    prepare(name);
    send(name);
  }
}
"""

M3 = """class A {
  int accumulate(int[] values) {
    int total = 0;
    for (int i = 0; i < values.length; i++) {
      total += values[i];
    }
    return total;
  }
}
"""

M4 = """class A {
  String fetch(String key) {
    try {
      return lookup(key);
    } catch (RuntimeException e) {
      fallback(key);
      return null;
    }
  }
}
"""

M5 = """class A {
  void drain(Queue queue) {
    int seen = 0;
    while (!queue.isEmpty()) {
      queue.poll();
      seen++;
    }
    finish(seen);
  }
}
"""

SOURCES = {"m1": M1, "m2": M2, "m3": M3, "m4": M4, "m5": M5}

# tag goes on the line that the golden log occupies in the final code
TAG_LINES = {"m2": 4, "m3": 7, "m4": 6, "m5": 8}


def golden_final(method_id: str) -> str:
    return (GOLDEN_DIR / f"final_{method_id}.java").read_text(encoding="utf-8").rstrip("\n")


def tagged_code(method_id: str) -> str:
    lines = SOURCES[method_id].rstrip("\n").splitlines()
    lines.insert(TAG_LINES[method_id] - 1, "<<need_logging>>")
    return "\n".join(lines)


def records():
    return [record_from_source(mid, SOURCES[mid], f"{mid}.java")
            for mid in ("m1", "m2", "m3", "m4", "m5")]


def make_index():
    logged = """class A {
  void ship(Order order) {
    validate(order);
    log.info("shipping order {}", order.getId());
    dispatch(order);
  }
}
"""
    unlogged = "\n".join(line for line in logged.splitlines()
                         if "log.info" not in line) + "\n"
    return build_index([RetrievalPair("ship::pair0", unlogged, logged)])


def _command(tool: str, args: dict) -> str:
    return json.dumps({"thoughts": f"consult {tool}", "command": {"tool": tool, "args": args}})


def _final(code: str) -> str:
    return "Final answer:\n```java\n" + code + "\n```"


def judger_script() -> list[str]:
    return ["NO_LOG", "LOG", "LOG", "LOG", "LOG"]


def agent_script() -> list[str]:
    return [
        # m2: locator final, generator final
        _final(tagged_code("m2")),
        _final(golden_final("m2")),
        # m3: locator tool + final, generator tool + final
        _command("variable_extractor", {"line": 6}),
        _final(tagged_code("m3")),
        _command("similar_case_retrieval", {}),
        _final(golden_final("m3")),
        # m4: locator two tools + final, generator final
        _command("backward_slicing", {"line": 6}),
        _command("similar_case_retrieval", {}),
        _final(tagged_code("m4")),
        _final(golden_final("m4")),
        # m5: locator tool + final, generator tool + final
        _command("backward_slicing", {"line": 8}),
        _final(tagged_code("m5")),
        _command("variable_extractor", {"line": 8}),
        _final(golden_final("m5")),
    ]


EXPECTED = {
    "m1": {"decision": "NO_LOG", "located_line": None, "tool_calls": 0},
    "m2": {"decision": "LOG", "located_line": 4, "tool_calls": 0},
    "m3": {"decision": "LOG", "located_line": 7, "tool_calls": 2},
    "m4": {"decision": "LOG", "located_line": 6, "tool_calls": 2},
    "m5": {"decision": "LOG", "located_line": 8, "tool_calls": 2},
}


def gold_records():
    from logsmith.analysis import LogLevel
    from logsmith.metrics import GoldRecord

    details = {
        "m2": (LogLevel.INFO, "greeting {}", ["name"]),
        "m3": (LogLevel.DEBUG, "accumulated total={}", ["total"]),
        "m4": (LogLevel.ERROR, "lookup failed for {}", ["key", "e"]),
        "m5": (LogLevel.INFO, "drained {} entries", ["seen"]),
    }
    out = [GoldRecord(method_id="m1", label="NO_LOG", code=M1)]
    for mid, (level, template, variables) in details.items():
        out.append(GoldRecord(method_id=mid, label="LOG", code=SOURCES[mid],
                              insert_line=TAG_LINES[mid], level=level,
                              template=template, variables=variables))
    return out


def scripted_config() -> dict:
    return {
        "max_turns": 6,
        "global_timeout": 30,
        "retry_limit": 2,
        "retrieval_k": 1,
        "judger_backend": {"kind": "scripted", "responses": judger_script()},
        "agent_backend": {"kind": "scripted", "responses": agent_script()},
    }
