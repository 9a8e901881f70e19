"""Synthetic Java corpus generator for split/pipeline tests."""

import random

from logsmith.corpus import extract_methods

_METHOD_WITH_LOG = """  int job{k}(int seed{k}) {{
    int value{k} = seed{k} * {mult};
    if (value{k} > 10) {{
      value{k} = value{k} - 1;
    }}
    log.info("job{k} value={{}}", value{k});
    return value{k};
  }}
"""

_METHOD_DOUBLE_LOG = """  int loud{k}(int seed{k}) {{
    int value{k} = seed{k} + {mult};
    log.debug("loud{k} start seed={{}}", seed{k});
    value{k} = value{k} * 2;
    log.info("loud{k} value={{}}", value{k});
    return value{k};
  }}
"""

_METHOD_PLAIN = """  int calc{k}(int seed{k}) {{
    int value{k} = seed{k} + {mult};
    value{k} = value{k} * 3;
    return value{k};
  }}
"""


def synth_file(rng: random.Random, file_no: int, loggy: bool) -> str:
    n_methods = rng.randint(1, 4)
    bodies = []
    for m in range(n_methods):
        k = file_no * 10 + m
        mult = rng.randint(2, 9)
        roll = rng.random()
        if loggy and roll < 0.55:
            template = _METHOD_WITH_LOG
        elif loggy and roll < 0.75:
            template = _METHOD_DOUBLE_LOG
        elif not loggy and roll < 0.12:
            template = _METHOD_WITH_LOG
        else:
            template = _METHOD_PLAIN
        bodies.append(template.format(k=k, mult=mult))
    return f"class F{file_no} {{\n" + "\n".join(bodies) + "}\n"


def synth_corpus(seed: int = 7, n_files: int = 200):
    """Records extracted from n_files generated Java files."""
    rng = random.Random(seed)
    records = []
    for file_no in range(n_files):
        loggy = rng.random() < 0.5
        text = synth_file(rng, file_no, loggy)
        records.extend(extract_methods(text, f"src/F{file_no}.java"))
    return records
