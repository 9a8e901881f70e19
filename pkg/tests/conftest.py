"""Suite-wide guards: no network, and a hard 60-second budget.

Outbound socket connects are blocked for the whole session, so any code path
that tries to reach the network fails loudly. The session finish hook prints
the suite-budget acceptance line and fails the run if the budget is blown.
"""

import socket
import time

_REAL_CONNECT = socket.socket.connect
_SESSION_START = 0.0

SUITE_BUDGET_SECONDS = 60.0


def _blocked_connect(self, *args, **kwargs):
    raise RuntimeError(f"network access attempted during offline suite: {args}")


def pytest_configure(config):
    socket.socket.connect = _blocked_connect


def pytest_unconfigure(config):
    socket.socket.connect = _REAL_CONNECT


def pytest_sessionstart(session):
    global _SESSION_START
    _SESSION_START = time.monotonic()


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.monotonic() - _SESSION_START
    within = elapsed < SUITE_BUDGET_SECONDS
    verdict = "PASS" if within else "FAIL"
    print(f"\nACCEPTANCE 8 {verdict}: full offline suite finished in "
          f"{elapsed:.2f}s (budget {SUITE_BUDGET_SECONDS:.0f}s, network blocked)")
    if not within and exitstatus == 0:
        session.exitstatus = 1
