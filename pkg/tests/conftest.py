"""Suite-wide hooks.

Every ball-count check the referee runs goes through a recording wrapper, so
a failure anywhere fails the test that produced it and the acceptance run can
report how many checks the whole suite made.  Acceptance tests are moved to
the end of the run and summarised with one PASS/FAIL line per criterion.
"""

import sys

import pytest

from cantor_games import game

_inner = game.ball_count_check
BALL = {"calls": 0, "bad": []}


def _recorded(state, c=1, slots=None):
    res = _inner(state, c, slots)
    # only the referee's own checks count; unit tests probe violations on purpose
    if c == 1 and sys._getframe(1).f_globals.get("__name__") == game.__name__:
        BALL["calls"] += 1
        if res is not None:
            BALL["bad"].append(res)
    return res


_recorded.ledger = BALL
game.ball_count_check = _recorded

VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_collection_modifyitems(config, items):
    items.sort(key=lambda it: it.get_closest_marker("criterion") is not None)


@pytest.fixture(autouse=True)
def _ball_guard():
    before = len(BALL["bad"])
    yield
    fresh = BALL["bad"][before:]
    assert not fresh, f"ball-count check failed at {fresh[0]}"


@pytest.fixture
def note(request):
    """Attach a short detail string to the running criterion's verdict line."""
    notes = []
    request.node.crit_notes = notes
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, title = mark.args
    slot = VERDICTS.setdefault(n, {"title": title, "ok": True, "notes": []})
    slot["ok"] &= rep.passed
    slot["notes"] += getattr(item, "crit_notes", [])
    if not rep.passed:
        slot["notes"].append(f"{item.name} {rep.when} failed")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(VERDICTS):
        v = VERDICTS[n]
        detail = "; ".join(v["notes"])
        tr.write_line(f"{'PASS' if v['ok'] else 'FAIL'} criterion {n}: {v['title']}"
                      + (f" [{detail}]" if detail else ""))
    tr.write_line(f"ball-count checks (c=1) recorded across the suite: {BALL['calls']}, "
                  f"failures: {len(BALL['bad'])}")
