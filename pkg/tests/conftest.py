import pytest

from hypercount import counting

_seen: list = []
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def trivial_bound_guard(monkeypatch):
    """Every CountReport built during a test must respect the trivial bound."""
    original = counting.CountReport.__init__
    made = []

    def recording_init(self, *args, **kwargs):
        original(self, *args, **kwargs)
        made.append(self)

    monkeypatch.setattr(counting.CountReport, "__init__", recording_init)
    yield made
    _seen.extend(made)
    bad = [r for r in made if r.degree > 0 and not r.within_trivial_bound()]
    assert not bad, f"trivial bound violated: {[(r.count, r.trivial_bound()) for r in bad]}"


def pytest_terminal_summary(terminalreporter):
    if _seen:
        terminalreporter.write_line(f"trivial-bound guard: {len(_seen)} count reports checked")
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
