import pytest

CRITERIA = {
    1: "Table 1 reproduction",
    2: "Tables 2 and 3 reproduction",
    3: "Tables 4-8 reproduction",
    4: "optimal-parameter recovery",
    5: "identity suite",
    6: "convergence order",
    7: "Hamiltonian identities",
    8: "determinism",
}

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.fixture
def criterion(request):
    """Recorder for acceptance sub-checks: ``criterion(n, name, ok, detail)``."""
    store = request.config.stash[_KEY]

    def record(n, name, ok, detail=""):
        store.setdefault(n, []).append((name, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_KEY, {})
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        checks = store.get(n)
        if not checks:
            tr.write_line(f"criterion {n} ({title}): NOT RUN")
            continue
        bad = [c for c in checks if not c[1]]
        status = "PASS" if not bad else "FAIL"
        tr.write_line(f"criterion {n} ({title}): {status} "
                      f"({len(checks) - len(bad)}/{len(checks)} checks)")
        for name, _, detail in bad:
            tr.write_line(f"    failed: {name}: {detail}")
