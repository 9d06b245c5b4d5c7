import pytest

from _support import featurized


@pytest.fixture(scope="session")
def corpus_1000():
    return featurized(500, 7, "synthetic")


@pytest.fixture(scope="session")
def corpus_small():
    return featurized(60, 3, "small")


def pytest_terminal_summary(terminalreporter):
    from _support import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(RESULTS):
        ok, title, secs, bound = RESULTS[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid:>2}. {title} ({secs:.2f}s, limit {bound:g}s)")
