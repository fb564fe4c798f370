from pathlib import Path

import numpy as np
import pytest

from horizon_hedge import garch
from horizon_hedge.data import AlignedPair, ReturnSeries

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_CONFIG = ROOT / "configs" / "fixture.yaml"


def make_series(values, start="2001-01-01", h=1, label="x"):
    values = np.asarray(values, dtype=float)
    return ReturnSeries(garch.business_dates(len(values), start), values, h, label)


def make_pair(cash, futures, start="2001-01-01", h=1):
    return AlignedPair(make_series(cash, start, h, "cash"), make_series(futures, start, h, "futures"))


def write_csv(path, rows, header="date,price"):
    path.write_text(header + "\n" + "\n".join(f"{d},{p}" for d, p in rows) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# (criterion, description, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit, desc, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: (int(r[0].rstrip("ab")), r[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {crit}: {desc} | {detail}")
