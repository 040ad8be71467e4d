from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cycprop.graph import build_graph
from cycprop.ingest import Dataset, load_dataset
from cycprop.synthetic import sbm_dataset

settings.register_profile("repo", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

REPO = Path(__file__).resolve().parents[1]
CORA_DIR = REPO / "data" / "cora"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def cora() -> Dataset:
    return load_dataset(CORA_DIR / "graph.tsv", CORA_DIR / "attrs.tsv", CORA_DIR / "labels.tsv")


@pytest.fixture
def sbm() -> Dataset:
    return sbm_dataset(seed=0)


@pytest.fixture
def triangle():
    return build_graph([(0, 1), (1, 2), (2, 0)], 3)


def random_graph(rng: np.random.Generator, n: int, p: float):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return build_graph(np.argwhere(upper), n)
