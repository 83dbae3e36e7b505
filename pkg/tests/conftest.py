import numpy as np
import pytest

from vidmark import cli
from vidmark import watermark as wm


def corpus_entry(index):
    name, video = cli.corpus_video(index, seed=0)
    plan = wm.plan_groups(video)
    bits = cli.corpus_payload(index, 0, plan.group_count)
    return name, video, bits


@pytest.fixture(scope="session")
def corpus():
    """The five-video synthetic corpus used by the benchmark (seed 0)."""
    return [corpus_entry(i) for i in range(cli.CORPUS_SIZE)]


@pytest.fixture(scope="session")
def embedded_corpus(corpus):
    """(name, original, marked, bits) for every corpus video at default settings."""
    return [(name, video, wm.embed_sequence(video, bits), bits) for name, video, bits in corpus]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store one PASS/FAIL line per acceptance criterion and echo it."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
