import numpy as np
import pytest

from repcount.synth import ALL_CASES, CaseParams, generate_case, stationary_corpus, write_sequence


@pytest.fixture(scope="session")
def case_corpus(tmp_path_factory):
    """The 18 default synthetic cases written to disk."""
    root = tmp_path_factory.mktemp("cases")
    for case in ALL_CASES:
        write_sequence(generate_case(case, CaseParams()), root / case.slug)
    return root


@pytest.fixture(scope="session")
def stationary_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("stationary")
    for name, seq in stationary_corpus(20, seed=0):
        write_sequence(seq, root / name)
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
