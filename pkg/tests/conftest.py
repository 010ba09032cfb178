import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from narrative_miner import lexicon, synthgen  # noqa: E402

SYNTH_SEED = 7


@pytest.fixture(scope="session")
def synth():
    return synthgen.generate_corpus(synthgen.paper_shaped(0.01), SYNTH_SEED)


@pytest.fixture(scope="session")
def synth_files(tmp_path_factory, synth):
    out = tmp_path_factory.mktemp("synth")
    paths = synthgen.write_synthetic(out, synth, SYNTH_SEED)
    return paths


@pytest.fixture(scope="session")
def synth_corpus(synth):
    return synth.corpus()


@pytest.fixture(scope="session")
def synth_dictionary(synth):
    return lexicon.TermDictionary(dict(synth.dictionary.entries), synth.dictionary.labels)


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
