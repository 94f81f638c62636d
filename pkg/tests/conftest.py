import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import artifacts  # noqa: E402
from sqlgrpo.corpus import movies_fixture, movies_schema  # noqa: E402

GOLD = ("SELECT actor.name FROM actor JOIN casting ON actor.id = casting.actorid "
        "GROUP BY actor.id, actor.name HAVING COUNT(DISTINCT casting.movieid) > 3")
VARIANT = ("SELECT actor.name FROM actor JOIN casting ON actor.id = casting.actorid "
           "GROUP BY actor.id HAVING COUNT(*) >= 3")


@pytest.fixture(scope="session")
def movies():
    return movies_schema()


@pytest.fixture(scope="session")
def fixture_state():
    return movies_fixture()


@pytest.fixture(scope="session")
def work_root(tmp_path_factory):
    return tmp_path_factory.mktemp("work")


@pytest.fixture(scope="session")
def train_ds(work_root):
    return artifacts.corpus(work_root)[0]


@pytest.fixture(scope="session")
def dev_ds(work_root):
    return artifacts.corpus(work_root)[1]


@pytest.fixture(scope="session")
def trained_encoder(train_ds, dev_ds):
    """(encoder, log) after the default two-epoch training run."""
    return artifacts.trained_encoder(train_ds, dev_ds)[0]


def pytest_terminal_summary(terminalreporter):
    if not artifacts.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(artifacts.RESULTS):
        ok, detail = artifacts.RESULTS[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
