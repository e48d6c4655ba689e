from typing import Iterator, List

import pytest

from corrtw.tracy_widom import PainleveConfig, TW1Table, tw1_cdf_table


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: mark test as slow to run")


def pytest_collection_modifyitems(
    config: pytest.Config, items: List[pytest.Item]
) -> None:
    if not config.getoption("--runslow"):
        skip_slow = pytest.mark.skip(reason="need --runslow option to run")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def tw1_table() -> TW1Table:
    """The default TW1 table, solved once per session."""
    return tw1_cdf_table(PainleveConfig())


@pytest.fixture(autouse=True)
def isolated_cache(
    tmp_path_factory: pytest.TempPathFactory, monkeypatch: pytest.MonkeyPatch
) -> Iterator[None]:
    """Points the table cache at a per-session directory, clears the seed override."""
    cache = tmp_path_factory.getbasetemp() / "cache"
    monkeypatch.setenv("CORRTW_CACHE_DIR", str(cache))
    monkeypatch.delenv("CORRTW_SEED", raising=False)
    yield
