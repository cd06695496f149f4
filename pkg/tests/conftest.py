"""Shared corpora and stores, built once per session.

Every fixture is seeded, so any test that consumes one sees the exact
same signals and store bytes on every run.
"""

import pytest

from emap import cli as emap_cli
from emap import scenarios
from emap.mdb import build_store


@pytest.fixture(scope="session")
def parity_world(tmp_path_factory):
    """200-slice store with planted matches plus 20 query windows."""
    corpus = scenarios.parity_corpus()
    store = build_store(corpus.store_signals,
                        tmp_path_factory.mktemp("parity") / "store")
    return corpus, store


@pytest.fixture(scope="session")
def prob_world(tmp_path_factory):
    """Live stream whose initial correlation set is 22% anomalous and
    whose normal matches decay on a fixed five-iteration schedule."""
    sc = scenarios.probability_growth_scenario()
    store = build_store(sc.store_signals,
                        tmp_path_factory.mktemp("prob") / "store")
    return sc, store


@pytest.fixture(scope="session")
def overlap_world(tmp_path_factory):
    """Scenario whose alive count hits the call threshold at iteration 3."""
    sc = scenarios.overlap_scenario()
    store = build_store(sc.store_signals,
                        tmp_path_factory.mktemp("overlap") / "store")
    return sc, store


@pytest.fixture(scope="session")
def eval_world(tmp_path_factory):
    """20 anomalous + 20 normal streams with a disjoint reference store."""
    world = scenarios.evaluation_world()
    store = build_store(world.store_signals,
                        tmp_path_factory.mktemp("eval") / "store")
    return world, store


@pytest.fixture(scope="session")
def cli_world(tmp_path_factory):
    """A small on-disk world produced entirely through the CLI."""
    root = tmp_path_factory.mktemp("cliworld")
    world_dir = root / "world"
    rc = emap_cli.main(["--seed", "2026", "synth", "--out", str(world_dir),
                        "--mode", "eval-scenario",
                        "--normal", "2", "--anomalous", "2"])
    assert rc == 0
    rc = emap_cli.main(["build-mdb", "--in", str(world_dir / "store"),
                        "--out", str(world_dir / "mdb")])
    assert rc == 0
    return {
        "root": root,
        "config": world_dir / "config.json",
        "store": world_dir / "mdb",
        "eval": world_dir / "eval",
    }
