import pytest

from gvdep.gbt import TrainConfig
from gvdep.ingest import load_corpus
from gvdep.pipeline import Dataset
from gvdep.synthetic import generate_corpus

SYN_COMPETITION, SYN_SEASON = 9001, 1

# small enough that a full out-of-fold run takes seconds
FAST = TrainConfig(n_trees=8, max_depth=3)


@pytest.fixture(scope="session")
def syn_root(tmp_path_factory):
    return generate_corpus(tmp_path_factory.mktemp("opendata"), competition_id=SYN_COMPETITION,
                           season_id=SYN_SEASON, seed=7)


@pytest.fixture(scope="session")
def syn_corpus(syn_root):
    return load_corpus(syn_root, SYN_COMPETITION, SYN_SEASON)


@pytest.fixture(scope="session")
def syn_dataset(syn_corpus):
    return Dataset(syn_corpus)
