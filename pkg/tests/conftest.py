"""
Shared fixtures: rigs, primitive meshes, the tiny preset and a trained tiny model
"""

import pytest

from hoi_dno.datasynth import load_corpus, make_dataset
from hoi_dno.diffusion import cosine_schedule, load_checkpoint, save_checkpoint, train_model
from hoi_dno.dno import DnoConfig
from hoi_dno.geometry import box, icosphere
from hoi_dno.representation import FeatureLayout
from hoi_dno.rig import build_rig
from hoi_dno.run_config import preset


@pytest.fixture(scope="session")
def toy_rig():
    return build_rig("toy")


@pytest.fixture(scope="session")
def omomo_rig():
    return build_rig("omomo")


@pytest.fixture(scope="session")
def unit_cube():
    return box((1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def sphere():
    return icosphere(0.5, subdivisions=2)


@pytest.fixture
def tiny_config():
    return preset("tiny")


@pytest.fixture(scope="session")
def tiny_corpus_dir(tmp_path_factory, toy_rig):
    """Nine ground-truth episodes (every verb and shape once) with a one-third holdout"""
    out = tmp_path_factory.mktemp("corpus")
    make_dataset(out, 9, seed=3, holdout=0.34, rig=toy_rig)
    return out


@pytest.fixture(scope="session")
def tiny_corpus(tiny_corpus_dir, toy_rig):
    return load_corpus(tiny_corpus_dir, rig=toy_rig)


@pytest.fixture(scope="session")
def tiny_checkpoint_path(tmp_path_factory, tiny_corpus_dir, toy_rig):
    """A few training steps of the tiny model; enough for shapes and plumbing, not for quality"""
    config = preset("tiny")
    corpus = load_corpus(tiny_corpus_dir, rig=toy_rig, split="train")
    model = config.model.denoiser_config(FeatureLayout.for_rig(toy_rig).dim, len(corpus.vocab))
    denoiser, normalizer, _ = train_model(
        corpus, toy_rig, model, cosine_schedule(config.model.steps), 3,
        lr=config.training.lr, batch_size=2, seed=0,
    )
    path = tmp_path_factory.mktemp("model") / "tiny.ck"
    save_checkpoint(path, denoiser, normalizer, corpus.vocab, toy_rig, run_config=config.to_dict(), config_hash=config.config_hash())
    return path


@pytest.fixture
def tiny_checkpoint(tiny_checkpoint_path, toy_rig):
    return load_checkpoint(tiny_checkpoint_path, rig=toy_rig)


@pytest.fixture
def quick_dno():
    """Optimizer settings small enough for unit tests"""
    return DnoConfig.grab(iterations=2)
