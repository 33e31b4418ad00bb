import os

os.environ.setdefault("VADTRANSFER_QUIET", "1")

import numpy as np
from scipy.special import expit
import pytest

from vadtransfer import *


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run the acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale test, needs --run-slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


SMALL_COUNTS = (6, 4, 4)


@pytest.fixture(scope="session")
def clean_pool(tmp_path_factory):
    return write_clean_pool(str(tmp_path_factory.mktemp("clean_pool")), sum(SMALL_COUNTS), seed=3)


def _make_corpus(tmp_path_factory, clean_pool, kind, seed):
    root = tmp_path_factory.mktemp(f"corpus_{kind}")
    noise = synthesize_noise(kind, 20.0, seed=seed)
    manifest = synthesize_corpus(clean_pool, noise, 5.0, SMALL_COUNTS, seed, str(root / kind), noise_type=kind)
    extract_corpus_features(manifest, thread_count=2)
    return read_manifest(manifest.path)


@pytest.fixture(scope="session")
def car_corpus(tmp_path_factory, clean_pool):
    return _make_corpus(tmp_path_factory, clean_pool, NoiseKinds.Car, 11)


@pytest.fixture(scope="session")
def babble_corpus(tmp_path_factory, clean_pool):
    return _make_corpus(tmp_path_factory, clean_pool, NoiseKinds.Babble, 12)


@pytest.fixture
def tiny_cfg():
    return TrainConfig(lr_pretrain=0.004, epochs_pretrain=3, lr_finetune=0.005, epochs_finetune=3, batch_size=64,
                       seed=1, hidden_widths=(8, 4, 3), checkpoint_every=1)


@pytest.fixture
def fresh_caches():
    ExperimentManager.clear_feature_cache()
    SourceStackCache.reset()
    yield
    SourceStackCache.reset()


@pytest.fixture
def unit_pair():
    rng = np.random.default_rng(0)
    clean = rng.uniform(0.0, 1.0, size=(200, 12))
    noisy = np.clip(clean + rng.normal(0.0, 0.1, size=clean.shape), 0.0, 1.0)
    return PretrainPair(FeatureMatrix(noisy), FeatureMatrix(clean))


@pytest.fixture(scope="session")
def low_rank_pair():
    # 2000 full-width rows driven by 3 latent factors, plus 10% noise on the noisy side
    rng = np.random.default_rng(2000)
    latent = rng.normal(size=(2000, 3))
    mixing = rng.normal(size=(3, FEATURE_DIM))
    clean = expit(3.0 * latent @ mixing / np.sqrt(3.0))
    noisy = np.clip(clean + rng.normal(0.0, 0.1, size=clean.shape), 0.0, 1.0)
    return PretrainPair(FeatureMatrix(noisy), FeatureMatrix(clean))


def tone(freq_hz, duration_s=1.0, amplitude=0.5, sample_rate=SignalDefaultParams.SampleRate):
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    return AudioSignal(amplitude * np.sin(2 * np.pi * freq_hz * t), sample_rate)
