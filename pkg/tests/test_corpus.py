import os
import shutil
import filecmp

import numpy as np
import pytest

from vadtransfer import *
from conftest import SMALL_COUNTS


def test_manifest_layout(car_corpus):
    assert car_corpus.noise_type == NoiseKinds.Car
    assert car_corpus.counts() == dict(zip(("train", "dev", "test"), SMALL_COUNTS))
    assert os.path.isfile(car_corpus.path)
    assert os.path.isfile(car_corpus.normalizer_path)
    for utt in car_corpus.utterances:
        for relative in (utt.noisy, utt.clean, utt.labels, utt.feature_path("noisy"), utt.feature_path("clean")):
            assert os.path.isfile(car_corpus.resolve(relative))
        assert utt.noisy.startswith(utt.split + os.sep)


def test_splits_use_disjoint_clean_utterances(car_corpus):
    sources = {name: {u.clean_source for u in car_corpus.split(name)} for name in ("train", "dev", "test")}
    assert not sources["train"] & sources["dev"]
    assert not sources["train"] & sources["test"]
    assert not sources["dev"] & sources["test"]


def test_synthesis_is_deterministic(tmp_path, clean_pool):
    noise = synthesize_noise(NoiseKinds.Street, 8.0, seed=2)
    a = synthesize_corpus(clean_pool, noise, 5.0, (2, 1, 1), 7, str(tmp_path / "a"), noise_type="street")
    b = synthesize_corpus(clean_pool, noise, 5.0, (2, 1, 1), 7, str(tmp_path / "b"), noise_type="street")
    assert a.to_dict() == b.to_dict()
    for utt in a.utterances:
        assert filecmp.cmp(a.resolve(utt.noisy), b.resolve(utt.noisy), shallow=False)
    c = synthesize_corpus(clean_pool, noise, 5.0, (2, 1, 1), 8, str(tmp_path / "c"), noise_type="street")
    assert [u.noise_offset for u in c.utterances] != [u.noise_offset for u in a.utterances]


def test_noisy_files_hold_the_requested_snr(car_corpus):
    utt = next(u for u in car_corpus.utterances if u.clipped == 0)
    noisy, clean = read_wav(car_corpus.resolve(utt.noisy)), read_wav(car_corpus.resolve(utt.clean))
    noise = noisy.samples - clean.samples
    measured = 10.0 * np.log10(clean.power / np.mean(noise ** 2))
    assert abs(measured - car_corpus.snr_db) < 0.1  # pcm quantization


def test_synthesis_errors(tmp_path, clean_pool):
    noise = synthesize_noise(NoiseKinds.Car, 4.0, seed=1)
    with pytest.raises(InsufficientCleanPool):
        synthesize_corpus(clean_pool[:2], noise, 5.0, (2, 1, 1), 0, str(tmp_path / "x"))
    with pytest.raises(ZeroPowerSignal):
        synthesize_corpus(clean_pool, AudioSignal(np.zeros(8000)), 5.0, (1, 1, 1), 0, str(tmp_path / "y"))


def test_read_manifest_errors(tmp_path, car_corpus):
    with pytest.raises(MissingCorpusFile):
        read_manifest(str(tmp_path / "nothing"))
    (tmp_path / "manifest.json").write_text('{"noise_type": "car"}')
    with pytest.raises(InvalidExperimentConfig):
        read_manifest(str(tmp_path))
    with pytest.raises(InvalidSplitName):
        car_corpus.split("validation")
    assert read_manifest(car_corpus.root).to_dict() == car_corpus.to_dict()


def test_feature_rows_match_frame_counts(car_corpus):
    noisy, clean = load_raw_features(car_corpus, "train")
    assert len(noisy) == len(clean) == expected_rows(car_corpus, "train")
    assert noisy.dim == FEATURE_DIM
    assert noisy.is_labeled and not clean.is_labeled
    assert sorted(set(noisy.utterance_ids)) == sorted(u.id for u in car_corpus.split("train"))

    unlabeled, _ = load_raw_features(car_corpus, "dev", with_labels=False)
    assert not unlabeled.is_labeled


def test_normalized_training_rows(car_corpus):
    normalizer = read_corpus_normalizer(car_corpus)
    noisy, clean = load_features(car_corpus, "train", normalizer)
    stacked = np.vstack([noisy.rows, clean.rows])
    assert stacked.min() >= 0.0 and stacked.max() <= 1.0


def test_label_mismatch_is_reported(tmp_path, car_corpus):
    root = str(tmp_path / "copy")
    shutil.copytree(car_corpus.root, root)
    manifest = read_manifest(root)
    utt = manifest.split("dev")[0]
    write_labels(manifest.resolve(utt.labels), [1, 0, 1])
    with pytest.raises(LabelLengthMismatch):
        load_raw_features(manifest, "dev")


def test_adaptation_segment(car_corpus):
    segment = draw_adaptation_segment(car_corpus, 2.5, seed=1)
    assert abs(segment.total_duration - 2.5) <= 0.02 * 2.5
    train_ids = {u.id for u in car_corpus.split("train")}
    assert {f.utterance_id for f in segment.fragments} <= train_ids
    assert draw_adaptation_segment(car_corpus, 2.5, seed=1) == segment

    noisy, clean = load_raw_segment_features(car_corpus, segment)
    assert len(noisy) == len(clean) > 0
    assert not noisy.is_labeled


def test_adaptation_segment_edges(car_corpus):
    empty = draw_adaptation_segment(car_corpus, 0.0)
    assert empty.is_empty and empty.total_duration == 0.0
    with pytest.raises(InsufficientTrainAudio):
        draw_adaptation_segment(car_corpus, 1000.0)

    whole = AdaptationSegment.from_split(car_corpus)
    assert len(whole) == SMALL_COUNTS[0]
    seg_noisy, _ = load_raw_segment_features(car_corpus, whole)
    train_noisy, _ = load_raw_features(car_corpus, "train", with_labels=False)
    assert np.array_equal(seg_noisy.rows, train_noisy.rows)


def test_normalized_segment_features(car_corpus):
    normalizer = read_corpus_normalizer(car_corpus)
    whole = AdaptationSegment.from_split(car_corpus)
    noisy, clean = load_segment_features(car_corpus, whole, normalizer)
    train_noisy, train_clean = load_features(car_corpus, "train", normalizer, with_labels=False)
    assert np.array_equal(noisy.rows, train_noisy.rows)
    assert np.array_equal(clean.rows, train_clean.rows)
    assert not noisy.is_labeled and not clean.is_labeled

    segment = draw_adaptation_segment(car_corpus, 2.5, seed=1)
    noisy, clean = load_segment_features(car_corpus, segment, normalizer)
    raw, _ = load_raw_segment_features(car_corpus, segment)
    assert noisy.rows.shape == raw.rows.shape == clean.rows.shape
    assert noisy.rows.min() >= 0.0 and noisy.rows.max() <= 1.0
    assert np.array_equal(noisy.rows, apply_normalizer(normalizer, raw).rows)


def test_surrogate_clean_speech():
    first = synthesize_clean_utterance(1.0, seed=4)
    assert np.array_equal(first.samples, synthesize_clean_utterance(1.0, seed=4).samples)
    assert len(first) == 8000
    assert np.abs(first.samples).max() <= 1.0
    labels = frame_labels_from_clean(first)
    assert 0 < labels.sum() < len(labels)


def test_surrogate_noise_kinds():
    car = synthesize_noise(NoiseKinds.Car, 2.0, seed=1)
    babble = synthesize_noise(NoiseKinds.Babble, 2.0, seed=1)
    assert len(car) == len(babble) == 16000
    assert car.power > 0 and babble.power > 0
    assert not np.array_equal(car.samples, babble.samples)
    with pytest.raises(InvalidExperimentConfig):
        synthesize_noise("jackhammer", 1.0)
