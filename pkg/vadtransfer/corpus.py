import os
import json

import numpy as np

from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union
from .utils import *
from .audio import AudioSignal, read_wav, write_wav, mix_at_snr, frame_labels_from_clean, frame_count, \
    frame_params, write_labels, read_labels
from .features import extract_all
from .feature_store import FeatureMatrix, Normalizer, apply_normalizer, fit_normalizer, write_feature_file, \
    read_feature_file, export_feature_csv, write_normalizer_csv, read_normalizer_csv

#   --------------------------------------------------------------------------------------------------------------------
#
#   Synthetic noisy-speech corpora: synthesis, manifests, adaptation segments and feature loading
#
#   Layout -> <corpus>/manifest.json, <corpus>/<split>/<id>.{noisy.wav, clean.wav, labels.txt, noisy.feat, clean.feat}
#
#   --------------------------------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    split: str
    noisy: str  # paths are relative to the corpus root
    clean: str
    labels: str
    n_samples: int
    clean_source: str = ""
    noise_offset: int = 0
    clipped: int = 0

    def feature_path(self, which: str) -> str:
        base = os.path.join(self.split, self.id)
        suffix = CorpusDefaultParams.NoisyFeatSuffix if which == "noisy" else CorpusDefaultParams.CleanFeatSuffix
        return f"{base}{suffix}"


@dataclass
class CorpusManifest:
    noise_type: str
    snr_db: float = SignalDefaultParams.SnrDb
    utterances: List[UtteranceRecord] = field(default_factory=list)
    seed: int = 0
    sample_rate: int = SignalDefaultParams.SampleRate
    noise_source: str = ""
    root: str = ""  # directory holding manifest.json, not serialized

    @property
    def path(self) -> str:
        return os.path.join(self.root, CorpusDefaultParams.ManifestName)

    @property
    def normalizer_path(self) -> str:
        return os.path.join(self.root, CorpusDefaultParams.NormalizerName)

    def resolve(self, relative: str) -> str:
        return os.path.join(self.root, relative)

    def split(self, name: str) -> List[UtteranceRecord]:
        if name not in [s.value for s in SplitNames]:
            raise InvalidSplitName(name)
        return [utt for utt in self.utterances if utt.split == name]

    def record(self, utterance_id: str) -> UtteranceRecord:
        for utt in self.utterances:
            if utt.id == utterance_id:
                return utt
        raise MissingCorpusFile(f"{self.root}:{utterance_id}")

    def counts(self) -> Dict[str, int]:
        return {s.value: len(self.split(s.value)) for s in SplitNames}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "noise_type": self.noise_type,
            "snr_db": self.snr_db,
            "seed": self.seed,
            "sample_rate": self.sample_rate,
            "noise_source": self.noise_source,
            "counts": self.counts(),
            "utterances": [asdict(utt) for utt in self.utterances],
        }

    def write(self, root: Optional[str] = None):
        if root:
            self.root = root
        Path(self.root).mkdir(parents=True, exist_ok=True)
        with open(self.path, "w") as mf:
            json.dump(self.to_dict(), mf, indent=2, sort_keys=True)
            mf.write("\n")


def read_manifest(path: str) -> CorpusManifest:
    if os.path.isdir(path):
        path = os.path.join(path, CorpusDefaultParams.ManifestName)
    if not os.path.isfile(path):
        raise MissingCorpusFile(path)
    try:
        with open(path, "r") as mf:
            data = json.load(mf)
        utterances = [UtteranceRecord(**utt) for utt in data["utterances"]]
        return CorpusManifest(noise_type=data["noise_type"], snr_db=float(data["snr_db"]), utterances=utterances,
                              seed=int(data.get("seed", 0)),
                              sample_rate=int(data.get("sample_rate", SignalDefaultParams.SampleRate)),
                              noise_source=data.get("noise_source", ""),
                              root=os.path.dirname(os.path.abspath(path)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidExperimentConfig(f"malformed manifest {path}: {exc}")


def _split_assignment(counts: Sequence[int]) -> List[str]:
    names = [SplitNames.Train, SplitNames.Dev, SplitNames.Test]
    return [name for name, count in zip(names, counts) for _ in range(count)]


def synthesize_corpus(clean_pool: Sequence[str], noise: Union[str, AudioSignal], snr_db: float,
                      counts: Sequence[int], seed: int, out_dir: str, noise_type: Optional[str] = None,
                      thread_count: int = 1, progress: Optional[Callable[[str], None]] = None) -> CorpusManifest:
    """
    Mix randomly chosen clean utterances with random-offset noise excerpts and split them train/dev/test.

    :param clean_pool: clean 16-bit PCM wav paths
    :param noise: noise wav path or an already loaded signal
    :param counts: (train, dev, test) utterance counts
    """
    required = sum(counts)
    if len(clean_pool) < required:
        raise InsufficientCleanPool(len(clean_pool), required)
    noise_signal = read_wav(noise) if isinstance(noise, str) else noise
    if noise_signal.power <= 0:
        raise ZeroPowerSignal("noise")
    noise_source = os.path.basename(noise) if isinstance(noise, str) else (noise_type or "")
    noise_type = noise_type or os.path.splitext(noise_source)[0]

    rng = derive_rng(seed)
    pool = sorted(clean_pool)
    chosen = rng.permutation(len(pool))[:required]
    offsets = rng.integers(0, len(noise_signal), size=required)
    splits = _split_assignment(counts)
    split_index = {name: 0 for name in set(splits)}
    jobs = list()
    for pool_idx, offset, split in zip(chosen, offsets, splits):
        jobs.append((f"{split}_{split_index[split]:04d}", split, pool[pool_idx], int(offset)))
        split_index[split] += 1

    for split in set(splits):
        Path(os.path.join(out_dir, split)).mkdir(parents=True, exist_ok=True)

    def mix_one(job) -> UtteranceRecord:
        utt_id, split, clean_path, offset = job
        clean = read_wav(clean_path)
        if clean.sample_rate != noise_signal.sample_rate:
            raise SampleRateMismatch(clean.sample_rate, noise_signal.sample_rate)
        noisy = mix_at_snr(clean, noise_signal, snr_db, offset)
        base = os.path.join(split, utt_id)
        record = UtteranceRecord(id=utt_id, split=split, noisy=f"{base}{CorpusDefaultParams.NoisySuffix}",
                                 clean=f"{base}{CorpusDefaultParams.CleanSuffix}",
                                 labels=f"{base}{CorpusDefaultParams.LabelSuffix}",
                                 n_samples=len(clean), clean_source=os.path.basename(clean_path),
                                 noise_offset=offset, clipped=noisy.clipped)
        write_wav(os.path.join(out_dir, record.noisy), noisy)
        write_wav(os.path.join(out_dir, record.clean), clean)
        write_labels(os.path.join(out_dir, record.labels), frame_labels_from_clean(clean))
        if progress:
            progress(f"mixed {utt_id} <- {record.clean_source}")
        return record

    records = run_in_threads(jobs, mix_one, thread_count)
    manifest = CorpusManifest(noise_type=noise_type, snr_db=float(snr_db), utterances=records, seed=seed,
                              sample_rate=noise_signal.sample_rate, noise_source=noise_source, root=out_dir)
    manifest.write()
    return manifest

# ========= Adaptation segment


@dataclass(frozen=True)
class Fragment:
    utterance_id: str
    start: int  # samples, inclusive
    end: int  # samples, exclusive

    @property
    def n_samples(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class AdaptationSegment:
    noise_type: str
    duration_s: float
    fragments: Tuple[Fragment, ...] = tuple()
    sample_rate: int = SignalDefaultParams.SampleRate

    def __len__(self) -> int:
        return len(self.fragments)

    @property
    def total_duration(self) -> float:
        return sum(f.n_samples for f in self.fragments) / self.sample_rate

    @property
    def is_empty(self) -> bool:
        return not self.fragments

    @classmethod
    def from_split(cls, manifest: CorpusManifest, split: str = SplitNames.Train) -> "AdaptationSegment":
        fragments = tuple(Fragment(utt.id, 0, utt.n_samples) for utt in manifest.split(split))
        total = sum(f.n_samples for f in fragments) / manifest.sample_rate
        return cls(manifest.noise_type, total, fragments, manifest.sample_rate)


def draw_adaptation_segment(manifest: CorpusManifest, duration_s: float = CorpusDefaultParams.SegmentSeconds,
                            seed: int = TransferDefaultParams.SegmentSeed) -> AdaptationSegment:
    if duration_s <= 0:
        return AdaptationSegment(manifest.noise_type, 0.0, tuple(), manifest.sample_rate)
    train = manifest.split(SplitNames.Train)
    available = sum(utt.n_samples for utt in train)
    budget = int(round(duration_s * manifest.sample_rate))
    if available < budget:
        raise InsufficientTrainAudio(available / manifest.sample_rate, duration_s)

    order = derive_rng(seed, name_seed(manifest.noise_type)).permutation(len(train))
    picked = dict()
    remaining = budget
    for idx in order:
        if remaining <= 0:
            break
        take = min(train[idx].n_samples, remaining)
        picked[int(idx)] = Fragment(train[idx].id, 0, take)  # whole utterances, the last one trimmed
        remaining -= take
    fragments = tuple(picked[idx] for idx in sorted(picked))
    return AdaptationSegment(manifest.noise_type, duration_s, fragments, manifest.sample_rate)

# ========= Features


def extract_utterance(manifest: CorpusManifest, record: UtteranceRecord) -> Tuple[np.ndarray, np.ndarray]:
    noisy = extract_all(read_wav(manifest.resolve(record.noisy))).rows
    clean = extract_all(read_wav(manifest.resolve(record.clean))).rows
    if noisy.shape[0] != clean.shape[0]:
        raise RowCountMismatch(record.id, noisy.shape[0], clean.shape[0])
    return noisy, clean


def extract_corpus_features(manifest: CorpusManifest, thread_count: int = 1, export_csv: bool = False,
                            progress: Optional[Callable[[str], None]] = None) -> Normalizer:
    """
    Write noisy/clean feature files for every utterance and the corpus normalizer (fit on the noisy and clean
    train rows). Returns that normalizer.
    """
    def extract_one(record: UtteranceRecord):
        noisy, clean = extract_utterance(manifest, record)
        for which, rows in (("noisy", noisy), ("clean", clean)):
            path = manifest.resolve(record.feature_path(which))
            write_feature_file(path, rows)
            if export_csv:
                labels = read_labels(manifest.resolve(record.labels)) if which == "noisy" else None
                export_feature_csv(f"{os.path.splitext(path)[0]}{FeatureFileParams.CsvExtension}", rows,
                                   labels if labels is not None and labels.shape[0] == rows.shape[0] else None)
        if progress:
            progress(f"extracted {record.id} ({noisy.shape[0]} frames)")

    run_in_threads(manifest.utterances, extract_one, thread_count)
    noisy, clean = load_raw_features(manifest, SplitNames.Train, with_labels=False)
    normalizer = fit_normalizer([noisy, clean], source=f"{manifest.noise_type}:{SplitNames.Train}:noisy+clean")
    write_normalizer_csv(manifest.normalizer_path, normalizer)
    return normalizer


def read_corpus_normalizer(manifest: CorpusManifest) -> Normalizer:
    return read_normalizer_csv(manifest.normalizer_path)


def _utterance_rows(manifest: CorpusManifest, record: UtteranceRecord) -> Tuple[np.ndarray, np.ndarray]:
    noisy_path = manifest.resolve(record.feature_path("noisy"))
    clean_path = manifest.resolve(record.feature_path("clean"))
    if os.path.isfile(noisy_path) and os.path.isfile(clean_path):
        noisy, clean = read_feature_file(noisy_path), read_feature_file(clean_path)
    else:
        noisy, clean = extract_utterance(manifest, record)
    if noisy.shape[0] != clean.shape[0]:
        raise RowCountMismatch(record.id, noisy.shape[0], clean.shape[0])
    return noisy, clean


def _utterance_labels(manifest: CorpusManifest, record: UtteranceRecord, n_frames: int) -> np.ndarray:
    path = manifest.resolve(record.labels)
    labels = read_labels(path)
    if labels.shape[0] != n_frames:
        raise LabelLengthMismatch(path, labels.shape[0], n_frames)
    return labels


def load_raw_features(manifest: CorpusManifest, split: str, with_labels: bool = True, audit=None,
                      purpose: str = AuditPurpose.Pretrain) -> Tuple[FeatureMatrix, FeatureMatrix]:
    """
    Unnormalized (noisy, clean) matrices of a split, row-aligned. Labels are read only when asked for, and
    every label read is reported to `audit` first.
    """
    records = manifest.split(split)
    if with_labels and audit is not None:
        audit.record_label_read(manifest, split, purpose, [r.id for r in records])
    noisy_parts, clean_parts = list(), list()
    for record in records:
        noisy, clean = _utterance_rows(manifest, record)
        labels = _utterance_labels(manifest, record, noisy.shape[0]) if with_labels else None
        ids = [record.id] * noisy.shape[0]
        noisy_parts.append(FeatureMatrix(noisy, labels, ids))
        clean_parts.append(FeatureMatrix(clean, None, list(ids)))
    return FeatureMatrix.concat(noisy_parts), FeatureMatrix.concat(clean_parts)


def load_features(manifest: CorpusManifest, split: str, normalizer: Normalizer, with_labels: bool = True,
                  audit=None, purpose: str = AuditPurpose.Pretrain) -> Tuple[FeatureMatrix, FeatureMatrix]:
    noisy, clean = load_raw_features(manifest, split, with_labels, audit, purpose)
    return apply_normalizer(normalizer, noisy), apply_normalizer(normalizer, clean)


def fragment_frame_mask(fragment: Fragment, n_frames: int, sample_rate: int) -> np.ndarray:
    frame_length, frame_shift = frame_params(sample_rate)
    starts = np.arange(n_frames) * frame_shift
    return (starts >= fragment.start) & (starts + frame_length <= fragment.end)


def load_raw_segment_features(manifest: CorpusManifest,
                              segment: AdaptationSegment) -> Tuple[FeatureMatrix, FeatureMatrix]:
    """
    Unlabeled (noisy, clean) rows of the frames lying completely inside the segment's fragments.
    """
    noisy_parts, clean_parts = list(), list()
    for fragment in segment.fragments:
        record = manifest.record(fragment.utterance_id)
        noisy, clean = _utterance_rows(manifest, record)
        mask = fragment_frame_mask(fragment, noisy.shape[0], manifest.sample_rate)
        ids = [record.id] * int(mask.sum())
        noisy_parts.append(FeatureMatrix(noisy[mask], None, ids))
        clean_parts.append(FeatureMatrix(clean[mask], None, list(ids)))
    return FeatureMatrix.concat(noisy_parts), FeatureMatrix.concat(clean_parts)


def load_segment_features(manifest: CorpusManifest, segment: AdaptationSegment,
                          normalizer: Normalizer) -> Tuple[FeatureMatrix, FeatureMatrix]:
    noisy, clean = load_raw_segment_features(manifest, segment)
    return apply_normalizer(normalizer, noisy), apply_normalizer(normalizer, clean)


def expected_rows(manifest: CorpusManifest, split: str) -> int:
    length, shift = frame_params(manifest.sample_rate)
    return sum(frame_count(utt.n_samples, length, shift) for utt in manifest.split(split))
