import os
import threading
import datetime
import time

import numpy as np

from abc import abstractmethod
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
from .utils import *
from .corpus import CorpusManifest, AdaptationSegment, load_raw_features, load_raw_segment_features
from .feature_store import FeatureMatrix, Normalizer, apply_normalizer, fit_normalizer
from .network import NetworkStack, TrainConfig, PretrainPair, finetune, predict, write_model, pretrain_ddnn
from .evaluation import ResultRow, accuracy


@dataclass
class TransferTask:
    source: CorpusManifest
    target: CorpusManifest
    adaptation: AdaptationSegment
    scheme: str
    depth: int
    cfg: TrainConfig = field(default_factory=TrainConfig)
    run_seeds: Tuple[int, ...] = TransferDefaultParams.RunSeeds
    segment_corpus: Optional[CorpusManifest] = None  # where the segment's fragments live, the target by default

    def __post_init__(self):
        if self.scheme not in [s.value for s in SchemeNames]:
            raise InvalidSchemeName(self.scheme)
        if not 1 <= self.depth <= len(self.cfg.hidden_widths):
            raise InvalidDepth(self.scheme, self.depth)
        if self.scheme in (SchemeNames.Scheme3t, SchemeNames.Scheme3s) and self.depth < 2:
            raise InvalidDepth(self.scheme, self.depth)
        if not self.run_seeds:
            raise InvalidExperimentConfig("at least one run seed is required")
        self.run_seeds = tuple(int(s) for s in self.run_seeds)

    @property
    def pair(self) -> str:
        return f"{self.source.noise_type}{TransferDefaultParams.PairSeparator}{self.target.noise_type}"

    @property
    def segment_manifest(self) -> CorpusManifest:
        return self.segment_corpus or self.target

    def with_scheme(self, scheme: str, depth: Optional[int] = None) -> "TransferTask":
        return replace(self, scheme=scheme, depth=self.depth if depth is None else depth)


@dataclass
class RunRecord:
    pair: str
    depth: int
    scheme: str
    seed: int
    accuracy_pct: Optional[float] = None
    pretrain_s: float = 0.0
    finetune_s: float = 0.0
    stages: Dict[str, float] = field(default_factory=dict)
    best_epoch: int = 0
    error: str = ""
    stack: Optional[NetworkStack] = None

    @property
    def failed(self) -> bool:
        return self.accuracy_pct is None

    def to_result_row(self) -> ResultRow:
        return ResultRow(self.pair, self.depth, self.scheme, self.seed, self.accuracy_pct,
                         self.pretrain_s, self.finetune_s)


@dataclass
class SchemeResult:
    scheme: str
    depth: int
    pair: str
    accuracies: Dict[int, float] = field(default_factory=dict)
    pretrain_seconds: Dict[int, float] = field(default_factory=dict)
    failures: Dict[int, str] = field(default_factory=dict)
    records: List[RunRecord] = field(default_factory=list)

    @property
    def mean(self) -> Optional[float]:
        if not self.accuracies:
            return None
        return float(np.mean([self.accuracies[s] for s in sorted(self.accuracies)]))

    @property
    def mean_pretrain_seconds(self) -> float:
        return float(np.mean(list(self.pretrain_seconds.values()))) if self.pretrain_seconds else 0.0

    @classmethod
    def from_records(cls, records: List[RunRecord]) -> "SchemeResult":
        first = records[0]
        result = cls(first.scheme, first.depth, first.pair, records=list(records))
        for record in records:
            result.pretrain_seconds[record.seed] = record.pretrain_s
            if record.failed:
                result.failures[record.seed] = record.error
            else:
                result.accuracies[record.seed] = record.accuracy_pct
        return result


@dataclass
class PretrainedModel:
    stack: NetworkStack
    normalizer: Normalizer  # applied to every fine-tuning, selection and test row
    stages: Dict[str, float] = field(default_factory=dict)

# ========= Label access audit


@dataclass(frozen=True)
class LabelRead:
    corpus: str
    split: str
    purpose: str
    n_utterances: int


class LabelAccessAudit(object):
    """
    Records every labeled read and the utterances handed to fine-tuning. Reading a protected split's labels
    for anything but evaluation raises.
    """
    _MUTEX = threading.RLock()

    def __init__(self):
        self.reads: List[LabelRead] = list()
        self.finetune_sets: Dict[Tuple[str, int, str, int], Tuple[str, ...]] = dict()
        self._protected = set()

    def protect(self, manifest: CorpusManifest, split: str = SplitNames.Test):
        with LabelAccessAudit._MUTEX:
            self._protected.add((manifest.root, split))

    def record_label_read(self, manifest: CorpusManifest, split: str, purpose: str, utterance_ids: List[str]):
        with LabelAccessAudit._MUTEX:
            self.reads.append(LabelRead(f"{manifest.noise_type}:{manifest.root}", split, purpose, len(utterance_ids)))
            if (manifest.root, split) in self._protected and purpose != AuditPurpose.Evaluate:
                raise LeakedTestLabels(f"{manifest.noise_type}/{split}", purpose)

    def record_finetune(self, key: Tuple[str, int, str, int], corpus: CorpusManifest, utterance_ids: List[str]):
        with LabelAccessAudit._MUTEX:
            self.finetune_sets[key] = (corpus.root,) + tuple(utterance_ids)

    def purposes(self, split: str) -> List[str]:
        return [read.purpose for read in self.reads if read.split == split]

# ========= Managers


class ExperimentManager(object):
    _RUN_COLOR = OutputColors.White
    _WRITE_RESULTS = False  # overwrite for each runner
    _CACHE_MUTEX = threading.RLock()
    _FEATURE_CACHE: Dict[Any, Tuple[FeatureMatrix, FeatureMatrix]] = dict()
    def __init__(self, output_dir: Optional[str] = None, audit: Optional[LabelAccessAudit] = None,
                 thread_count: int = 1, save_models: bool = False, *args, **kwargs):
        self.output_dir = output_dir
        self.audit = audit or LabelAccessAudit()
        self.thread_count = max(1, thread_count)
        self.save_models = save_models and output_dir is not None
        if self.output_dir and self._WRITE_RESULTS:
            Path(self.output_dir).mkdir(parents=True, exist_ok=True)

        self._output_manager = self._output_manager_setup()
        self._current_progress_mutex = threading.RLock()
        self._current_progress_perc = int()

    def _output_manager_setup(self) -> OutputManager:
        om = OutputManager()
        keys = self._define_status_output()
        if keys:
            om.insert_output(self._get_runner_name(), OutputType.Status, keys)
        om.insert_output(TransferDefaultParams.ProgLogName, OutputType.Lines)
        return om

    @lru_cache()
    def _get_runner_name(self, include_ansi=True) -> str:
        return f"{self.__class__._RUN_COLOR if include_ansi else ''}{self.__class__.__name__}"

    def _log_line(self, log_name, line: str):
        self._output_manager.update_lines(log_name, f"{datetime.datetime.now().strftime('%H:%M:%S')}" + line)

    def _log_status(self, lkey: str, lval: Any, refresh_output=True):
        self._output_manager.update_status(self._get_runner_name(), lkey, lval, refresh_output)

    def _log_exception(self, exc_text, fatal: bool):
        self._log_line(TransferDefaultParams.ProgLogName, f" {self.__class__.__name__} exception - {exc_text},"
                                                          f" fatal - {fatal}")

    def _log_progress(self, prog_text):
        self._log_line(TransferDefaultParams.ProgLogName, f" {self.__class__.__name__} {prog_text}")

    def _define_status_output(self) -> Dict[str, Any]:
        status = dict()
        status[OutputStatusKeys.State] = OutputValues.StateSetup
        status[OutputStatusKeys.Current] = OutputValues.EmptyStatusVal
        return status

    def _update_progress_status(self, finished_c, total_c, current: str, force_update=False):
        with self._current_progress_mutex:
            progress = (100 * finished_c) // max(total_c, 1)
            if progress % OutputProgBarParams.ProgBarIntvl == 0 and progress > self._current_progress_perc or \
                    force_update:
                prog_count = progress // OutputProgBarParams.ProgressMod
                prog_str = f"[{('#' * prog_count).ljust(OutputProgBarParams.ProgressMax, '-')}]"
                if self._output_manager.is_key_in_status(self._get_runner_name(), OutputStatusKeys.Progress):
                    self._log_status(OutputStatusKeys.Progress, prog_str, refresh_output=False)
                self._current_progress_perc = progress
            if self._output_manager.is_key_in_status(self._get_runner_name(), OutputStatusKeys.Left):
                self._log_status(OutputStatusKeys.Left, f"{total_c - finished_c} out of {total_c}",
                                 refresh_output=False)
            self._log_status(OutputStatusKeys.Current, current)

    # ---- feature access, cached per corpus split / segment

    def _raw_split(self, manifest: CorpusManifest, split: str, with_labels: bool = True,
                   purpose: str = AuditPurpose.Pretrain) -> Tuple[FeatureMatrix, FeatureMatrix]:
        if with_labels:
            self.audit.record_label_read(manifest, split, purpose, [u.id for u in manifest.split(split)])
        key = ("split", manifest.root, split, with_labels)
        with ExperimentManager._CACHE_MUTEX:
            if key not in ExperimentManager._FEATURE_CACHE:
                ExperimentManager._FEATURE_CACHE[key] = load_raw_features(manifest, split, with_labels)
            return ExperimentManager._FEATURE_CACHE[key]

    def _raw_segment(self, manifest: CorpusManifest,
                     segment: AdaptationSegment) -> Tuple[FeatureMatrix, FeatureMatrix]:
        key = ("segment", manifest.root, segment.fragments)
        with ExperimentManager._CACHE_MUTEX:
            if key not in ExperimentManager._FEATURE_CACHE:
                ExperimentManager._FEATURE_CACHE[key] = load_raw_segment_features(manifest, segment)
            return ExperimentManager._FEATURE_CACHE[key]

    @staticmethod
    def clear_feature_cache():
        with ExperimentManager._CACHE_MUTEX:
            ExperimentManager._FEATURE_CACHE.clear()

    @staticmethod
    def truncate_str(text: str) -> str:
        return f"...{text[-OutputDefaultParams.StrTruncLimit:]}" if \
            len(text) > OutputDefaultParams.StrTruncLimit else text


class SchemeRunner(ExperimentManager):
    SCHEME_NICKNAME = None  # overwrite for each scheme individually

    def run(self, task: TransferTask) -> SchemeResult:
        return SchemeResult.from_records([self.run_seed(task, seed) for seed in task.run_seeds])

    def run_seed(self, task: TransferTask, seed: int) -> RunRecord:
        """
        Pre-train (scheme specific), fine-tune on the labeled corpus with dev selection, test on the target.
        Failures are returned as failed records, never raised.
        """
        record = RunRecord(task.pair, task.depth, self.SCHEME_NICKNAME, seed)
        label = f"{task.pair} {self.SCHEME_NICKNAME} depth {task.depth} seed {seed}"
        try:
            cfg = replace(task.cfg, seed=seed)
            self.audit.protect(task.target, SplitNames.Test)
            self._log_progress(f"{label} pre-training...")
            start = time.perf_counter()
            pretrained = self._pretrain(task, cfg)
            record.pretrain_s = time.perf_counter() - start
            record.stages = dict(pretrained.stages) or {"pretrain": record.pretrain_s}

            labeled_corpus = self._finetune_corpus(task)
            train, _ = self._raw_split(labeled_corpus, SplitNames.Train, True, AuditPurpose.Finetune)
            dev, _ = self._raw_split(labeled_corpus, SplitNames.Dev, True, AuditPurpose.Select)
            self.audit.record_finetune((task.pair, task.depth, self.SCHEME_NICKNAME, seed), labeled_corpus,
                                       sorted(set(train.utterance_ids)))
            start = time.perf_counter()
            tuned = finetune(pretrained.stack, apply_normalizer(pretrained.normalizer, train), cfg,
                             apply_normalizer(pretrained.normalizer, dev) if len(dev) else None)
            record.finetune_s = time.perf_counter() - start
            record.best_epoch = tuned.best_epoch

            test, _ = self._raw_split(task.target, SplitNames.Test, True, AuditPurpose.Evaluate)
            normalized_test = apply_normalizer(pretrained.normalizer, test)
            record.accuracy_pct = accuracy(predict(tuned.stack, normalized_test).labels, normalized_test.labels)
            record.stack = tuned.stack
            self._save_model(task, record, cfg, pretrained.normalizer)
            self._log_progress(f"{label} accuracy {record.accuracy_pct:.2f}%")
        except Exception as exc:
            record.accuracy_pct = None
            record.error = f"{exc.__class__.__name__}: {exc}"
            self._log_exception(SchemeRunFailed(self.SCHEME_NICKNAME, seed, record.error), False)
        return record

    def _finetune_corpus(self, task: TransferTask) -> CorpusManifest:
        return task.source

    @abstractmethod
    def _pretrain(self, task: TransferTask, cfg: TrainConfig) -> PretrainedModel:
        ...

    # ---- shared pre-training helpers

    def _fit_normalizer(self, parts: List[FeatureMatrix], source: str) -> Normalizer:
        return fit_normalizer(parts, source=source)

    def _pretrain_on(self, noisy: FeatureMatrix, clean: FeatureMatrix, normalizer: Normalizer, depth: int,
                     cfg: TrainConfig, clean_depth: Optional[int] = None):
        pair = PretrainPair(apply_normalizer(normalizer, noisy), apply_normalizer(normalizer, clean))
        return pretrain_ddnn(pair, depth, cfg, progress=self._log_progress, clean_depth=clean_depth)

    def _segment_features(self, task: TransferTask) -> Tuple[FeatureMatrix, FeatureMatrix]:
        if task.adaptation.is_empty:
            return FeatureMatrix(np.empty((0, FEATURE_DIM))), FeatureMatrix(np.empty((0, FEATURE_DIM)))
        return self._raw_segment(task.segment_manifest, task.adaptation)

    def _save_model(self, task: TransferTask, record: RunRecord, cfg: TrainConfig, normalizer: Normalizer):
        if not self.save_models or record.stack is None:
            return
        name = f"{task.pair.replace(TransferDefaultParams.PairSeparator, '_to_')}" \
               f"_d{task.depth}_{self.SCHEME_NICKNAME}_s{record.seed}"
        path = os.path.join(self.output_dir, TransferDefaultParams.ModelsDirectory, name)
        Path(os.path.dirname(path)).mkdir(parents=True, exist_ok=True)
        write_model(path, record.stack, {"train_config": cfg.to_dict(), "seed": record.seed,
                                         "scheme": self.SCHEME_NICKNAME, "pair": task.pair,
                                         "normalizer": normalizer.source, "best_epoch": record.best_epoch})
