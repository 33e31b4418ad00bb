import os
import json
import hashlib
import threading
import time

import numpy as np

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
from .utils import *
from .corpus import CorpusManifest
from .feature_store import Normalizer, apply_normalizer, write_normalizer_csv, read_normalizer_csv
from .network import NetworkStack, TrainConfig, init_output_unit, pretrain_top_layer, write_model, read_model
from .base_experiment import SchemeRunner, TransferTask, PretrainedModel, SchemeResult

#   --------------------------------------------------------------------------------------------------------------------
#
#   Scheme 3 - hybrid pre-training of the top layer
#
#   * source stack (L-1 layers) -> trained once on the source corpus and cached for every target / variant
#   * target stack (L-1 layers) -> trained on the unlabeled target segment
#   * top layer                 -> autoencoder on the pooled source + target layer L-1 representations
#   * S3t / S3s                 -> top layer stacked on the target / source lower layers
#
#   --------------------------------------------------------------------------------------------------------------------


@dataclass
class SourceStack:
    noisy: NetworkStack
    clean: NetworkStack
    normalizer: Normalizer
    seconds: float
    manifest_hash: str


class SourceStackCache(object):
    """
    Write-once source stacks keyed by (source manifest, depth, seed, train config). Mirrored to
    `<output>/cache/source_stacks.json` plus model files when an output directory is given.
    """
    _CACHE_MUTEX = threading.RLock()
    _ENTRIES: Dict[str, SourceStack] = dict()
    _KEY_LOCKS: Dict[str, threading.RLock] = dict()
    hits = 0
    misses = 0

    @staticmethod
    def manifest_hash(manifest: CorpusManifest) -> str:
        return get_filehash(manifest.path) if os.path.isfile(manifest.path) else \
            hashlib.md5(json.dumps(manifest.to_dict(), sort_keys=True).encode()).hexdigest()

    @staticmethod
    def make_key(manifest: CorpusManifest, depth: int, cfg: TrainConfig) -> str:
        cfg_hash = hashlib.md5(json.dumps(cfg.to_dict(), sort_keys=True).encode()).hexdigest()[:12]
        return f"{manifest.noise_type}_{hashlib.md5(os.path.abspath(manifest.root).encode()).hexdigest()[:8]}" \
               f"_d{depth}_s{cfg.seed}_{cfg_hash}"

    @classmethod
    def _key_lock(cls, key: str) -> threading.RLock:
        with cls._CACHE_MUTEX:
            return cls._KEY_LOCKS.setdefault(key, threading.RLock())

    @classmethod
    def reset(cls):
        with cls._CACHE_MUTEX:
            cls._ENTRIES.clear()
            cls._KEY_LOCKS.clear()
            cls.hits = 0
            cls.misses = 0

    @classmethod
    def get_or_train(cls, key: str, manifest: CorpusManifest, train_fn, cache_dir: Optional[str] = None,
                     progress=None) -> Tuple[SourceStack, bool]:
        """
        Returns (entry, hit). `train_fn()` runs at most once per key, whatever the number of callers.
        """
        manifest_hash = cls.manifest_hash(manifest)
        with cls._key_lock(key):
            with cls._CACHE_MUTEX:
                entry = cls._ENTRIES.get(key)
            if entry is None and cache_dir:
                entry = cls._load_from_disk(key, manifest_hash, cache_dir)
                if entry is not None and progress:
                    progress(f"loaded cached source stack {key}")
            hit = entry is not None and entry.manifest_hash == manifest_hash
            if not hit:
                entry = train_fn(manifest_hash)
                if cache_dir:
                    cls._write_to_disk(key, entry, cache_dir)
            with cls._CACHE_MUTEX:
                cls._ENTRIES[key] = entry
                if hit:
                    cls.hits += 1
                else:
                    cls.misses += 1
            return entry, hit

    # ---- on-disk mirror

    @staticmethod
    def _index_path(cache_dir: str) -> str:
        return os.path.join(cache_dir, TransferDefaultParams.CacheIndexName)

    @classmethod
    def _read_index(cls, cache_dir: str) -> Dict[str, Any]:
        index_path = cls._index_path(cache_dir)
        if not os.path.isfile(index_path):
            return {"stacks": dict()}
        try:
            with open(index_path, "r") as cf:
                return json.load(cf)
        except (OSError, ValueError):
            return {"stacks": dict()}  # unreadable index, rebuilt on the next write

    @classmethod
    def _load_from_disk(cls, key: str, manifest_hash: str, cache_dir: str) -> Optional[SourceStack]:
        with cls._CACHE_MUTEX:
            record = cls._read_index(cache_dir)["stacks"].get(key)
        if not record or record.get("manifest_hash") != manifest_hash:
            return None
        try:
            noisy, _ = read_model(os.path.join(cache_dir, record["noisy_model"]))
            clean, _ = read_model(os.path.join(cache_dir, record["clean_model"]))
            normalizer = read_normalizer_csv(os.path.join(cache_dir, record["normalizer"]))
        except VadTransferException:
            return None
        return SourceStack(noisy, clean, normalizer, float(record.get("seconds", 0.0)), manifest_hash)

    @classmethod
    def _write_to_disk(cls, key: str, entry: SourceStack, cache_dir: str):
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        sidecar = {"key": key, "manifest_hash": entry.manifest_hash}
        noisy_path = write_model(os.path.join(cache_dir, f"{key}.noisy"), entry.noisy, sidecar)
        clean_path = write_model(os.path.join(cache_dir, f"{key}.clean"), entry.clean, sidecar)
        normalizer_name = f"{key}.{CorpusDefaultParams.NormalizerName}"
        write_normalizer_csv(os.path.join(cache_dir, normalizer_name), entry.normalizer)
        with cls._CACHE_MUTEX:
            index = cls._read_index(cache_dir)
            index["stacks"][key] = {"manifest_hash": entry.manifest_hash,
                                    "noisy_model": os.path.basename(noisy_path),
                                    "clean_model": os.path.basename(clean_path),
                                    "normalizer": normalizer_name,
                                    "seconds": round(entry.seconds, 3)}
            with open(cls._index_path(cache_dir), "w") as cf:
                json.dump(index, cf, indent=2, sort_keys=True)


class _Scheme3Runner(SchemeRunner):
    _USE_TARGET_LOWER = True  # overwrite for each variant

    def _cache_dir(self) -> Optional[str]:
        if not self.output_dir:
            return None
        return os.path.join(self.output_dir, TransferDefaultParams.CacheDirectory)

    def _train_source_stack(self, task: TransferTask, cfg: TrainConfig, manifest_hash: str) -> SourceStack:
        start = time.perf_counter()
        noisy, clean = self._raw_split(task.source, SplitNames.Train, with_labels=False)
        normalizer = self._fit_normalizer([noisy, clean], source=f"{task.source.noise_type}/{SplitNames.Train}")
        noisy_result, clean_result = self._pretrain_on(noisy, clean, normalizer, task.depth - 1, cfg,
                                                       clean_depth=task.depth - 1)
        return SourceStack(noisy_result.stack, clean_result.stack, normalizer, time.perf_counter() - start,
                           manifest_hash)

    def source_stack(self, task: TransferTask, cfg: TrainConfig) -> Tuple[SourceStack, bool]:
        key = SourceStackCache.make_key(task.source, task.depth - 1, cfg)
        entry, hit = SourceStackCache.get_or_train(key, task.source,
                                                   lambda mhash: self._train_source_stack(task, cfg, mhash),
                                                   self._cache_dir(), self._log_progress)
        if self._output_manager.is_key_in_status(self._get_runner_name(), OutputStatusKeys.UsingCache):
            self._log_status(OutputStatusKeys.UsingCache, OutputValues.BoolTrue if hit else OutputValues.BoolFalse)
        return entry, hit

    def _pretrain(self, task: TransferTask, cfg: TrainConfig) -> PretrainedModel:
        if task.depth < 2:
            raise InvalidDepth(self.SCHEME_NICKNAME, task.depth)
        if task.adaptation.is_empty:
            raise EmptyAdaptationSegment(task.target.noise_type)
        self._log_status(OutputStatusKeys.State, OutputValues.StateRunning)
        lower_depth = task.depth - 1
        source, _ = self.source_stack(task, cfg)

        start = time.perf_counter()
        seg_noisy, seg_clean = self._segment_features(task)
        if not len(seg_noisy):
            raise EmptyAdaptationSegment(task.target.noise_type)
        seg_normalizer = self._fit_normalizer([seg_noisy, seg_clean], source=f"{task.adaptation.noise_type}/segment")
        target_noisy, target_clean = self._pretrain_on(seg_noisy, seg_clean, seg_normalizer, lower_depth, cfg,
                                                       clean_depth=lower_depth)

        src_noisy, src_clean = self._raw_split(task.source, SplitNames.Train, with_labels=False)
        src_noisy_rep = source.noisy.encode(apply_normalizer(source.normalizer, src_noisy).rows)
        src_clean_rep = source.clean.encode(apply_normalizer(source.normalizer, src_clean).rows)
        # the segment representations are the last ones kept by pre-training
        tgt_noisy_rep, tgt_clean_rep = target_noisy.representations[-1], target_clean.representations[-1]
        top_layer, _ = pretrain_top_layer(np.vstack([src_noisy_rep, tgt_noisy_rep]), cfg, task.depth,
                                          targets=np.vstack([src_clean_rep, tgt_clean_rep]),
                                          progress=self._log_progress)
        hybrid_s = time.perf_counter() - start

        lower, normalizer = (target_noisy.stack, seg_normalizer) if self._USE_TARGET_LOWER else \
            (source.noisy, source.normalizer)
        layers = [layer for layer in lower.copy().hidden_layers] + [top_layer]
        output = init_output_unit(top_layer.out_dim, derive_seed(cfg.seed, SeedPurpose.OutputUnit))
        stack = NetworkStack(layers, output, lower.input_dim)
        return PretrainedModel(stack, normalizer, {"source": source.seconds, "hybrid": hybrid_s})

    def _define_status_output(self) -> Dict[str, Any]:
        status = super()._define_status_output()
        status[OutputStatusKeys.UsingCache] = OutputValues.EmptyStatusVal
        return status


class Scheme3tRunner(_Scheme3Runner):
    SCHEME_NICKNAME = SchemeNames.Scheme3t
    _RUN_COLOR = OutputColors.Orange
    _USE_TARGET_LOWER = True


class Scheme3sRunner(_Scheme3Runner):
    SCHEME_NICKNAME = SchemeNames.Scheme3s
    _RUN_COLOR = OutputColors.YELLOW
    _USE_TARGET_LOWER = False


_VARIANT_TO_RUNNER_MAP = {
    "t": Scheme3tRunner,
    "s": Scheme3sRunner,
}


def run_scheme3(task: TransferTask, variant: str = "t", **kwargs) -> SchemeResult:
    runner = _VARIANT_TO_RUNNER_MAP.get(variant)
    if runner is None:
        raise InvalidSchemeName(f"S3{variant}")
    return runner(**kwargs).run(task)


if __name__ == "__main__":
    pass
