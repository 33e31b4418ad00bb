#!/usr/bin/env python3

import os
import csv
import glob
import json
import queue
import sys
import threading

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Type
from vadtransfer import *


#   --------------------------------------------------------------------------------------------------------------------
#
#   Run feature-based transfer experiments for DDNN voice activity detection
#
#   * gen-corpus  -> synthesize a noisy corpus (train / dev / test) from clean speech and a noise recording
#   * extract     -> write the 273-dim feature files and the corpus normalizer
#   * run         -> execute a task matrix (pairs x depths x schemes x seeds) into results.csv / timings.csv
#   * similarity  -> centroid similarity matrix as CSV and Hinton diagram
#   * report      -> render the accuracy and pre-training time tables
#
#   --------------------------------------------------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    pairs: List[Tuple[str, str]]
    schemes: List[str] = field(default_factory=lambda: [s.value for s in SchemeNames])
    depths: List[int] = field(default_factory=lambda: list(TransferDefaultParams.Depths))
    seeds: List[int] = field(default_factory=lambda: list(TransferDefaultParams.RunSeeds))
    segment_seconds: float = CorpusDefaultParams.SegmentSeconds
    segment_seed: int = TransferDefaultParams.SegmentSeed
    train: Dict[str, Any] = field(default_factory=dict)
    save_models: bool = True
    jobs: int = ArgParserDefaultParams.JobCount
    output_dir: Optional[str] = None

    def __post_init__(self):
        if not self.pairs:
            raise InvalidExperimentConfig("no corpus pairs given")
        for source, target in self.pairs:
            for path in (source, target):
                if not os.path.exists(path):
                    raise InvalidExperimentConfig(f"corpus not found: {path}")
        self.schemes = parse_scheme_list(self.schemes)
        if not self.seeds:
            raise InvalidExperimentConfig("the seed list is empty")
        if not self.depths:
            raise InvalidExperimentConfig("the depth list is empty")
        self.train_config()  # validates the overrides

    def train_config(self) -> TrainConfig:
        return TrainConfig().with_overrides(self.train)

    @classmethod
    def from_file(cls, path: str, **overrides) -> "ExperimentConfig":
        """
        Corpus paths and output_dir are relative to the experiment file. Non-None keyword overrides (cmdline flags) win.
        """
        if not os.path.isfile(path):
            raise InvalidExperimentConfig(f"experiment file not found: {path}")
        try:
            with open(path, "r") as cf:
                data = json.load(cf)
        except ValueError as exc:
            raise InvalidExperimentConfig(f"{path}: {exc}")
        base_dir = os.path.dirname(os.path.abspath(path))
        try:
            data["pairs"] = [(os.path.join(base_dir, p["source"]), os.path.join(base_dir, p["target"]))
                             for p in data.get("pairs", list())]
        except (KeyError, TypeError):
            raise InvalidExperimentConfig("every pair needs a source and a target")
        if data.get("output_dir"):
            data["output_dir"] = os.path.join(base_dir, data["output_dir"])
        data.update({key: val for key, val in overrides.items() if val is not None})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidExperimentConfig(f"unknown experiment keys: {','.join(sorted(unknown))}")
        return cls(**data)


def build_tasks(config: ExperimentConfig, log=None) -> List[TransferTask]:
    cfg = config.train_config()
    tasks = list()
    for source_path, target_path in config.pairs:
        source, target = read_manifest(source_path), read_manifest(target_path)
        segment = draw_adaptation_segment(target, config.segment_seconds, config.segment_seed)
        for depth in config.depths:
            for scheme in config.schemes:
                if scheme not in depth_schemes(depth):
                    if log:
                        log(f"skipping {scheme} at depth {depth}")
                    continue
                tasks.append(TransferTask(source, target, segment, scheme, depth, cfg, tuple(config.seeds)))
    return tasks


class VadTransfer(ExperimentManager):
    _RUN_COLOR = OutputColors.Orange
    _WRITE_RESULTS = True

    _SCHEMENAME_TO_RUNNER_MAP = {
        SchemeNames.LowerBound: LowerBoundRunner,
        SchemeNames.Scheme1: Scheme1Runner,
        SchemeNames.Scheme2: Scheme2Runner,
        SchemeNames.Scheme3t: Scheme3tRunner,
        SchemeNames.Scheme3s: Scheme3sRunner,
        SchemeNames.UpperBound: UpperBoundRunner
    }

    def __init__(self, tasks: List[TransferTask], output_dir: Optional[str] = None, jobs: int = 1,
                 resume: bool = False, save_models: bool = False, *args, **kwargs):
        self.tasks = tasks
        self.resume = resume
        self._results_mutex = threading.RLock()
        self.table = ResultTable()
        self.timings: Dict[Tuple[str, int, str, int], List[Dict[str, str]]] = dict()
        self.records: List[RunRecord] = list()
        super().__init__(output_dir=output_dir, thread_count=jobs, save_models=save_models, *args, **kwargs)

    @property
    def results_path(self) -> Optional[str]:
        return os.path.join(self.output_dir, TransferDefaultParams.ResultsName) if self.output_dir else None

    @property
    def timings_path(self) -> Optional[str]:
        return os.path.join(self.output_dir, TransferDefaultParams.TimingsName) if self.output_dir else None

    def _runner_for(self, scheme: str) -> Type[SchemeRunner]:
        runner = self._SCHEMENAME_TO_RUNNER_MAP.get(scheme)
        if runner is None:
            raise InvalidSchemeName(scheme)
        return runner

    def _load_previous(self):
        if not self.results_path or not os.path.isfile(self.results_path):
            return
        if not self.resume:
            os.remove(self.results_path)  # a fresh run starts a fresh results file
            return
        self.table = read_result_csv(self.results_path)
        if os.path.isfile(self.timings_path):
            for timing in read_timing_csv(self.timings_path):
                key = (timing["pair"], int(timing["depth"]), timing["scheme"], int(timing["seed"]))
                self.timings.setdefault(key, list()).append(timing)
        self._log_progress(f"resuming, {len(self.table.completed_keys())} completed runs found...")

    def _setup_runs(self) -> queue.Queue:
        runs = queue.Queue()
        completed = self.table.completed_keys()
        for task in self.tasks:
            for seed in task.run_seeds:
                if (task.pair, task.depth, task.scheme, seed) in completed:
                    continue
                runs.put((task, seed))
        return runs

    def _append_result(self, record: RunRecord):
        with self._results_mutex:
            self.records.append(record)
            row = record.to_result_row()
            self.table.add(row)
            self.timings[row.key] = [{"pair": row.pair, "depth": str(row.depth), "scheme": row.scheme,
                                      "seed": str(row.seed), "stage": stage, "seconds": f"{seconds:.3f}"}
                                     for stage, seconds in sorted(record.stages.items())]
            if self.results_path:
                is_new = not os.path.isfile(self.results_path)
                with open(self.results_path, "a", newline="") as rf:
                    writer = csv.writer(rf, lineterminator="\n")
                    if is_new:
                        writer.writerow(RESULT_CSV_COLUMNS)
                    writer.writerow(row.to_csv())

    def _write_timings(self):
        with open(self.timings_path, "w", newline="") as tf:
            writer = csv.writer(tf, lineterminator="\n")
            writer.writerow(TIMING_CSV_COLUMNS)
            for key in sorted(self.timings, key=result_sort_key):
                for timing in self.timings[key]:
                    writer.writerow([timing[column] for column in TIMING_CSV_COLUMNS])

    def _do_run(self, task: TransferTask, seed: int) -> RunRecord:
        runner = self._runner_for(task.scheme)(output_dir=self.output_dir, audit=self.audit,
                                               save_models=self.save_models)
        return runner.run_seed(task, seed)

    def run_task_matrix(self) -> ResultTable:
        """
        Drain every (task, seed) run with `thread_count` workers. A failed run becomes a failed row and the
        matrix goes on; results.csv is rewritten in sorted order once all workers are done.
        """
        self._load_previous()
        runs = self._setup_runs()
        total = runs.qsize()
        finished = [0]
        self._log_status(OutputStatusKeys.State, OutputValues.StateRunning)
        if self.results_path:
            self._log_status(OutputStatusKeys.ResultsPath, self.truncate_str(self.results_path))

        def worker():
            while True:
                try:
                    task, seed = runs.get_nowait()
                except queue.Empty:
                    return
                label = f"{task.pair} {task.scheme} d{task.depth} s{seed}"
                self._update_progress_status(finished[0], total, label)
                record = self._do_run(task, seed)
                self._append_result(record)
                with self._results_mutex:
                    finished[0] += 1
                    if record.failed:
                        self._log_status(OutputStatusKeys.Failed,
                                         sum(1 for r in self.records if r.failed), refresh_output=False)
                    self._update_progress_status(finished[0], total, label)

        try:
            threads = [threading.Thread(target=worker, daemon=True) for _ in range(max(1, min(self.thread_count,
                                                                                                total)))]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        except KeyboardInterrupt:
            self._log_progress("interrupted by user...")
            raise
        finally:
            if self.results_path:
                write_result_csv(self.table, self.results_path)
                self._write_timings()

        self._log_status(OutputStatusKeys.State,
                         OutputValues.StateFail if self.table.any_failed else OutputValues.StateComplete)
        return self.table

    def _define_status_output(self) -> Dict[str, Any]:
        status = dict()
        status[OutputStatusKeys.State] = OutputValues.StateSetup
        status[OutputStatusKeys.Current] = OutputValues.EmptyStatusVal
        status[OutputStatusKeys.Progress] = OutputValues.EmptyProgressBar
        status[OutputStatusKeys.Left] = OutputValues.EmptyStatusVal
        status[OutputStatusKeys.Failed] = OutputValues.ZeroStatusVal
        status[OutputStatusKeys.ResultsPath] = OutputValues.EmptyStatusVal
        return status


def run_task_matrix(tasks: List[TransferTask], output_dir: Optional[str] = None, jobs: int = 1,
                    resume: bool = False, save_models: bool = False,
                    audit: Optional[LabelAccessAudit] = None) -> ResultTable:
    return VadTransfer(tasks, output_dir, jobs, resume, save_models, audit=audit).run_task_matrix()

# ========= Commands


def _progress_logger(name: str):
    om = OutputManager()
    om.insert_output(TransferDefaultParams.ProgLogName, OutputType.Lines)
    return lambda text: om.update_lines(TransferDefaultParams.ProgLogName, f"{name} {text}")


def cmd_gen_corpus(arguments) -> CorpusManifest:
    counts = parse_counts(arguments.counts)
    noise_kind, noise_value = parse_noise_source(arguments)
    clean_kind, clean_value = parse_clean_source(arguments)
    log = _progress_logger(CommandNames.GenCorpus)

    if clean_kind == "surrogate":
        pool = write_clean_pool(os.path.join(arguments.output_dir, SurrogateParams.PoolDirectory), clean_value,
                                seed=arguments.seed)
    else:
        pool = sorted(glob.glob(os.path.join(clean_value, "*.wav")))
    if noise_kind == "kind":
        noise_path = write_noise(os.path.join(arguments.output_dir, SurrogateParams.NoiseDirectory,
                                              f"{noise_value}.wav"),
                                 noise_value, SurrogateParams.NoiseSeconds, seed=arguments.seed)
        noise_type = arguments.name or noise_value
    else:
        noise_path = noise_value
        noise_type = arguments.name or os.path.splitext(os.path.basename(noise_value))[0]

    out_dir = os.path.join(arguments.output_dir, TransferDefaultParams.CorporaDirectory, noise_type)
    manifest = synthesize_corpus(pool, noise_path, arguments.snr_db, counts, arguments.seed, out_dir,
                                 noise_type=noise_type, thread_count=arguments.jobs, progress=log)
    print(manifest.path)
    return manifest


def cmd_extract(arguments) -> List[Normalizer]:
    normalizers = list()
    for path in arguments.manifests:
        manifest = read_manifest(path)
        normalizers.append(extract_corpus_features(manifest, thread_count=arguments.jobs,
                                                   export_csv=arguments.export_csv,
                                                   progress=_progress_logger(CommandNames.Extract)))
        print(manifest.normalizer_path)
    return normalizers


def cmd_run(arguments) -> ResultTable:
    config = ExperimentConfig.from_file(arguments.config, schemes=arguments.schemes, depths=arguments.depths,
                                        seeds=arguments.seeds)
    output_dir = resolve_output_dir(arguments.output_dir, config.output_dir)
    jobs = resolve_jobs(arguments.jobs, config.jobs)
    tasks = build_tasks(config, log=_progress_logger(CommandNames.Run))
    table = run_task_matrix(tasks, output_dir, jobs, arguments.resume, config.save_models)
    report = render_result_text(table)
    with open(os.path.join(output_dir, TransferDefaultParams.ReportName), "w") as rf:
        rf.write(report)
    print(report, end="")
    return table


def cmd_similarity(arguments) -> SimilarityMatrix:
    if len(arguments.manifests) < 2:
        raise InvalidExperimentConfig("similarity needs at least two manifests")
    manifests = [read_manifest(path) for path in arguments.manifests]
    corpora = [load_raw_features(manifest, arguments.split, with_labels=False)[0] for manifest in manifests]
    normalized, _ = shared_normalization(corpora)
    matrix = similarity_matrix(normalized, [manifest.noise_type for manifest in manifests])
    emit_similarity_csv(matrix, os.path.join(arguments.output_dir, TransferDefaultParams.SimilarityCsvName))
    emit_hinton_svg(matrix, os.path.join(arguments.output_dir, TransferDefaultParams.SimilaritySvgName))
    width = max(len(name) for name in matrix.names)
    for name, row in zip(matrix.names, matrix.values):
        print(f"{name.ljust(width)} " + " ".join(f"{value:.3f}" for value in row))
    return matrix


def cmd_report(arguments) -> str:
    results = arguments.results or os.path.join(arguments.output_dir, TransferDefaultParams.ResultsName)
    text = render_result_text(read_result_csv(results))
    timings = os.path.join(os.path.dirname(os.path.abspath(results)), TransferDefaultParams.TimingsName)
    if os.path.isfile(timings):
        text += "\n" + emit_timing_table(read_timing_csv(timings))
    print(text, end="")
    return text


_COMMANDNAME_TO_METHOD_MAP = {
    CommandNames.GenCorpus: cmd_gen_corpus,
    CommandNames.Extract: cmd_extract,
    CommandNames.Run: cmd_run,
    CommandNames.Similarity: cmd_similarity,
    CommandNames.Report: cmd_report
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = get_argument_parser()
    arguments = parser.parse_args(argv)
    if arguments.quiet:
        OutputManager.set_quiet(True)
    if arguments.command != CommandNames.Run:
        arguments.output_dir = resolve_output_dir(arguments.output_dir)
        arguments.jobs = resolve_jobs(arguments.jobs)
    try:
        result = _COMMANDNAME_TO_METHOD_MAP[arguments.command](arguments)
    except VadTransferException as exc:
        sys.stderr.write(f"{arguments.command}: {exc}\n")
        return exc.EXIT_CODE
    except OSError as exc:
        sys.stderr.write(f"{arguments.command}: {exc}\n")
        return ExitCodes.InputOutput
    if isinstance(result, ResultTable) and result.any_failed:
        return ExitCodes.TaskFailure
    return ExitCodes.Success


if __name__ == "__main__":
    sys.exit(main())
