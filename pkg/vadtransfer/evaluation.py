import os
import csv

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from dataclasses import dataclass, field
from matplotlib.patches import Rectangle
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from .utils import *
from .feature_store import FeatureMatrix, Centroid, Normalizer, compute_centroid, fit_normalizer, apply_normalizer

#   --------------------------------------------------------------------------------------------------------------------
#
#   Frame accuracy, centroid similarity, result tables and report emission
#
#   --------------------------------------------------------------------------------------------------------------------


def accuracy(predicted: Sequence[int], reference: Sequence[int]) -> float:
    predicted, reference = np.asarray(predicted), np.asarray(reference)
    if predicted.shape != reference.shape:
        raise DimensionMismatch(reference.shape, predicted.shape)
    if not predicted.size:
        raise EmptyFeatureInput("accuracy")
    return float(100.0 * np.count_nonzero(predicted == reference) / predicted.size)


def similarity(a: Centroid, b: Centroid) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(a.dim, b.dim)
    diff = a.values - b.values
    return float(np.exp(-0.5 * float(diff @ diff)))


@dataclass
class SimilarityMatrix:
    values: np.ndarray
    names: List[str]

    def __len__(self) -> int:
        return len(self.names)


def similarity_matrix(corpora: Sequence[FeatureMatrix], names: Optional[Sequence[str]] = None) -> SimilarityMatrix:
    """
    Pairwise centroid similarity of corpora that already share one normalizer.
    """
    if len(corpora) < 2:
        raise InvalidExperimentConfig("similarity needs at least two corpora")
    names = list(names) if names is not None else [f"corpus{i}" for i in range(len(corpora))]
    centroids = [compute_centroid(matrix, name) for matrix, name in zip(corpora, names)]
    n = len(centroids)
    values = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = similarity(centroids[i], centroids[j])
    return SimilarityMatrix(values, names)


def shared_normalization(corpora: Sequence[FeatureMatrix]) -> Tuple[List[FeatureMatrix], Normalizer]:
    normalizer = fit_normalizer(corpora, source="union of compared corpora")
    return [apply_normalizer(normalizer, matrix) for matrix in corpora], normalizer


def emit_similarity_csv(m: SimilarityMatrix, path: str) -> str:
    Path(os.path.dirname(path) or ".").mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as sf:
        writer = csv.writer(sf, lineterminator="\n")
        writer.writerow(["corpus"] + m.names)
        for name, row in zip(m.names, m.values):
            writer.writerow([name] + [repr(float(v)) for v in row])
    return path


def _hinton_square_sides(m: SimilarityMatrix) -> np.ndarray:
    return np.clip(m.values, 0.0, 1.0) * ReportParams.HintonMaxSide


def emit_hinton_svg(m: SimilarityMatrix, path: str) -> str:
    """
    Square side proportional to similarity; row i is drawn top-down.
    """
    Path(os.path.dirname(path) or ".").mkdir(parents=True, exist_ok=True)
    plt.rcParams["svg.hashsalt"] = ReportParams.SvgHashSalt
    sides = _hinton_square_sides(m)
    n = len(m)
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * n, 1.0 + 0.8 * n))
    ax.add_patch(Rectangle((0, 0), n, n, facecolor="gray", edgecolor="none"))
    for i in range(n):
        for j in range(n):
            side = sides[i, j]
            ax.add_patch(Rectangle((j + 0.5 - side / 2, n - i - 0.5 - side / 2), side, side,
                                   facecolor="white", edgecolor="white"))
    ax.set_xlim(0, n)
    ax.set_ylim(0, n)
    ax.set_aspect("equal")
    ax.set_xticks(np.arange(n) + 0.5)
    ax.set_xticklabels([name.capitalize() for name in m.names], rotation=45, ha="right")
    ax.set_yticks(np.arange(n) + 0.5)
    ax.set_yticklabels([name.capitalize() for name in reversed(m.names)])
    ax.set_title("Feature distribution similarity")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path

# ========= Result tables


@dataclass(frozen=True)
class ResultRow:
    pair: str
    depth: int
    scheme: str
    seed: int
    accuracy_pct: Optional[float]  # None marks a failed run
    pretrain_s: float = 0.0
    finetune_s: float = 0.0

    @property
    def failed(self) -> bool:
        return self.accuracy_pct is None

    @property
    def key(self) -> Tuple[str, int, str, int]:
        return self.pair, self.depth, self.scheme, self.seed

    def to_csv(self) -> List[str]:
        return [self.pair, str(self.depth), self.scheme, str(self.seed),
                "" if self.failed else repr(float(self.accuracy_pct)),
                f"{self.pretrain_s:.3f}", f"{self.finetune_s:.3f}"]


@dataclass
class ResultCell:
    pair: str
    depth: int
    scheme: str
    accuracies: Dict[int, float] = field(default_factory=dict)
    failed_seeds: List[int] = field(default_factory=list)
    pretrain_seconds: List[float] = field(default_factory=list)
    finetune_seconds: List[float] = field(default_factory=list)

    @property
    def mean(self) -> Optional[float]:
        if not self.accuracies:
            return None
        return float(np.mean([self.accuracies[seed] for seed in sorted(self.accuracies)]))

    @property
    def failed(self) -> bool:
        return not self.accuracies and bool(self.failed_seeds)


class ResultTable(object):
    def __init__(self, rows: Iterable[ResultRow] = ()):
        self._rows: Dict[Tuple[str, int, str, int], ResultRow] = dict()
        for row in rows:
            self.add(row)

    def add(self, row: ResultRow):
        self._rows[row.key] = row

    def __len__(self) -> int:
        return len(self._rows)

    def __contains__(self, key) -> bool:
        return key in self._rows

    def rows(self) -> List[ResultRow]:
        return [self._rows[key] for key in sorted(self._rows, key=result_sort_key)]

    def pairs(self) -> List[str]:
        return sorted({row.pair for row in self._rows.values()})

    def depths(self) -> List[int]:
        return sorted({row.depth for row in self._rows.values()})

    def completed_keys(self) -> set:
        return {key for key, row in self._rows.items() if not row.failed}

    def cell(self, pair: str, depth: int, scheme: str) -> Optional[ResultCell]:
        cell = None
        for row in self.rows():
            if (row.pair, row.depth, row.scheme) != (pair, depth, scheme):
                continue
            cell = cell or ResultCell(pair, depth, scheme)
            if row.failed:
                cell.failed_seeds.append(row.seed)
            else:
                cell.accuracies[row.seed] = row.accuracy_pct
            cell.pretrain_seconds.append(row.pretrain_s)
            cell.finetune_seconds.append(row.finetune_s)
        return cell

    @property
    def any_failed(self) -> bool:
        return any(row.failed for row in self._rows.values())


def _scheme_order(scheme: str) -> int:
    order = [s.value for s in SchemeNames]
    return order.index(scheme) if scheme in order else len(order)


def result_sort_key(key):
    pair, depth, scheme, seed = key
    return pair, depth, _scheme_order(scheme), seed


def write_result_csv(table: ResultTable, path: str) -> str:
    Path(os.path.dirname(path) or ".").mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as rf:
        writer = csv.writer(rf, lineterminator="\n")
        writer.writerow(RESULT_CSV_COLUMNS)
        for row in table.rows():
            writer.writerow(row.to_csv())
    return path


def read_result_csv(path: str) -> ResultTable:
    if not os.path.isfile(path):
        raise MissingCorpusFile(path)
    table = ResultTable()
    with open(path, "r", newline="") as rf:
        reader = csv.DictReader(rf)
        if tuple(reader.fieldnames or ()) != RESULT_CSV_COLUMNS:
            raise InvalidResultFile(path, f"expected columns {','.join(RESULT_CSV_COLUMNS)}")
        for line_no, record in enumerate(reader, start=2):
            try:
                accuracy_text = record["accuracy_pct"].strip()
                table.add(ResultRow(pair=record["pair"], depth=int(record["depth"]), scheme=record["scheme"],
                                    seed=int(record["seed"]),
                                    accuracy_pct=float(accuracy_text) if accuracy_text else None,
                                    pretrain_s=float(record["pretrain_s"] or 0.0),
                                    finetune_s=float(record["finetune_s"] or 0.0)))
            except (TypeError, ValueError) as exc:
                raise InvalidResultFile(path, f"line {line_no}: {exc}")
    return table


def read_timing_csv(path: str) -> List[Dict[str, str]]:
    if not os.path.isfile(path):
        raise MissingCorpusFile(path)
    with open(path, "r", newline="") as tf:
        reader = csv.DictReader(tf)
        if tuple(reader.fieldnames or ()) != TIMING_CSV_COLUMNS:
            raise InvalidResultFile(path, f"expected columns {','.join(TIMING_CSV_COLUMNS)}")
        return list(reader)


def depth_schemes(depth: int) -> List[str]:
    if depth < 2:
        return [SchemeNames.LowerBound, SchemeNames.Scheme1, SchemeNames.Scheme2, SchemeNames.UpperBound]
    return [SchemeNames.LowerBound, SchemeNames.Scheme1, SchemeNames.Scheme2,
            SchemeNames.Scheme3t, SchemeNames.Scheme3s, SchemeNames.UpperBound]


def _row_label(pair: str, pairs: Sequence[str]) -> str:
    sources = {p.split(TransferDefaultParams.PairSeparator)[0] for p in pairs}
    if len(sources) == 1 and TransferDefaultParams.PairSeparator in pair:
        return pair.split(TransferDefaultParams.PairSeparator)[-1].capitalize()
    return pair


def _format_cell(cell: Optional[ResultCell]) -> str:
    if cell is None:
        return ReportParams.MissingCell
    if cell.mean is None:
        return ReportParams.FailedCell
    return ReportParams.AccuracyFormat.format(cell.mean)


def _format_line(label: str, cells: Sequence[str]) -> str:
    return " | ".join([label.ljust(ReportParams.LabelWidth)] + [c.rjust(ReportParams.CellWidth) for c in cells])


def render_result_text(table: ResultTable) -> str:
    """
    One block per depth: a row per noise pair, a column per scheme (mean over seeds).
    """
    if not len(table):
        raise EmptyResultTable()
    pairs = table.pairs()
    blocks = list()
    for depth in table.depths():
        schemes = depth_schemes(depth)
        lines = [f"Transfer accuracy (%), {depth} hidden layer{'s' if depth > 1 else ''}",
                 _format_line("Noise Type", [SCHEME_COLUMN_TITLES[s] for s in schemes])]
        for pair in pairs:
            if not any(table.cell(pair, depth, s) for s in schemes):
                continue
            lines.append(_format_line(_row_label(pair, pairs), [_format_cell(table.cell(pair, depth, s))
                                                                for s in schemes]))
        blocks.append("\n".join(lines))
    blocks.append(render_transfer_verdicts(table))
    return "\n\n".join(blocks) + "\n"


def transfer_verdicts(table: ResultTable) -> List[Tuple[str, int, str, float, str]]:
    """
    (pair, depth, scheme, mean - LB mean, verdict) for every adaptation scheme with an LB reference.
    """
    verdicts = list()
    for pair in table.pairs():
        for depth in table.depths():
            lower = table.cell(pair, depth, SchemeNames.LowerBound)
            if lower is None or lower.mean is None:
                continue
            for scheme in depth_schemes(depth):
                if scheme in (SchemeNames.LowerBound, SchemeNames.UpperBound):
                    continue
                cell = table.cell(pair, depth, scheme)
                if cell is None or cell.mean is None:
                    continue
                delta = cell.mean - lower.mean
                verdict = "positive transfer" if delta > 0 else "negative transfer" if delta < 0 else "no change"
                verdicts.append((pair, depth, scheme, delta, verdict))
    return verdicts


def render_transfer_verdicts(table: ResultTable) -> str:
    lines = ["Transfer against LB"]
    for pair, depth, scheme, delta, verdict in transfer_verdicts(table):
        lines.append(f"{pair.ljust(ReportParams.LabelWidth)} | {depth} | {SCHEME_COLUMN_TITLES[scheme].ljust(5)}"
                     f" | {delta:+.2f} | {verdict}")
    if len(lines) == 1:
        lines.append(ReportParams.MissingCell)
    return "\n".join(lines)


def emit_result_table(table: ResultTable, path: str, fmt: str = "text") -> str:
    if not len(table):
        raise EmptyResultTable()
    if fmt == "csv":
        return write_result_csv(table, path)
    if fmt != "text":
        raise InvalidExperimentConfig(f"unknown report format {fmt!r}")
    Path(os.path.dirname(path) or ".").mkdir(parents=True, exist_ok=True)
    with open(path, "w") as tf:
        tf.write(render_result_text(table))
    return path


_TIMING_COLUMNS = (("LB", SchemeNames.LowerBound, "pretrain"), ("S1", SchemeNames.Scheme1, "pretrain"),
                   ("S2", SchemeNames.Scheme2, "pretrain"), ("S3 Source", None, "source"),
                   ("S3 Hybrid", None, "hybrid"), ("UB", SchemeNames.UpperBound, "pretrain"))


def emit_timing_table(timings: Sequence[Dict[str, str]], path: Optional[str] = None) -> str:
    """
    Mean pre-training seconds per scheme and depth; Scheme 3 is split into its cached source stage and the
    hybrid stage.
    """
    depths = sorted({int(t["depth"]) for t in timings})
    lines = ["Pre-training time (s)", _format_line("Layers", [title for title, _, _ in _TIMING_COLUMNS])]
    for depth in depths:
        cells = list()
        for _, scheme, stage in _TIMING_COLUMNS:
            seconds = [float(t["seconds"]) for t in timings
                       if int(t["depth"]) == depth and t["stage"] == stage and
                       (scheme is None or t["scheme"] == scheme)]
            cells.append(f"{np.mean(seconds):.1f}" if seconds else ReportParams.MissingCell)
        lines.append(_format_line(str(depth), cells))
    text = "\n".join(lines) + "\n"
    if path:
        Path(os.path.dirname(path) or ".").mkdir(parents=True, exist_ok=True)
        with open(path, "w") as tf:
            tf.write(text)
    return text

