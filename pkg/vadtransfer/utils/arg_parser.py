import os
import argparse

from typing import List, Optional, Tuple, Union
from .default_values import *
from .exceptions.vad_exceptions import ContradictingArguments, MissingArguments, InvalidExperimentConfig, \
    InvalidSchemeName


def default_output_dir() -> str:
    return os.environ.get(ArgParserDefaultParams.OutputEnvVar) or ArgParserDefaultParams.ResultsDefaultPath


def resolve_output_dir(flag: Optional[str], configured: Optional[str] = None) -> str:
    """
    Output root precedence: -o flag, then the experiment file, then $VADTRANSFER_OUTPUT or ./results.
    """
    return flag or configured or default_output_dir()


def resolve_jobs(flag: Optional[int], configured: Optional[int] = None) -> int:
    if flag is not None:
        return flag
    return configured if configured is not None else ArgParserDefaultParams.JobCount


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("-o", "--output-dir", dest="output_dir", metavar="<path>", type=str,
                        default=None,
                        help=f"root directory for every output (run falls back to the experiment file)"
                             f" (default: ${ArgParserDefaultParams.OutputEnvVar} or ./results)")
    parser.add_argument("-q", "--quiet", dest="quiet", action="store_true",
                        help="do not draw the status display")
    parser.add_argument("-j", "--jobs", dest="jobs", action="store", type=int,
                        default=None, metavar="<count>",
                        help=f"worker (thread) count, run falls back to the experiment file"
                             f" (default -> {ArgParserDefaultParams.JobCount})")


def get_argument_parser() -> argparse.ArgumentParser:
    pad = ArgParserDefaultParams.LeftPad
    width = ArgParserDefaultParams.LJustWidth
    parser = argparse.ArgumentParser(description=f'description:\n{pad}'
                                                 f'DDNN voice activity detection with feature-based domain adaptation',
                                     formatter_class=argparse.RawTextHelpFormatter,
                                     usage=f""
                                           f"\n{pad}{'VadTransfer gen-corpus ...'.ljust(width)}synthesize a noisy corpus"
                                           f"\n{pad}{'VadTransfer extract ...'.ljust(width)}extract the 273-dim features"
                                           f"\n{pad}{'VadTransfer run ...'.ljust(width)}run a transfer task matrix"
                                           f"\n{pad}{'VadTransfer similarity ...'.ljust(width)}corpus similarity diagram"
                                           f"\n{pad}{'VadTransfer report ...'.ljust(width)}render result tables",
                                     epilog="Schemes:\n"
                                            f"{pad}* {SchemeNames.LowerBound} -> train on the source corpus only\n"
                                            f"{pad}* {SchemeNames.Scheme1} -> pre-train on the target segment only\n"
                                            f"{pad}* {SchemeNames.Scheme2} -> pre-train on source + target segment\n"
                                            f"{pad}* {SchemeNames.Scheme3t} / {SchemeNames.Scheme3s} -> "
                                            f"hybrid top-layer pre-training (depth >= 2)\n"
                                            f"{pad}* {SchemeNames.UpperBound} -> train on the target corpus")
    commands = parser.add_subparsers(dest="command", metavar="<command>")
    commands.required = True

    gen = commands.add_parser(CommandNames.GenCorpus, help="synthesize a noisy-speech corpus with train/dev/test splits")
    _add_common_arguments(gen)
    gen.add_argument("--name", dest="name", type=str, default=None, metavar="<name>",
                     help="corpus directory name (default: the noise name)")
    gen.add_argument("--noise", dest="noise_wav", type=str, default=None, metavar="<wav>",
                     help="noise recording (16-bit PCM mono)")
    gen.add_argument("--noise-kind", dest="noise_kind", type=str, default=None, metavar="<kind>",
                     choices=[kind.value for kind in NoiseKinds], help="use a bundled noise surrogate")
    gen.add_argument("--clean-dir", dest="clean_dir", type=str, default=None, metavar="<dir>",
                     help="directory of clean 16-bit PCM mono utterances")
    gen.add_argument("--surrogate-clean", dest="surrogate_clean", type=int, default=None, metavar="<count>",
                     help="generate <count> surrogate clean utterances instead")
    gen.add_argument("--snr", dest="snr_db", type=float, default=SignalDefaultParams.SnrDb, metavar="<dB>",
                     help=f"mixing SNR (default -> {SignalDefaultParams.SnrDb})")
    gen.add_argument("--counts", dest="counts", type=str, default=CorpusDefaultParams.SplitCounts,
                     metavar="<train,dev,test>",
                     help=f"utterances per split (default -> {CorpusDefaultParams.SplitCounts})")
    gen.add_argument("--seed", dest="seed", type=int, default=TrainDefaultParams.Seed, metavar="<seed>")

    ext = commands.add_parser(CommandNames.Extract, help="extract per-utterance feature files and the normalizer")
    _add_common_arguments(ext)
    ext.add_argument("--manifest", dest="manifests", nargs="+", required=True, metavar="<manifest.json>")
    ext.add_argument("--export-csv", dest="export_csv", action="store_true",
                     help="also write a CSV mirror next to every feature file")

    run = commands.add_parser(CommandNames.Run, help="run a transfer task matrix from an experiment file")
    _add_common_arguments(run)
    run.add_argument(dest="config", type=str, metavar="<experiment.json>")
    run.add_argument("--resume", dest="resume", action="store_true",
                     help="skip (pair, depth, scheme, seed) cells already found in the results CSV")
    run.add_argument("--schemes", dest="schemes", nargs="+", default=None, metavar="<scheme>")
    run.add_argument("--depths", dest="depths", nargs="+", type=int, default=None, metavar="<depth>")
    run.add_argument("--seeds", dest="seeds", nargs="+", type=int, default=None, metavar="<seed>")

    sim = commands.add_parser(CommandNames.Similarity, help="centroid similarity matrix and Hinton diagram")
    _add_common_arguments(sim)
    sim.add_argument("--manifest", dest="manifests", nargs="+", required=True, metavar="<manifest.json>")
    sim.add_argument("--split", dest="split", type=str, default=SplitNames.Train,
                     choices=[split.value for split in SplitNames])

    rep = commands.add_parser(CommandNames.Report, help="render accuracy and timing tables from a results CSV")
    _add_common_arguments(rep)
    rep.add_argument("--results", dest="results", type=str, default=None, metavar="<results.csv>",
                     help=f"(default: <output-dir>/{TransferDefaultParams.ResultsName})")

    return parser


def parse_counts(counts: str) -> Tuple[int, int, int]:
    try:
        values = tuple(int(c) for c in counts.split(","))
    except ValueError:
        raise InvalidExperimentConfig(f"--counts expects three integers, got {counts!r}")
    if len(values) != 3 or min(values) < 0 or sum(values) == 0:
        raise InvalidExperimentConfig(f"--counts expects train,dev,test >= 0, got {counts!r}")
    return values


def parse_noise_source(arguments: argparse.Namespace) -> Tuple[str, str]:
    if arguments.noise_wav and arguments.noise_kind:
        raise ContradictingArguments(["--noise", "--noise-kind"])
    if arguments.noise_wav:
        if not os.path.isfile(arguments.noise_wav):
            raise InvalidExperimentConfig(f"noise file not found: {arguments.noise_wav}")
        return "wav", arguments.noise_wav
    if arguments.noise_kind:
        return "kind", arguments.noise_kind
    raise MissingArguments(["--noise", "--noise-kind"])


def parse_clean_source(arguments: argparse.Namespace) -> Tuple[str, Union[str, int]]:
    if arguments.clean_dir and arguments.surrogate_clean is not None:
        raise ContradictingArguments(["--clean-dir", "--surrogate-clean"])
    if arguments.clean_dir:
        if not os.path.isdir(arguments.clean_dir):
            raise InvalidExperimentConfig(f"clean directory not found: {arguments.clean_dir}")
        return "dir", arguments.clean_dir
    if arguments.surrogate_clean is not None:
        if arguments.surrogate_clean <= 0:
            raise InvalidExperimentConfig("--surrogate-clean must be positive")
        return "surrogate", arguments.surrogate_clean
    raise MissingArguments(["--clean-dir", "--surrogate-clean"])


def parse_scheme_list(schemes: List[str]) -> List[str]:
    known = [s.value for s in SchemeNames]
    for scheme in schemes:
        if scheme not in known:
            raise InvalidSchemeName(scheme)
    return list(schemes)
