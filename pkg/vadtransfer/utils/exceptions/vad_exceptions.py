from typing import List

from ..default_values import ExitCodes


class VadTransferException(Exception):
    _MESSAGE = ""
    EXIT_CODE = ExitCodes.Usage

    def __init__(self, bad_input=""):
        message = self._generate_message(bad_input)
        super().__init__(message)

    def _generate_message(self, invalid_input) -> str:
        return f"{self._MESSAGE} - {invalid_input}" if invalid_input != "" else self._MESSAGE


class VadTransferIOError(VadTransferException):
    EXIT_CODE = ExitCodes.InputOutput

# ====== Audio Exceptions


class MalformedWavHeader(VadTransferIOError):
    _MESSAGE = "Malformed or unreadable wav file"

    def __init__(self, path):
        super().__init__(path)


class UnsupportedWavEncoding(VadTransferIOError):
    _MESSAGE = "Unsupported wav encoding, expected 16-bit PCM"

    def __init__(self, path, encoding):
        super().__init__(f"{path} -> {encoding}")


class MultiChannelWav(VadTransferIOError):
    _MESSAGE = "Multi-channel wav files are not supported"

    def __init__(self, path, channels):
        super().__init__(f"{path} -> {channels} channels")


class SignalTooShort(VadTransferException):
    _MESSAGE = "Signal is too short"

    def __init__(self, length, required):
        super().__init__(f"{length} samples, at least {required} required")


class SampleRateMismatch(VadTransferException):
    _MESSAGE = "Sample rates differ"

    def __init__(self, rate_a, rate_b):
        super().__init__(f"{rate_a} != {rate_b}")


class ZeroPowerSignal(VadTransferException):
    _MESSAGE = "Signal power is zero, SNR is undefined"

    def __init__(self, which):
        super().__init__(which)

# ====== Feature Exceptions


class UtteranceTooShort(VadTransferException):
    _MESSAGE = "Utterance too short for the analysis context"

    def __init__(self, feature, frames, required):
        super().__init__(f"{feature}: {frames} frames, at least {required} required")


class EmptyFeatureInput(VadTransferException):
    _MESSAGE = "No feature rows given"

    def __init__(self, where=""):
        super().__init__(where)


class DimensionMismatch(VadTransferException):
    _MESSAGE = "Dimension mismatch"

    def __init__(self, expected, actual):
        super().__init__(f"expected {expected}, got {actual}")


class InvalidFeatureFile(VadTransferIOError):
    _MESSAGE = "Invalid feature file"

    def __init__(self, path, reason):
        super().__init__(f"{path} -> {reason}")

# ====== Corpus Exceptions


class InsufficientCleanPool(VadTransferException):
    _MESSAGE = "Not enough clean utterances for the requested split counts"

    def __init__(self, available, required):
        super().__init__(f"{available} available, {required} required")


class InsufficientTrainAudio(VadTransferException):
    _MESSAGE = "Not enough training audio for the adaptation segment"

    def __init__(self, available_s, required_s):
        super().__init__(f"{available_s:.2f}s available, {required_s:.2f}s required")


class InvalidSplitName(VadTransferException):
    _MESSAGE = "Invalid split name"

    def __init__(self, split):
        super().__init__(split)


class MissingCorpusFile(VadTransferIOError):
    _MESSAGE = "Missing corpus file"

    def __init__(self, path):
        super().__init__(path)


class LabelLengthMismatch(VadTransferException):
    _MESSAGE = "Label count does not match frame count"

    def __init__(self, path, labels, frames):
        super().__init__(f"{path} -> {labels} labels, {frames} frames")


class RowCountMismatch(VadTransferException):
    _MESSAGE = "Clean and noisy feature rows are not aligned"

    def __init__(self, where, noisy, clean):
        super().__init__(f"{where} -> noisy {noisy}, clean {clean}")

# ====== Network Exceptions


class InvalidNetworkShape(VadTransferException):
    _MESSAGE = "Invalid network shape"

    def __init__(self, reason):
        super().__init__(reason)


class InvalidModelFile(VadTransferIOError):
    _MESSAGE = "Invalid model file"

    def __init__(self, path, reason):
        super().__init__(f"{path} -> {reason}")

# ====== Transfer Exceptions


class InvalidSchemeName(VadTransferException):
    _MESSAGE = "Invalid scheme name"

    def __init__(self, scheme_name):
        super().__init__(scheme_name)


class InvalidDepth(VadTransferException):
    _MESSAGE = "Invalid network depth for scheme"

    def __init__(self, scheme_name, depth):
        super().__init__(f"{scheme_name} -> depth {depth}")


class EmptyAdaptationSegment(VadTransferException):
    _MESSAGE = "The adaptation segment is empty"

    def __init__(self, noise_type):
        super().__init__(noise_type)


class LeakedTestLabels(VadTransferException):
    _MESSAGE = "Target test labels were read outside evaluation"

    def __init__(self, corpus, purpose):
        super().__init__(f"{corpus} -> {purpose}")


class SchemeRunFailed(VadTransferException):
    _MESSAGE = "Scheme run failed"
    EXIT_CODE = ExitCodes.TaskFailure

    def __init__(self, scheme_name, seed, reason):
        super().__init__(f"{scheme_name} seed {seed}: {reason}")

# ====== Eval Exceptions


class EmptyResultTable(VadTransferException):
    _MESSAGE = "Result table is empty"

    def __init__(self):
        super().__init__()


class InvalidResultFile(VadTransferIOError):
    _MESSAGE = "Invalid results file"

    def __init__(self, path, reason):
        super().__init__(f"{path} -> {reason}")

# ====== Parser Exceptions


class InvalidExperimentConfig(VadTransferException):
    _MESSAGE = "Invalid experiment config"

    def __init__(self, reason):
        super().__init__(reason)


class MissingArguments(VadTransferException):
    _MESSAGE = "Missing arguments"

    def __init__(self, args: List[str]):
        super().__init__(','.join(args))


class ContradictingArguments(VadTransferException):
    _MESSAGE = "The chosen arguments cannot be set simultaneously"

    def __init__(self, args: List[str]):
        super().__init__(','.join(args))

# ====== Output Exceptions


class MissingOutputDictKeys(VadTransferException):
    _MESSAGE = "Missing output dict keys"


class InvalidOutputType(VadTransferException):
    _MESSAGE = "Invalid output type"
