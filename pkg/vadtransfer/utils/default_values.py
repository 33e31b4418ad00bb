import os

from enum import Enum


class _ExtendedEnum(Enum):
    def __get__(self, *args, **kwargs):
        """
        needed so we can access the values directly
        """
        return self.value if self.value is not None else None

# ========= OutputManager Settings


class OutputType(_ExtendedEnum):
    Lines = "lines"
    Status = "status"


class OutputColors(_ExtendedEnum):
    White = '\033[0m'
    Red = '\033[31m'
    Green = '\033[32m'
    Orange = '\033[33m'
    YELLOW = "\033[1;33m"
    Blue = '\033[34m'
    Purple = '\033[35m'
    Cyan = '\033[36m'
    Gray = '\033[37m'
    BOLD = '\033[1m'


class OutputDefaultParams(_ExtendedEnum):
    LineRemove = "\x1b[1A\x1b[2K"
    LineWidth = 110
    MaxLen = 8
    StrTruncLimit = 80
    Delimiter = f"{OutputColors.Purple}{LineWidth * '='}{OutputColors.White}"
    LinePrefix = f"{OutputColors.Gray}>{OutputColors.White}"
    QuietEnvVar = "VADTRANSFER_QUIET"


class OutputStatusKeys(_ExtendedEnum):
    State = "State"
    Progress = "Progress"
    Current = "Current"
    ResultsPath = "ResultsPath"
    Failed = "Failed"
    Left = "Left"
    UsingCache = "UsingCache"


class OutputProgBarParams(_ExtendedEnum):
    ProgBarIntvl = 1
    ProgressMod = 3
    ProgressMax = (100 // ProgressMod)


class OutputValues(_ExtendedEnum):
    StateSetup = ("setting up", OutputColors.Gray)
    StateRunning = ("running", OutputColors.Green)
    StateComplete = ("finished", OutputColors.Green)
    StateFail = ("failed", OutputColors.Red)

    BoolTrue = ("true", OutputColors.YELLOW)
    BoolFalse = "false"

    EmptyStatusVal = "---"
    EmptyProgressBar = f"[{('#' * 0).ljust(OutputProgBarParams.ProgressMax, '-')}]"
    ZeroStatusVal = "0"


class OutputStatuskeyColor(_ExtendedEnum):
    Progress = OutputColors.Cyan
    Failed = OutputColors.Red

# ========= Signal Params


class SignalDefaultParams(_ExtendedEnum):
    SampleRate = 8000
    FrameLengthSec = 0.025
    FrameShiftSec = 0.010
    FrameLength = 200
    FrameShift = 80
    PcmScale = 32768.0
    LabelThresholdDb = 35.0
    SnrDb = 5.0


class FrameLabel(_ExtendedEnum):
    NonSpeech = 0
    Speech = 1

# ========= Feature Params


class FeatureParams(_ExtendedEnum):
    NFft = 256
    LogFloor = 1e-10
    Window = "hamming"

    PitchMinHz = 60.0
    PitchMaxHz = 400.0
    PitchVoicingThreshold = 0.35

    DftBands = 16
    MelFilters = 26
    MfccCoeffs = 20
    LpcOrder = 12

    RastaNumerator = (0.2, 0.1, 0.0, -0.1, -0.2)
    RastaPole = 0.94
    RastaWarmupFrames = 4
    PlpOrder = 16
    PlpBands = 17

    AmsBands = 9
    AmsModulationBins = 15
    AmsContextFrames = 32
    AmsModulationFft = 96

    AggregateWindows = (8, 16)


FEATURE_BLOCKS = (("pitch", 1), ("dft", 16), ("dft8", 16), ("dft16", 16),
                  ("mfcc", 20), ("mfcc8", 20), ("mfcc16", 20),
                  ("lpc", 12), ("rasta_plp", 17), ("ams", 135))
FEATURE_DIM = sum(dim for _, dim in FEATURE_BLOCKS)


class FeatureFileParams(_ExtendedEnum):
    Magic = b"VADF"
    Version = 1
    HeaderFormat = "<4sIII"
    Extension = ".feat"
    CsvExtension = ".csv"

# ========= Corpus Params


class SplitNames(_ExtendedEnum):
    Train = "train"
    Dev = "dev"
    Test = "test"


class CorpusDefaultParams(_ExtendedEnum):
    ManifestName = "manifest.json"
    NoisySuffix = ".noisy.wav"
    CleanSuffix = ".clean.wav"
    LabelSuffix = ".labels.txt"
    NoisyFeatSuffix = ".noisy.feat"
    CleanFeatSuffix = ".clean.feat"
    NormalizerName = "normalizer.csv"
    SplitCounts = "30,30,40"
    SegmentSeconds = 30.0
    SegmentTolerance = 0.02
    UtteranceSeconds = 1.0
    ThreadCount = 4


class NoiseKinds(_ExtendedEnum):
    Babble = "babble"
    Car = "car"
    Restaurant = "restaurant"
    Street = "street"
    Airport = "airport"
    Train = "train"
    Subway = "subway"


class SurrogateParams(_ExtendedEnum):
    F0RangeHz = (90.0, 250.0)
    SyllableRateHz = (3.0, 6.0)
    BurstSec = (0.12, 0.45)
    GapSec = (0.08, 0.35)
    EdgeSilenceSec = (0.08, 0.2)
    RampSec = 0.01
    MaxHarmonicHz = 3500.0
    PeakAmplitude = 0.5
    NoiseRms = 0.1
    CleanPoolPrefix = "clean_"
    NoiseSeconds = 60.0
    PoolDirectory = "clean_pool"
    NoiseDirectory = "noise"

# ========= Network Params


class TrainDefaultParams(_ExtendedEnum):
    HiddenWidths = (54, 7, 7)
    LrPretrain = 0.1  # steps on the batch-mean gradient
    EpochsPretrain = 200
    LrFinetune = 0.125
    EpochsFinetune = 130
    BatchSize = 512
    Seed = 0
    CheckpointEvery = 20
    DecisionThreshold = 0.5
    MaxDepth = 3


class PretrainTarget(_ExtendedEnum):
    LayerInput = "layer_input"
    LayerOutput = "layer_output"


class GradCheckParams(_ExtendedEnum):
    Step = 1e-5
    AbsoluteFallback = 1e-3


class SeedPurpose(_ExtendedEnum):
    Pretrain = 1
    Finetune = 2
    OutputUnit = 3
    Segment = 4


class ModelFileParams(_ExtendedEnum):
    Magic = b"DDNN"
    Version = 1
    HeaderFormat = "<4sIII"
    LayerFormat = "<II"
    Extension = ".ddnn"
    SidecarExtension = ".json"

# ========= Transfer Params


class SchemeNames(_ExtendedEnum):
    LowerBound = "LB"
    Scheme1 = "S1"
    Scheme2 = "S2"
    Scheme3t = "S3t"
    Scheme3s = "S3s"
    UpperBound = "UB"


SCHEME_COLUMN_TITLES = {"LB": "LB", "S1": "S1", "S2": "S2", "S3t": "S3(t)", "S3s": "S3(s)", "UB": "UB"}


class TransferDefaultParams(_ExtendedEnum):
    RunSeeds = (1, 2, 3, 4, 5)
    Depths = (1, 2, 3)
    SegmentSeed = 0
    CacheDirectory = "cache"
    CacheIndexName = "source_stacks.json"
    ModelsDirectory = "models"
    ResultsName = "results.csv"
    TimingsName = "timings.csv"
    PairSeparator = "->"
    ProgLogName = "Progress Log"
    CorporaDirectory = "corpora"
    ReportName = "report.txt"
    SimilarityCsvName = "similarity.csv"
    SimilaritySvgName = "similarity.svg"


class AuditPurpose(_ExtendedEnum):
    Pretrain = "pretrain"
    Finetune = "finetune"
    Select = "select"
    Evaluate = "evaluate"

# ========= Report Params


RESULT_CSV_COLUMNS = ("pair", "depth", "scheme", "seed", "accuracy_pct", "pretrain_s", "finetune_s")
TIMING_CSV_COLUMNS = ("pair", "depth", "scheme", "seed", "stage", "seconds")


class ReportParams(_ExtendedEnum):
    AccuracyFormat = "{:.2f}"
    MissingCell = "--"
    FailedCell = "failed"
    HintonMaxSide = 0.9
    SvgHashSalt = "vadtransfer"
    LabelWidth = 12
    CellWidth = 6

# ========= Default ArgParser Params


class ExitCodes(_ExtendedEnum):
    Success = 0
    TaskFailure = 1
    Usage = 2
    InputOutput = 3


class ArgParserDefaultParams(_ExtendedEnum):
    OutputEnvVar = "VADTRANSFER_OUTPUT"
    ResultsDefaultPath = os.path.join(os.getcwd(), "results")
    JobCount = 1

    LeftPad = 2 * " "
    LJustWidth = 34


class CommandNames(_ExtendedEnum):
    GenCorpus = "gen-corpus"
    Extract = "extract"
    Run = "run"
    Similarity = "similarity"
    Report = "report"
