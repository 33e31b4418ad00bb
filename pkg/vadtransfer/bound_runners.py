from typing import Any, Dict
from .utils import *
from .corpus import CorpusManifest
from .network import TrainConfig
from .base_experiment import SchemeRunner, TransferTask, PretrainedModel, SchemeResult

#   --------------------------------------------------------------------------------------------------------------------
#
#   Reference schemes without adaptation
#
#   * LowerBoundRunner -> DDNN trained on the source corpus only, then tested on the target
#   * UpperBoundRunner -> DDNN trained and fine-tuned on the target corpus itself
#
#   --------------------------------------------------------------------------------------------------------------------


class _CorpusBoundRunner(SchemeRunner):
    def _pretrain_corpus(self, task: TransferTask) -> CorpusManifest:
        return task.source

    def _pretrain(self, task: TransferTask, cfg: TrainConfig) -> PretrainedModel:
        corpus = self._pretrain_corpus(task)
        self._log_status(OutputStatusKeys.State, OutputValues.StateRunning)
        noisy, clean = self._raw_split(corpus, SplitNames.Train, with_labels=False)
        normalizer = self._fit_normalizer([noisy, clean], source=f"{corpus.noise_type}/{SplitNames.Train}")
        noisy_result, _ = self._pretrain_on(noisy, clean, normalizer, task.depth, cfg)
        return PretrainedModel(noisy_result.stack, normalizer)

    def _define_status_output(self) -> Dict[str, Any]:
        status = super()._define_status_output()
        status[OutputStatusKeys.Progress] = OutputValues.EmptyProgressBar
        return status


class LowerBoundRunner(_CorpusBoundRunner):
    SCHEME_NICKNAME = SchemeNames.LowerBound
    _RUN_COLOR = OutputColors.Blue


class UpperBoundRunner(_CorpusBoundRunner):
    SCHEME_NICKNAME = SchemeNames.UpperBound
    _RUN_COLOR = OutputColors.Green

    def _pretrain_corpus(self, task: TransferTask) -> CorpusManifest:
        return task.target

    def _finetune_corpus(self, task: TransferTask) -> CorpusManifest:
        return task.target


def run_lb(task: TransferTask, **kwargs) -> SchemeResult:
    return LowerBoundRunner(**kwargs).run(task)


def run_ub(task: TransferTask, **kwargs) -> SchemeResult:
    return UpperBoundRunner(**kwargs).run(task)


if __name__ == "__main__":
    pass
