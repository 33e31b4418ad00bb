from .utils import *
from .network import TrainConfig
from .base_experiment import SchemeRunner, TransferTask, PretrainedModel, SchemeResult

#   --------------------------------------------------------------------------------------------------------------------
#
#   Scheme 1 - pre-train every layer on the unlabeled target segment only, fine-tune on the labeled source
#
#   --------------------------------------------------------------------------------------------------------------------


class Scheme1Runner(SchemeRunner):
    SCHEME_NICKNAME = SchemeNames.Scheme1
    _RUN_COLOR = OutputColors.Cyan

    def _pretrain(self, task: TransferTask, cfg: TrainConfig) -> PretrainedModel:
        if task.adaptation.is_empty:
            raise EmptyAdaptationSegment(task.target.noise_type)
        self._log_status(OutputStatusKeys.State, OutputValues.StateRunning)
        noisy, clean = self._segment_features(task)
        if not len(noisy):
            raise EmptyAdaptationSegment(task.target.noise_type)
        normalizer = self._fit_normalizer([noisy, clean], source=f"{task.adaptation.noise_type}/segment")
        noisy_result, _ = self._pretrain_on(noisy, clean, normalizer, task.depth, cfg)
        return PretrainedModel(noisy_result.stack, normalizer)


def run_scheme1(task: TransferTask, **kwargs) -> SchemeResult:
    return Scheme1Runner(**kwargs).run(task)


if __name__ == "__main__":
    pass
