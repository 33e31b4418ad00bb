from .utils import *
from .feature_store import FeatureMatrix
from .network import TrainConfig
from .base_experiment import SchemeRunner, TransferTask, PretrainedModel, SchemeResult

#   --------------------------------------------------------------------------------------------------------------------
#
#   Scheme 2 - pre-train on the source train set pooled with the target segment, fine-tune on the labeled source
#
#   --------------------------------------------------------------------------------------------------------------------


class Scheme2Runner(SchemeRunner):
    SCHEME_NICKNAME = SchemeNames.Scheme2
    _RUN_COLOR = OutputColors.Purple

    def _pretrain(self, task: TransferTask, cfg: TrainConfig) -> PretrainedModel:
        self._log_status(OutputStatusKeys.State, OutputValues.StateRunning)
        src_noisy, src_clean = self._raw_split(task.source, SplitNames.Train, with_labels=False)
        seg_noisy, seg_clean = self._segment_features(task)
        if not len(seg_noisy):
            self._log_progress(f"{task.pair} empty adaptation segment, pre-training on the source only")
        normalizer = self._fit_normalizer([src_noisy, src_clean, seg_noisy, seg_clean],
                                          source=f"{task.source.noise_type}/{SplitNames.Train}+"
                                                 f"{task.adaptation.noise_type}/segment")
        # rows are reshuffled every epoch under the run seed
        noisy = FeatureMatrix.concat([src_noisy, seg_noisy], keep_labels=False)
        clean = FeatureMatrix.concat([src_clean, seg_clean], keep_labels=False)
        noisy_result, _ = self._pretrain_on(noisy, clean, normalizer, task.depth, cfg)
        return PretrainedModel(noisy_result.stack, normalizer)


def run_scheme2(task: TransferTask, **kwargs) -> SchemeResult:
    return Scheme2Runner(**kwargs).run(task)


if __name__ == "__main__":
    pass
