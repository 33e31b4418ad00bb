import os

import numpy as np
import soundfile as sf

from dataclasses import dataclass, field
from typing import Optional, Sequence
from .utils import *

#   --------------------------------------------------------------------------------------------------------------------
#
#   Audio I/O, framing, SNR-controlled noise mixing and energy-based frame labels
#
#   --------------------------------------------------------------------------------------------------------------------


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray
    sample_rate: int = SignalDefaultParams.SampleRate
    clipped: int = 0  # samples clipped to [-1, 1] when the signal was produced by mixing

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def power(self) -> float:
        return float(np.mean(self.samples ** 2)) if len(self) else 0.0


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (n_frames, frame_length)
    frame_length: int
    frame_shift: int
    starts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.starts is None:
            object.__setattr__(self, "starts", np.arange(self.frames.shape[0]) * self.frame_shift)

    def __len__(self) -> int:
        return self.frames.shape[0]


def frame_params(sample_rate: int):
    """
    (frame_length, frame_shift) in samples for 25 ms / 10 ms at the given rate
    """
    if sample_rate == SignalDefaultParams.SampleRate:
        return SignalDefaultParams.FrameLength, SignalDefaultParams.FrameShift
    return (int(round(SignalDefaultParams.FrameLengthSec * sample_rate)),
            int(round(SignalDefaultParams.FrameShiftSec * sample_rate)))


def frame_count(n_samples: int, frame_length: int = SignalDefaultParams.FrameLength,
                frame_shift: int = SignalDefaultParams.FrameShift) -> int:
    if n_samples < frame_length:
        return 0
    return (n_samples - frame_length) // frame_shift + 1


def read_wav(path: str) -> AudioSignal:
    if not os.path.isfile(path):
        raise MissingCorpusFile(path)
    try:
        info = sf.info(path)
    except Exception:
        raise MalformedWavHeader(path)
    if info.format != "WAV" or info.subtype != "PCM_16":
        raise UnsupportedWavEncoding(path, f"{info.format}/{info.subtype}")
    if info.channels != 1:
        raise MultiChannelWav(path, info.channels)
    try:
        data, sample_rate = sf.read(path, dtype="int16", always_2d=False)
    except Exception:
        raise MalformedWavHeader(path)
    return AudioSignal(data.astype(np.float64) / SignalDefaultParams.PcmScale, int(sample_rate))


def write_wav(path: str, signal: AudioSignal):
    pcm = np.clip(np.round(signal.samples * SignalDefaultParams.PcmScale), -32768, 32767).astype(np.int16)
    sf.write(path, pcm, signal.sample_rate, subtype="PCM_16", format="WAV")


def frame_signal(signal: AudioSignal, frame_length: Optional[int] = None,
                 frame_shift: Optional[int] = None) -> FrameSequence:
    default_length, default_shift = frame_params(signal.sample_rate)
    frame_length = frame_length or default_length
    frame_shift = frame_shift or default_shift
    if len(signal) < frame_length:
        raise SignalTooShort(len(signal), frame_length)
    windows = np.lib.stride_tricks.sliding_window_view(signal.samples, frame_length)[::frame_shift]
    return FrameSequence(np.ascontiguousarray(windows), frame_length, frame_shift)


def snr_gain(clean_power: float, noise_power: float, snr_db: float) -> float:
    if clean_power <= 0:
        raise ZeroPowerSignal("clean")
    if noise_power <= 0:
        raise ZeroPowerSignal("noise")
    return float(np.sqrt(clean_power / (noise_power * 10.0 ** (snr_db / 10.0))))


def noise_excerpt(noise: AudioSignal, length: int, offset: int = 0) -> np.ndarray:
    """
    `length` noise samples starting at `offset`, wrapping around (tiling) when the noise is shorter
    """
    if len(noise) == 0:
        raise ZeroPowerSignal("noise")
    idx = (offset + np.arange(length)) % len(noise)
    return noise.samples[idx]


def mix_at_snr(clean: AudioSignal, noise: AudioSignal, snr_db: float, offset: int = 0) -> AudioSignal:
    if clean.sample_rate != noise.sample_rate:
        raise SampleRateMismatch(clean.sample_rate, noise.sample_rate)
    excerpt = noise_excerpt(noise, len(clean), offset)
    gain = snr_gain(clean.power, float(np.mean(excerpt ** 2)), snr_db)
    mixed = clean.samples + gain * excerpt
    clipped = int(np.count_nonzero(np.abs(mixed) > 1.0))
    return AudioSignal(np.clip(mixed, -1.0, 1.0), clean.sample_rate, clipped)


def frame_log_energy(frames: FrameSequence) -> np.ndarray:
    """
    per-frame energy in dB, -inf for all-zero frames
    """
    energy = np.sum(frames.frames ** 2, axis=1)
    log_energy = np.full(energy.shape, -np.inf)
    positive = energy > 0
    log_energy[positive] = 10.0 * np.log10(energy[positive])
    return log_energy


def frame_labels_from_clean(clean: AudioSignal,
                            energy_threshold_db: float = SignalDefaultParams.LabelThresholdDb) -> np.ndarray:
    log_energy = frame_log_energy(frame_signal(clean))
    labels = np.full(log_energy.shape, FrameLabel.NonSpeech, dtype=np.int8)
    peak = np.max(log_energy)
    if np.isfinite(peak):
        labels[log_energy > peak - energy_threshold_db] = FrameLabel.Speech
    return labels


def write_labels(path: str, labels: Sequence[int]):
    with open(path, "w") as lf:
        lf.write("".join("1" if lab == FrameLabel.Speech else "0" for lab in labels) + "\n")


def read_labels(path: str) -> np.ndarray:
    try:
        with open(path, "r") as lf:
            text = lf.read().strip("\n")
    except OSError:
        raise MissingCorpusFile(path)
    if set(text) - {"0", "1"}:
        raise InvalidFeatureFile(path, "label file may only contain '0' and '1'")
    return (np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")).astype(np.int8)
