import os

import numpy as np
import scipy.signal

from pathlib import Path
from typing import Callable, Dict, List
from .utils import *
from .audio import AudioSignal, write_wav

#   --------------------------------------------------------------------------------------------------------------------
#
#   Bundled surrogates for clean speech and for the seven noise scenarios
#
#   * clean  -> harmonic tone bursts with syllabic modulation, separated by silence
#   * noise  -> coloured noise, hums, transients and babble with a distinct signature per scenario
#
#   --------------------------------------------------------------------------------------------------------------------


def _unit(x: np.ndarray) -> np.ndarray:
    rms = np.sqrt(np.mean(x ** 2))
    return x / rms if rms > 0 else x


def _ramp(n: int, sample_rate: int) -> np.ndarray:
    ramp_len = min(n // 2, int(SurrogateParams.RampSec * sample_rate))
    envelope = np.ones(n)
    if ramp_len > 0:
        edge = np.hanning(2 * ramp_len)
        envelope[:ramp_len] = edge[:ramp_len]
        envelope[-ramp_len:] = edge[ramp_len:]
    return envelope


def _voiced_burst(n: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / sample_rate
    f0 = rng.uniform(*SurrogateParams.F0RangeHz)
    f0_track = f0 * (1.0 + 0.03 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t))
    phase = 2 * np.pi * np.cumsum(f0_track) / sample_rate
    formants = (rng.uniform(500.0, 900.0), rng.uniform(1200.0, 2400.0))
    burst = np.zeros(n)
    for k in range(1, int(SurrogateParams.MaxHarmonicHz // f0) + 1):
        freq = k * f0
        weight = sum(np.exp(-0.5 * ((freq - fc) / 250.0) ** 2) for fc in formants) + 0.2
        burst += (weight / k) * np.sin(k * phase)
    syllabic = 0.55 + 0.45 * np.sin(2 * np.pi * rng.uniform(*SurrogateParams.SyllableRateHz) * t
                                    + rng.uniform(0, 2 * np.pi))
    burst *= syllabic * _ramp(n, sample_rate)
    peak = np.max(np.abs(burst))
    return burst / peak * SurrogateParams.PeakAmplitude * rng.uniform(0.6, 1.0) if peak > 0 else burst


def _place_bursts(samples: np.ndarray, start: int, end: int, sample_rate: int, rng: np.random.Generator,
                  gap_range=SurrogateParams.GapSec):
    pos, placed = start, 0
    min_burst = int(0.05 * sample_rate)
    while pos < end:
        length = min(int(rng.uniform(*SurrogateParams.BurstSec) * sample_rate), end - pos)
        if length < min_burst and placed:
            break
        samples[pos:pos + length] += _voiced_burst(length, sample_rate, rng)
        placed += 1
        pos += length + int(rng.uniform(*gap_range) * sample_rate)


def synthesize_clean_utterance(duration_s: float = CorpusDefaultParams.UtteranceSeconds, seed: int = 0,
                               sample_rate: int = SignalDefaultParams.SampleRate) -> AudioSignal:
    """
    Surrogate clean speech: voiced bursts between silences, always with leading and trailing silence.
    """
    rng = derive_rng(seed)
    n = int(round(duration_s * sample_rate))
    samples = np.zeros(n)
    lead = int(rng.uniform(*SurrogateParams.EdgeSilenceSec) * sample_rate)
    tail = int(rng.uniform(*SurrogateParams.EdgeSilenceSec) * sample_rate)
    if n - tail > lead:
        _place_bursts(samples, lead, n - tail, sample_rate, rng)
    return AudioSignal(np.clip(samples, -1.0, 1.0), sample_rate)

# ========= Noise scenarios


def _filtered(rng: np.random.Generator, n: int, sample_rate: int, btype: str, cutoff, order: int = 4) -> np.ndarray:
    b, a = scipy.signal.butter(order, cutoff, btype=btype, fs=sample_rate)
    return _unit(scipy.signal.lfilter(b, a, rng.standard_normal(n)))


def _hum(n: int, sample_rate: int, base_hz: float, harmonics: int) -> np.ndarray:
    t = np.arange(n) / sample_rate
    return _unit(sum(np.sin(2 * np.pi * k * base_hz * t) / k for k in range(1, harmonics + 1)))


def _babble(rng: np.random.Generator, n: int, sample_rate: int, voices: int) -> np.ndarray:
    mixture = np.zeros(n)
    for _ in range(voices):
        stream = np.zeros(n)
        _place_bursts(stream, int(rng.integers(0, sample_rate // 10)), n, sample_rate, rng, gap_range=(0.02, 0.12))
        mixture += stream
    return _unit(mixture)


def _transients(rng: np.random.Generator, n: int, sample_rate: int, rate_hz: float, decay_s: float,
                periodic: bool = False) -> np.ndarray:
    envelope = np.zeros(n)
    if periodic:
        onsets = np.arange(int(rng.integers(0, sample_rate // 2)), n, int(sample_rate / rate_hz))
    else:
        onsets = rng.integers(0, n, size=max(1, int(rate_hz * n / sample_rate)))
    decay = np.exp(-np.arange(int(4 * decay_s * sample_rate)) / (decay_s * sample_rate))
    for onset in onsets:
        stop = min(n, onset + decay.shape[0])
        envelope[onset:stop] += decay[:stop - onset]
    return envelope


def _babble_noise(rng, n, sr):
    return _babble(rng, n, sr, 6) + 0.3 * _filtered(rng, n, sr, "lowpass", 1500)


def _car_noise(rng, n, sr):
    return (_filtered(rng, n, sr, "lowpass", 250) + 0.3 * _hum(n, sr, rng.uniform(25.0, 40.0), 4)
            + 0.1 * _filtered(rng, n, sr, "bandpass", (500, 2000)))


def _restaurant_noise(rng, n, sr):
    clatter = _filtered(rng, n, sr, "highpass", 2000) * _transients(rng, n, sr, 2.0, 0.02)
    return 0.7 * _babble(rng, n, sr, 3) + 0.5 * _filtered(rng, n, sr, "bandpass", (300, 3000)) + 0.6 * _unit(clatter)


def _street_noise(rng, n, sr):
    t = np.arange(n) / sr
    traffic = 1.0 + 0.6 * np.sin(2 * np.pi * rng.uniform(0.1, 0.3) * t + rng.uniform(0, 2 * np.pi))
    return _filtered(rng, n, sr, "lowpass", 1200) * traffic + 0.2 * _filtered(rng, n, sr, "highpass", 2500)


def _airport_noise(rng, n, sr):
    return 0.6 * _babble(rng, n, sr, 4) + _filtered(rng, n, sr, "bandpass", (100, 1000))


def _train_noise(rng, n, sr):
    clacks = _transients(rng, n, sr, rng.uniform(1.2, 2.0), 0.05, periodic=True)
    return (_filtered(rng, n, sr, "bandpass", (80, 700)) * (1.0 + 0.8 * clacks)
            + 0.2 * _filtered(rng, n, sr, "highpass", 3000))


def _subway_noise(rng, n, sr):
    return (_filtered(rng, n, sr, "lowpass", 120) + 0.6 * _hum(n, sr, 50.0, 5)
            + 0.1 * _filtered(rng, n, sr, "bandpass", (200, 800)))


_NOISEKIND_TO_BUILDER_MAP: Dict[str, Callable[[np.random.Generator, int, int], np.ndarray]] = {
    NoiseKinds.Babble: _babble_noise,
    NoiseKinds.Car: _car_noise,
    NoiseKinds.Restaurant: _restaurant_noise,
    NoiseKinds.Street: _street_noise,
    NoiseKinds.Airport: _airport_noise,
    NoiseKinds.Train: _train_noise,
    NoiseKinds.Subway: _subway_noise,
}


def synthesize_noise(kind: str, duration_s: float, seed: int = 0,
                     sample_rate: int = SignalDefaultParams.SampleRate) -> AudioSignal:
    if kind not in _NOISEKIND_TO_BUILDER_MAP:
        raise InvalidExperimentConfig(f"unknown noise kind {kind!r}")
    rng = derive_rng(seed, name_seed(kind))
    n = int(round(duration_s * sample_rate))
    noise = SurrogateParams.NoiseRms * _unit(_NOISEKIND_TO_BUILDER_MAP[kind](rng, n, sample_rate))
    return AudioSignal(np.clip(noise, -1.0, 1.0), sample_rate)


def write_clean_pool(out_dir: str, count: int, duration_s: float = CorpusDefaultParams.UtteranceSeconds,
                     seed: int = 0, sample_rate: int = SignalDefaultParams.SampleRate) -> List[str]:
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    paths = list()
    for i in range(count):
        path = os.path.join(out_dir, f"{SurrogateParams.CleanPoolPrefix}{i:04d}.wav")
        write_wav(path, synthesize_clean_utterance(duration_s, derive_seed(seed, i), sample_rate))
        paths.append(path)
    return paths


def write_noise(out_path: str, kind: str, duration_s: float, seed: int = 0,
                sample_rate: int = SignalDefaultParams.SampleRate) -> str:
    Path(os.path.dirname(out_path) or ".").mkdir(parents=True, exist_ok=True)
    write_wav(out_path, synthesize_noise(kind, duration_s, seed, sample_rate))
    return out_path
