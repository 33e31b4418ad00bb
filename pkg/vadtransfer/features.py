import numpy as np
import librosa
import scipy.fft
import scipy.signal

from functools import lru_cache
from typing import Tuple, Union
from .utils import *
from .audio import AudioSignal, FrameSequence, frame_signal
from .feature_store import FeatureMatrix

#   --------------------------------------------------------------------------------------------------------------------
#
#   The ten per-frame acoustic features (273 dims)
#
#   * Pitch (1)         -> autocorrelation F0, 0 when unvoiced
#   * DFT (16 x 3)      -> log mean magnitude in 16 uniform bands, plus 8 / 16 frame window means
#   * MFCC (20 x 3)     -> 26 mel filters, DCT-II, plus 8 / 16 frame window means
#   * LPC (12)          -> Levinson-Durbin on the windowed frame
#   * RASTA-PLP (17)    -> bark bands, RASTA filtering, equal loudness, order-16 all-pole cepstra
#   * AMS (135)         -> 9 mel band envelopes x 15 modulation bins over a 32-frame context
#
#   --------------------------------------------------------------------------------------------------------------------

FramesLike = Union[np.ndarray, FrameSequence]


def _frames_array(frames: FramesLike) -> np.ndarray:
    if isinstance(frames, FrameSequence):
        return frames.frames
    return np.asarray(frames, dtype=np.float64)


@lru_cache(maxsize=8)
def _window(length: int) -> np.ndarray:
    return scipy.signal.get_window(FeatureParams.Window, length)


def _magnitude_spectrum(frames: np.ndarray) -> np.ndarray:
    windowed = frames * _window(frames.shape[-1])
    return np.abs(scipy.fft.rfft(windowed, n=FeatureParams.NFft, axis=-1))


@lru_cache(maxsize=4)
def _dft_band_matrix(n_bins: int, n_bands: int) -> np.ndarray:
    edges = np.linspace(0, n_bins - 1, n_bands + 1).astype(int)
    bands = np.zeros((n_bands, n_bins))
    for b in range(n_bands):
        stop = edges[b + 1] + 1 if b == n_bands - 1 else edges[b + 1]  # last band keeps the Nyquist bin
        bands[b, edges[b]:stop] = 1.0 / (stop - edges[b])
    return bands


@lru_cache(maxsize=8)
def mel_filterbank(sample_rate: int, n_mels: int) -> np.ndarray:
    return librosa.filters.mel(sr=sample_rate, n_fft=FeatureParams.NFft, n_mels=n_mels,
                               fmin=0.0, fmax=sample_rate / 2.0, htk=True, norm=None)


def hz_to_bark(f):
    return 7.0 * np.arcsinh(np.asarray(f) / 650.0)


def bark_to_hz(b):
    return 650.0 * np.sinh(np.asarray(b) / 7.0)


@lru_cache(maxsize=4)
def bark_filterbank(sample_rate: int, n_bands: int) -> np.ndarray:
    n_bins = FeatureParams.NFft // 2 + 1
    fft_freqs = np.arange(n_bins) * sample_rate / FeatureParams.NFft
    max_bark = hz_to_bark(sample_rate / 2.0)
    edges = bark_to_hz(np.arange(n_bands + 2) * max_bark / (n_bands + 1))
    weights = np.zeros((n_bands, n_bins))
    for i in range(n_bands):
        lo, mid, hi = edges[i:i + 3]
        rising = (fft_freqs - lo) / (mid - lo)
        falling = (hi - fft_freqs) / (hi - mid)
        weights[i] = np.maximum(0.0, np.minimum(rising, falling))
    return weights

# ========= Frame-level features


def extract_pitch(frame_context: np.ndarray, sample_rate: int = SignalDefaultParams.SampleRate) -> float:
    x = np.asarray(frame_context, dtype=np.float64)
    x = x - x.mean()
    energy = float(x @ x)
    if energy <= 0.0:
        return 0.0
    min_lag = int(np.ceil(sample_rate / FeatureParams.PitchMaxHz))
    max_lag = min(int(sample_rate // FeatureParams.PitchMinHz), len(x) - 2)
    if max_lag <= min_lag:
        return 0.0
    acf = np.array([x[:len(x) - k] @ x[k:] for k in range(max_lag + 2)]) / energy
    lag = min_lag + int(np.argmax(acf[min_lag:max_lag + 1]))
    if acf[lag] < FeatureParams.PitchVoicingThreshold:
        return 0.0
    left, centre, right = acf[lag - 1], acf[lag], acf[lag + 1]
    curvature = left - 2.0 * centre + right
    shift = 0.5 * (left - right) / curvature if curvature < 0 else 0.0
    f0 = sample_rate / (lag + shift)
    return float(np.clip(f0, FeatureParams.PitchMinHz, FeatureParams.PitchMaxHz))


def extract_dft_bands(frame: FramesLike) -> np.ndarray:
    frames = _frames_array(frame)
    magnitude = _magnitude_spectrum(np.atleast_2d(frames))
    bands = magnitude @ _dft_band_matrix(magnitude.shape[-1], FeatureParams.DftBands).T
    out = np.log(np.maximum(bands, FeatureParams.LogFloor))
    return out[0] if frames.ndim == 1 else out


def extract_mfcc(frame: FramesLike, sample_rate: int = SignalDefaultParams.SampleRate) -> np.ndarray:
    frames = _frames_array(frame)
    power = _magnitude_spectrum(np.atleast_2d(frames)) ** 2
    energies = power @ mel_filterbank(sample_rate, FeatureParams.MelFilters).T
    log_energies = np.log(np.maximum(energies, FeatureParams.LogFloor))
    out = scipy.fft.dct(log_energies, type=2, norm="ortho", axis=-1)[:, :FeatureParams.MfccCoeffs]
    return out[0] if frames.ndim == 1 else out


def autocorrelation(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = x.shape[-1]
    return np.array([x[..., :n - k] @ x[..., k:] if x.ndim == 1 else np.sum(x[..., :n - k] * x[..., k:], axis=-1)
                     for k in range(max_lag + 1)]).T


def levinson_durbin(r: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Solve the autocorrelation normal equations for x[n] ~ sum_j a_j x[n - j].

    :return: predictor coefficients a_1..a_p, prediction error for orders 0..p, reflection coefficients
    """
    r = np.asarray(r, dtype=np.float64)
    coeffs = np.zeros(order)
    errors = np.zeros(order + 1)
    reflection = np.zeros(order)
    error = r[0]
    errors[0] = error
    if error <= 0.0:
        return coeffs, errors, reflection
    for i in range(order):
        acc = r[i + 1] - coeffs[:i] @ r[i:0:-1]
        k = acc / error
        if not np.isfinite(k) or abs(k) >= 1.0:
            errors[i + 1:] = error
            break
        previous = coeffs[:i].copy()
        coeffs[:i] = previous - k * previous[::-1]
        coeffs[i] = k
        reflection[i] = k
        error *= (1.0 - k * k)
        errors[i + 1] = error
    return coeffs, errors, reflection


def extract_lpc(frame: FramesLike, order: int = FeatureParams.LpcOrder) -> np.ndarray:
    frames = _frames_array(frame)
    batch = np.atleast_2d(frames)
    out = np.zeros((batch.shape[0], order))
    windowed = batch * _window(batch.shape[-1])
    for i, row in enumerate(windowed):
        r = autocorrelation(row, order)
        if r[0] > 0.0:
            out[i] = levinson_durbin(r, order)[0]
    return out[0] if frames.ndim == 1 else out

# ========= Utterance-level features


def rasta_filter(log_bands: np.ndarray) -> np.ndarray:
    """
    RASTA band-pass filter along time (axis 0). The first frames only prime the filter state and are output as 0.
    """
    n_frames = log_bands.shape[0]
    warmup = FeatureParams.RastaWarmupFrames
    if n_frames < warmup:
        raise UtteranceTooShort("rasta_plp", n_frames, warmup)
    numerator = np.asarray(FeatureParams.RastaNumerator)
    denominator = np.array([1.0, -FeatureParams.RastaPole])
    x = np.asarray(log_bands, dtype=np.float64).T
    zi = scipy.signal.lfilter_zi(numerator, 1.0)[None, :] * x[:, :1]
    _, state = scipy.signal.lfilter(numerator, 1.0, x[:, :warmup], axis=1, zi=zi)
    y = np.zeros_like(x)
    if n_frames > warmup:
        y[:, warmup:], _ = scipy.signal.lfilter(numerator, denominator, x[:, warmup:], axis=1, zi=state)
    return y.T


def equal_loudness(n_bands: int, max_hz: float) -> np.ndarray:
    centres = bark_to_hz(np.linspace(0.0, hz_to_bark(max_hz), n_bands))
    fsq = centres ** 2
    return ((fsq / (fsq + 1.6e5)) ** 2) * ((fsq + 1.44e6) / (fsq + 9.61e6))


def lpc_to_cepstrum(coeffs: np.ndarray, gain: float, n_ceps: int) -> np.ndarray:
    polynomial = np.zeros(n_ceps)
    polynomial[1:min(n_ceps, coeffs.shape[0] + 1)] = -coeffs[:n_ceps - 1]
    ceps = np.zeros(n_ceps)
    ceps[0] = np.log(max(gain, FeatureParams.LogFloor))
    for n in range(1, n_ceps):
        k = np.arange(1, n)
        ceps[n] = -polynomial[n] - np.sum(k * ceps[k] * polynomial[n - k]) / n
    return ceps


def extract_rasta_plp(frame_stream: FramesLike, sample_rate: int = SignalDefaultParams.SampleRate) -> np.ndarray:
    frames = _frames_array(frame_stream)
    n_bands, order = FeatureParams.PlpBands, FeatureParams.PlpOrder
    power = _magnitude_spectrum(frames) ** 2
    bark_bands = power @ bark_filterbank(sample_rate, n_bands).T
    filtered = rasta_filter(np.log(np.maximum(bark_bands, FeatureParams.LogFloor)))
    auditory = (np.exp(filtered) * equal_loudness(n_bands, sample_rate / 2.0)) ** (1.0 / 3.0)
    auditory[:, 0] = auditory[:, 1]
    auditory[:, -1] = auditory[:, -2]

    symmetric = np.concatenate([auditory, auditory[:, -2:0:-1]], axis=1)
    acf = np.real(scipy.fft.ifft(symmetric, axis=1))[:, :order + 1]
    out = np.zeros((frames.shape[0], order + 1))
    for i, r in enumerate(acf):
        coeffs, errors, _ = levinson_durbin(r, order)
        out[i] = lpc_to_cepstrum(coeffs, errors[-1], order + 1)
    return out


def modulation_frequencies(frame_rate: float = 1.0 / SignalDefaultParams.FrameShiftSec) -> np.ndarray:
    return np.arange(FeatureParams.AmsModulationBins) * frame_rate / FeatureParams.AmsModulationFft


def extract_ams(frame_stream: FramesLike, sample_rate: int = SignalDefaultParams.SampleRate) -> np.ndarray:
    frames = _frames_array(frame_stream)
    n_frames = frames.shape[0]
    context = FeatureParams.AmsContextFrames
    if n_frames < context:
        raise UtteranceTooShort("ams", n_frames, context)
    n_mod = FeatureParams.AmsModulationBins
    power = _magnitude_spectrum(frames) ** 2
    envelopes = np.sqrt(power @ mel_filterbank(sample_rate, FeatureParams.AmsBands).T)  # (n_frames, bands)

    half = context // 2
    kernels = dict()
    out = np.zeros((n_frames, FeatureParams.AmsBands, n_mod))
    for t in range(n_frames):
        lo, hi = max(0, t - half), min(n_frames, t + half)
        length = hi - lo
        if length not in kernels:
            window = scipy.signal.get_window("hann", length, fftbins=False)
            phase = np.exp(-2j * np.pi * np.outer(np.arange(length), np.arange(1, n_mod)) / FeatureParams.AmsModulationFft)
            kernels[length] = (window / window.sum(), phase)
        weights, phase = kernels[length]
        segment = envelopes[lo:hi]
        dc = weights @ segment
        out[t, :, 0] = dc
        out[t, :, 1:] = 2.0 * np.abs(((segment - dc) * weights[:, None]).T @ phase)
    return out.reshape(n_frames, FeatureParams.AmsBands * n_mod)


def window_aggregate(base_features: np.ndarray, window_w: int) -> np.ndarray:
    base = np.asarray(base_features, dtype=np.float64)
    half = window_w // 2
    if half == 0:
        return base.copy()
    n = base.shape[0]
    cumulative = np.vstack([np.zeros((1, base.shape[1])), np.cumsum(base, axis=0)])
    t = np.arange(n)
    lo, hi = np.maximum(0, t - half), np.minimum(n, t + half + 1)
    return (cumulative[hi] - cumulative[lo]) / (hi - lo)[:, None]


def extract_all(utterance: AudioSignal) -> FeatureMatrix:
    frames = frame_signal(utterance)
    rate = utterance.sample_rate
    pitch = np.array([extract_pitch(frame, rate) for frame in frames.frames])[:, None]
    dft = extract_dft_bands(frames.frames)
    mfcc = extract_mfcc(frames.frames, rate)
    short, long_ = FeatureParams.AggregateWindows
    blocks = [pitch,
              dft, window_aggregate(dft, short), window_aggregate(dft, long_),
              mfcc, window_aggregate(mfcc, short), window_aggregate(mfcc, long_),
              extract_lpc(frames.frames),
              extract_rasta_plp(frames.frames, rate),
              extract_ams(frames.frames, rate)]
    return FeatureMatrix(np.hstack(blocks))
