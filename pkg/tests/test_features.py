import numpy as np
import pytest
import scipy.fft
import scipy.linalg
import scipy.signal

from vadtransfer import *
from vadtransfer.features import extract_pitch, extract_dft_bands, extract_mfcc, extract_lpc, autocorrelation, \
    extract_rasta_plp, extract_ams, modulation_frequencies, window_aggregate, mel_filterbank
from conftest import tone

LN_FLOOR = np.log(1e-10)


def _frame(signal: AudioSignal, index: int = 10) -> np.ndarray:
    return frame_signal(signal).frames[index]


def test_pitch_of_pure_tone():
    assert extract_pitch(_frame(tone(200.0))) == pytest.approx(200.0, abs=5.0)


def test_pitch_unvoiced():
    noise = np.random.default_rng(1).normal(0.0, 0.3, 200)
    assert extract_pitch(noise) == 0.0
    assert extract_pitch(np.zeros(200)) == 0.0


def test_dft_bands():
    silent = extract_dft_bands(np.zeros(200))
    assert silent.shape == (16,)
    assert np.allclose(silent, LN_FLOOR)

    bands = extract_dft_bands(_frame(tone(1000.0, amplitude=1.0)))
    tone_bin = int(round(1000.0 * 256 / 8000))
    edges = np.linspace(0, 128, 17).astype(int)
    expected_band = int(np.searchsorted(edges, tone_bin, side="right")) - 1
    assert int(np.argmax(bands)) == expected_band


def test_mfcc_of_silence():
    coeffs = extract_mfcc(np.zeros(200))
    assert coeffs.shape == (20,)
    assert coeffs[0] == pytest.approx(np.sqrt(26) * LN_FLOOR)
    assert np.allclose(coeffs[1:], 0.0, atol=1e-9)


def test_mfcc_matches_direct_computation():
    frame = _frame(tone(440.0, amplitude=0.3)) + np.random.default_rng(2).normal(0.0, 0.01, 200)
    window = scipy.signal.get_window("hamming", 200)
    spectrum = np.abs(np.fft.rfft(frame * window, n=256)) ** 2
    log_mel = np.log(np.maximum(mel_filterbank(8000, 26) @ spectrum, 1e-10))
    n = np.arange(26)
    dct = np.array([np.sum(log_mel * np.cos(np.pi * k * (2 * n + 1) / 52)) for k in range(20)])
    dct *= np.sqrt(2.0 / 26)
    dct[0] /= np.sqrt(2.0)
    assert np.allclose(extract_mfcc(frame), dct, rtol=1e-8, atol=1e-10)


def test_mfcc_batch_matches_single_frames():
    frames = frame_signal(tone(330.0)).frames[:5]
    batch = extract_mfcc(frames)
    for i in range(5):
        assert np.allclose(batch[i], extract_mfcc(frames[i]))


def _ar1(n, coeff=0.9, seed=3):
    rng = np.random.default_rng(seed)
    return scipy.signal.lfilter([1.0], [1.0, -coeff], rng.normal(size=n))


def test_levinson_recovers_ar1():
    x = _ar1(100000)
    r = autocorrelation(x, 12)
    coeffs, errors, _ = levinson_durbin(r, 12)
    assert coeffs[0] == pytest.approx(0.9, abs=0.05)
    assert np.all(np.abs(coeffs[1:]) < 0.05)
    assert np.allclose(coeffs, scipy.linalg.solve_toeplitz(r[:12], r[1:13]), atol=1e-8)
    assert np.all(np.diff(errors) <= 1e-9 * errors[0])


def test_lpc_frames():
    assert np.array_equal(extract_lpc(np.zeros(200)), np.zeros(12))
    frames = frame_signal(AudioSignal(_ar1(8000) * 0.05)).frames
    coeffs = extract_lpc(frames)
    assert coeffs.shape == (98, 12)
    assert np.median(coeffs[:, 0]) == pytest.approx(0.9, abs=0.1)


def test_rasta_steady_state_is_zero():
    flat = np.full((40, 17), 3.7)
    assert np.allclose(rasta_filter(flat), 0.0, atol=1e-12)


def test_rasta_step_matches_impulse_response():
    n_frames, step_at = 60, 10
    bands = np.zeros((n_frames, 17))
    bands[step_at:, 5] = 1.0
    out = rasta_filter(bands)
    impulse = np.zeros(n_frames)
    impulse[0] = 1.0
    h = scipy.signal.lfilter([0.2, 0.1, 0.0, -0.1, -0.2], [1.0, -0.94], impulse)
    expected = np.convolve(bands[:, 5], h)[:n_frames]
    assert np.allclose(out[4:, 5], expected[4:], atol=1e-12)
    assert np.allclose(out[:4], 0.0)
    assert np.allclose(np.delete(out, 5, axis=1), 0.0)


def test_rasta_warmup():
    with pytest.raises(UtteranceTooShort):
        rasta_filter(np.zeros((3, 17)))


def test_rasta_plp_shape_and_stationary_input():
    frames = frame_signal(tone(500.0, duration_s=0.5)).frames
    ceps = extract_rasta_plp(frames)
    assert ceps.shape == (len(frames), 17)
    assert np.all(np.isfinite(ceps))
    assert np.allclose(ceps[10:], ceps[10], atol=1e-8)


def test_ams_dimension_and_context():
    frames = frame_signal(tone(700.0)).frames
    assert extract_ams(frames).shape == (98, 135)
    with pytest.raises(UtteranceTooShort):
        extract_ams(frames[:31])


def test_ams_constant_envelope_is_dc():
    out = extract_ams(frame_signal(tone(1000.0, duration_s=1.0)).frames).reshape(98, 9, 15)
    band = int(np.argmax(out[50, :, 0]))
    assert out[50, band, 0] > 0.0
    assert np.allclose(out[20:80, band, 1:], 0.0, atol=1e-9 * out[50, band, 0])


def test_ams_finds_four_hertz_modulation():
    sr = 8000
    t = np.arange(2 * sr) / sr
    samples = 0.4 * (1.0 + 0.5 * np.sin(2 * np.pi * 4.0 * t)) * np.sin(2 * np.pi * 1000.0 * t)
    frames = frame_signal(AudioSignal(samples, sr)).frames
    out = extract_ams(frames).reshape(len(frames), 9, 15)
    middle = out[40:len(frames) - 40]
    band = int(np.argmax(middle[:, :, 0].mean(axis=0)))
    response = middle[:, band, 1:].mean(axis=0)
    nearest = int(np.argmin(np.abs(modulation_frequencies()[1:] - 4.0)))
    assert int(np.argmax(response)) == nearest


def test_window_aggregate_brute_force():
    base = np.random.default_rng(4).normal(size=(40, 6))
    agg = window_aggregate(base, 8)
    for t in (0, 2, 20, 37, 39):
        lo, hi = max(0, t - 4), min(40, t + 5)
        assert np.allclose(agg[t], base[lo:hi].mean(axis=0), atol=1e-12)
    assert np.array_equal(window_aggregate(base, 1), base)
    constant = np.full((30, 3), 2.5)
    assert np.allclose(window_aggregate(constant, 16), constant)


def test_window_aggregate_is_linear():
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=(50, 4)), rng.normal(size=(50, 4))
    combined = window_aggregate(2.5 * x - 0.75 * y, 16)
    assert np.allclose(combined, 2.5 * window_aggregate(x, 16) - 0.75 * window_aggregate(y, 16), atol=1e-10)


def test_extract_all_layout():
    utterance = tone(200.0)
    matrix = extract_all(utterance)
    assert matrix.rows.shape == (98, FEATURE_DIM) == (98, 273)
    assert [dim for _, dim in FEATURE_BLOCKS] == [1, 16, 16, 16, 20, 20, 20, 12, 17, 135]
    assert np.allclose(matrix.block("pitch")[10:-10, 0], 200.0, atol=5.0)
    assert np.allclose(matrix.block("dft8"), window_aggregate(matrix.block("dft"), 8))
    assert np.allclose(matrix.block("mfcc16"), window_aggregate(matrix.block("mfcc"), 16))
    assert np.array_equal(extract_all(utterance).rows, matrix.rows)
