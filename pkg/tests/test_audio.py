import numpy as np
import pytest
import soundfile as sf

from vadtransfer import *
from conftest import tone


def test_frame_count_one_second():
    signal = AudioSignal(np.zeros(8000))
    frames = frame_signal(signal)
    assert len(frames) == 98 == frame_count(8000)
    assert frames.frames.shape == (98, 200)
    assert np.all(np.diff(frames.starts) == 80)


def test_frame_boundaries():
    assert len(frame_signal(AudioSignal(np.zeros(200)))) == 1
    with pytest.raises(SignalTooShort):
        frame_signal(AudioSignal(np.zeros(199)))


def test_frames_are_views_of_the_signal():
    samples = np.arange(1000, dtype=np.float64)
    frames = frame_signal(AudioSignal(samples))
    for k in (0, 3, len(frames) - 1):
        assert np.array_equal(frames.frames[k], samples[k * 80:k * 80 + 200])


def test_snr_gain_closed_forms():
    assert snr_gain(1.0, 1.0, 0.0) == pytest.approx(1.0)
    assert snr_gain(0.3, 0.3, 5.0) == pytest.approx(0.5623, abs=1e-4)
    with pytest.raises(ZeroPowerSignal):
        snr_gain(0.0, 1.0, 5.0)
    with pytest.raises(ZeroPowerSignal):
        snr_gain(1.0, 0.0, 5.0)


def test_mix_hits_requested_snr():
    clean = tone(300.0, amplitude=0.2)
    noise = AudioSignal(np.random.default_rng(4).normal(0.0, 0.05, 12000))
    mixed = mix_at_snr(clean, noise, 5.0, offset=100)
    assert mixed.clipped == 0
    scaled_noise = mixed.samples - clean.samples
    measured = 10.0 * np.log10(clean.power / np.mean(scaled_noise ** 2))
    assert abs(measured - 5.0) < 0.01


def test_mix_absorbs_noise_scale():
    clean = tone(250.0, amplitude=0.2)
    noise = AudioSignal(np.random.default_rng(5).normal(0.0, 0.05, 9000))
    louder = AudioSignal(noise.samples * 7.5)
    a = mix_at_snr(clean, noise, 5.0)
    b = mix_at_snr(clean, louder, 5.0)
    assert np.max(np.abs(a.samples - b.samples)) < 1e-10


def test_mix_tiles_short_noise_and_counts_clipping():
    clean = tone(200.0, amplitude=0.99)
    noise = AudioSignal(np.random.default_rng(6).normal(0.0, 1.0, 500))
    mixed = mix_at_snr(clean, noise, -10.0)
    assert len(mixed) == len(clean)
    assert mixed.clipped > 0
    assert np.all(np.abs(mixed.samples) <= 1.0)
    assert np.array_equal(noise_excerpt(noise, 1200)[500:1000], noise.samples)


def test_mix_rejects_rate_mismatch():
    with pytest.raises(SampleRateMismatch):
        mix_at_snr(tone(200.0), AudioSignal(np.ones(8000), 16000), 5.0)


def test_labels_silence_is_nonspeech():
    labels = frame_labels_from_clean(AudioSignal(np.zeros(8000)))
    assert len(labels) == 98
    assert not labels.any()


def test_labels_follow_tone_bursts():
    burst = 800
    samples = tone(500.0, duration_s=1.0, amplitude=0.9).samples.copy()
    for start in range(burst, len(samples), 2 * burst):
        samples[start:start + burst] = 0.0
    signal = AudioSignal(samples)
    labels = frame_labels_from_clean(signal, energy_threshold_db=30.0)
    starts = frame_signal(signal).starts
    for k, start in enumerate(starts):
        in_tone = (start // burst) % 2 == 0 and ((start + 199) // burst) % 2 == 0
        in_silence = (start // burst) % 2 == 1 and ((start + 199) // burst) % 2 == 1
        if in_tone:
            assert labels[k] == FrameLabel.Speech
        elif in_silence:
            assert labels[k] == FrameLabel.NonSpeech


def test_labels_ignore_global_gain():
    rng = np.random.default_rng(8)
    samples = rng.normal(0.0, 0.1, 8000) * np.repeat(rng.uniform(0.0, 1.0, 20) ** 4, 400)
    quiet = frame_labels_from_clean(AudioSignal(samples))
    loud = frame_labels_from_clean(AudioSignal(samples * 5.0))
    assert np.array_equal(quiet, loud)


def test_label_file_format(tmp_path):
    path = str(tmp_path / "utt.labels.txt")
    write_labels(path, [1, 0, 0, 1])
    with open(path) as lf:
        assert lf.read() == "1001\n"
    assert read_labels(path).tolist() == [1, 0, 0, 1]

    (tmp_path / "bad.txt").write_text("10x1\n")
    with pytest.raises(InvalidFeatureFile):
        read_labels(str(tmp_path / "bad.txt"))


def test_wav_scaling_and_silence(tmp_path):
    path = str(tmp_path / "peak.wav")
    sf.write(path, np.array([32767, 0, -32768], dtype=np.int16), 8000, subtype="PCM_16")
    signal = read_wav(path)
    assert signal.sample_rate == 8000
    assert signal.samples[0] == pytest.approx(32767 / 32768)
    assert signal.samples[2] == -1.0

    silent = str(tmp_path / "silent.wav")
    write_wav(silent, AudioSignal(np.zeros(8000)))
    back = read_wav(silent)
    assert len(back) == 8000 and not back.samples.any()


def test_wav_errors(tmp_path):
    garbage = tmp_path / "garbage.wav"
    garbage.write_bytes(b"RIFFnot really a wav file")
    with pytest.raises(MalformedWavHeader):
        read_wav(str(garbage))

    floats = str(tmp_path / "float.wav")
    sf.write(floats, np.zeros(100), 8000, subtype="FLOAT")
    with pytest.raises(UnsupportedWavEncoding):
        read_wav(floats)

    stereo = str(tmp_path / "stereo.wav")
    sf.write(stereo, np.zeros((100, 2), dtype=np.int16), 8000, subtype="PCM_16")
    with pytest.raises(MultiChannelWav):
        read_wav(stereo)

    with pytest.raises(MissingCorpusFile):
        read_wav(str(tmp_path / "absent.wav"))
