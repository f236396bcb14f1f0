import math

import numpy as np
import pytest

from src.dsp import (
    POWER_FLOOR_DB,
    IQBuffer,
    NoiseSpec,
    SampleBuffer,
    Spectrum,
    band_power,
    carson_bandwidth,
    find_peak,
    fm_demodulate,
    fm_modulate,
    generate_white_noise,
    occupied_bandwidth,
    power_spectrum,
    simulate_capture,
    tone,
)


def test_white_noise_is_reproducible():
    spec = NoiseSpec(seed=7, n_samples=4096)
    a = generate_white_noise(spec)
    b = generate_white_noise(spec)
    assert np.array_equal(a.samples, b.samples)
    assert a.sample_rate_hz == 48_000


def test_white_noise_depends_on_seed():
    a = generate_white_noise(NoiseSpec(seed=1, n_samples=1024))
    b = generate_white_noise(NoiseSpec(seed=2, n_samples=1024))
    assert not np.array_equal(a.samples, b.samples)


def test_white_noise_stays_in_full_scale():
    audio = generate_white_noise(NoiseSpec(seed=0, n_samples=100_000))
    assert audio.samples.min() >= -1.0
    assert audio.samples.max() < 1.0


@pytest.mark.parametrize("seed", [0, 1, 7, 42, 2**63])
def test_white_noise_mean_is_within_four_standard_errors(seed):
    n = 2**16
    audio = generate_white_noise(NoiseSpec(seed=seed, n_samples=n))
    assert abs(audio.samples.mean()) <= 4 * (1 / math.sqrt(3)) / math.sqrt(n)


def test_white_noise_spectrum_is_flat():
    audio = generate_white_noise(NoiseSpec(seed=7, n_samples=2**18))
    spectrum = power_spectrum(audio, 1024, "hann")
    median = np.median(spectrum.power_db)
    within = np.abs(spectrum.power_db - median) <= 3.0
    assert within.mean() >= 0.99


def test_noise_spec_rejects_bad_values():
    with pytest.raises(ValueError):
        NoiseSpec(seed=-1, n_samples=10)
    with pytest.raises(ValueError):
        NoiseSpec(seed=2**64, n_samples=10)
    with pytest.raises(ValueError):
        NoiseSpec(seed=1, n_samples=0)


def test_buffers_are_read_only():
    audio = SampleBuffer(np.zeros(8), 8000.0)
    with pytest.raises(ValueError):
        audio.samples[0] = 1.0


def test_sample_buffer_rejects_samples_beyond_full_scale():
    SampleBuffer(np.array([1.0, -1.0]), 8000.0)
    with pytest.raises(ValueError):
        SampleBuffer(np.array([0.5, 1.01]), 8000.0)


def test_spectrum_requires_bins_spaced_by_rbw():
    with pytest.raises(ValueError):
        Spectrum(np.array([0.0, 1.0, 3.0]), np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        Spectrum(np.arange(4.0), np.zeros(4), 2.0)


def test_parseval_rectangular_single_segment():
    audio = generate_white_noise(NoiseSpec(seed=3, n_samples=4096))
    spectrum = power_spectrum(audio, 4096, "rectangular")
    mean_square = float(np.mean(audio.samples**2))
    assert float(np.sum(spectrum.linear_power)) == pytest.approx(mean_square, rel=1e-9)


def test_parseval_holds_for_iq():
    iq = fm_modulate(generate_white_noise(NoiseSpec(seed=5, n_samples=2048)), 5_000.0)
    spectrum = power_spectrum(iq, 2048, "rectangular")
    assert float(np.sum(spectrum.linear_power)) == pytest.approx(1.0, rel=1e-9)


def test_dc_puts_full_power_in_bin_zero():
    spectrum = power_spectrum(SampleBuffer(np.ones(1024), 1000.0), 1024, "rectangular")
    dc = spectrum.linear_power[spectrum.bin_freqs_hz == 0.0]
    assert dc.tolist() == pytest.approx([1.0], rel=1e-12)


def test_bin_centred_tone_lands_in_two_bins():
    fs, n = 8192.0, 1024
    rbw = fs / n
    audio = tone(64 * rbw, fs, n)
    spectrum = power_spectrum(audio, n, "rectangular")
    loud = np.flatnonzero(spectrum.power_db > -100)
    assert list(spectrum.bin_freqs_hz[loud]) == [-64 * rbw, 64 * rbw]
    assert spectrum.power_db[loud] == pytest.approx([10 * math.log10(0.25)] * 2, abs=1e-9)
    quiet = np.delete(spectrum.power_db, loud)
    assert quiet.max() < -250


def test_power_spectrum_axis():
    iq = IQBuffer(np.ones(256), 1_000.0, center_freq_hz=10_000.0)
    spectrum = power_spectrum(iq, 256, "hann")
    assert spectrum.rbw_hz == pytest.approx(1_000.0 / 256)
    assert spectrum.bin_freqs_hz[128] == 10_000.0
    assert spectrum.bin_freqs_hz[0] == pytest.approx(9_500.0)
    assert np.all(np.diff(spectrum.bin_freqs_hz) > 0)


@pytest.mark.parametrize("n_fft", [0, 1, 100, 1000])
def test_power_spectrum_requires_power_of_two(n_fft):
    audio = SampleBuffer(np.zeros(2048), 1000.0)
    with pytest.raises(ValueError):
        power_spectrum(audio, n_fft)


def test_power_spectrum_rejects_short_buffer_and_unknown_window():
    audio = SampleBuffer(np.zeros(100), 1000.0)
    with pytest.raises(ValueError):
        power_spectrum(audio, 128)
    with pytest.raises(ValueError):
        power_spectrum(SampleBuffer(np.zeros(256), 1000.0), 128, "blackman")


def test_silent_spectrum_sits_on_the_floor():
    spectrum = power_spectrum(SampleBuffer(np.zeros(512), 1000.0), 256)
    assert np.all(spectrum.power_db == POWER_FLOOR_DB)


def test_fm_round_trip_snr():
    fs, deviation = 400_000.0, 75_000.0
    audio = tone(1_000.0, fs, 40_000)
    recovered = fm_demodulate(fm_modulate(audio, deviation))
    error = recovered.samples - audio.samples
    snr_db = 10 * math.log10(np.sum(audio.samples**2) / np.sum(error**2))
    assert snr_db >= 40.0


def test_full_scale_audio_moves_by_exactly_the_deviation():
    fs, deviation = 48_000.0, 5_000.0
    iq = fm_modulate(SampleBuffer(np.ones(256), fs), deviation)
    step_hz = np.angle(iq.samples[1:] * np.conj(iq.samples[:-1])) * fs / (2 * np.pi)
    assert np.allclose(step_hz, deviation, rtol=0.0, atol=1e-6)

    recovered = fm_demodulate(iq)
    assert np.allclose(recovered.samples[1:], 1.0, rtol=0.0, atol=1e-9)


def test_white_noise_survives_the_fm_round_trip():
    fs = 48_000.0
    audio = generate_white_noise(NoiseSpec(seed=7, n_samples=2**14, sample_rate_hz=fs))
    recovered = fm_demodulate(fm_modulate(audio, fs / 8))
    assert np.corrcoef(audio.samples, recovered.samples)[0, 1] >= 0.99


def test_fm_has_constant_envelope_and_carries_deviation():
    iq = fm_modulate(generate_white_noise(NoiseSpec(seed=1, n_samples=1000, sample_rate_hz=400_000.0)), 75_000.0)
    assert np.allclose(np.abs(iq.samples), 1.0)
    assert iq.deviation_hz == 75_000.0


def test_fm_modulate_rejects_deviation_at_nyquist():
    audio = SampleBuffer(np.zeros(16), 48_000.0)
    with pytest.raises(ValueError):
        fm_modulate(audio, 24_000.0)
    with pytest.raises(ValueError):
        fm_modulate(audio, 0.0)


def test_fm_demodulate_needs_deviation():
    iq = IQBuffer(np.ones(8), 1000.0)
    with pytest.raises(ValueError):
        fm_demodulate(iq)
    assert np.array_equal(fm_demodulate(iq, 100.0).samples, np.zeros(8))


def test_fm_demodulate_single_sample():
    out = fm_demodulate(IQBuffer(np.ones(1), 1000.0), 100.0)
    assert list(out.samples) == [0.0]


def test_silent_audio_peaks_at_centre():
    iq = fm_modulate(SampleBuffer(np.zeros(4096), 400_000.0), 75_000.0, center_freq_hz=1_000_000.0)
    spectrum = power_spectrum(iq, 1024)
    assert find_peak(spectrum) == 1_000_000.0


def test_tone_spectrum_is_symmetric_about_the_carrier():
    fs = 400_000.0
    iq = fm_modulate(tone(1_000.0, fs, 2**16, amplitude=0.002), 75_000.0)
    spectrum = power_spectrum(iq, 4096, "hann")
    assert find_peak(spectrum) == 0.0
    centre = 2048
    offsets = np.arange(1, 64)
    assert spectrum.power_db[centre + offsets] == pytest.approx(spectrum.power_db[centre - offsets], abs=1.0)


def test_band_power_full_span_matches_total():
    spectrum = Spectrum(np.arange(10.0), np.zeros(10), 1.0)
    assert band_power(spectrum, 0.0, 9.0) == pytest.approx(10.0)
    assert band_power(spectrum, -0.5, 9.5) == pytest.approx(10.0)
    assert band_power(spectrum, 2.0, 3.0) == pytest.approx(10 * math.log10(2))


def test_band_power_of_a_single_tone_equals_its_power():
    fs, n = 8192.0, 1024
    rbw = fs / n
    k = np.arange(n)
    iq = IQBuffer(0.5 * np.exp(2j * np.pi * 64 * k / n), fs)
    spectrum = power_spectrum(iq, n, "rectangular")
    assert band_power(spectrum, 60 * rbw, 70 * rbw) == pytest.approx(10 * math.log10(0.25), abs=0.01)


def test_band_power_is_additive_over_disjoint_bands():
    audio = generate_white_noise(NoiseSpec(seed=9, n_samples=8192))
    spectrum = power_spectrum(audio, 1024, "hann")
    half = spectrum.rbw_hz / 2
    lo, hi = spectrum.bin_freqs_hz[0] - half, spectrum.bin_freqs_hz[-1] + half
    split = spectrum.bin_freqs_hz[300] + half

    parts = 10 ** (band_power(spectrum, lo, split) / 10) + 10 ** (band_power(spectrum, split, hi) / 10)
    assert parts == pytest.approx(10 ** (band_power(spectrum, lo, hi) / 10), rel=1e-9)


def test_band_power_rejects_empty_or_outside_band():
    spectrum = Spectrum(np.arange(10.0), np.zeros(10), 1.0)
    with pytest.raises(ValueError):
        band_power(spectrum, 5.0, 5.0)
    with pytest.raises(ValueError):
        band_power(spectrum, -3.0, 4.0)
    with pytest.raises(ValueError):
        band_power(spectrum, 2.2, 2.8)


def test_find_peak_prefers_lowest_frequency_on_ties():
    spectrum = Spectrum(np.arange(5.0), [0.0, 3.0, 1.0, 3.0, 2.0], 1.0)
    assert find_peak(spectrum) == 1.0


def test_find_peak_picks_the_stronger_of_two_tones():
    fs, n = 8192.0, 1024
    rbw = fs / n
    k = np.arange(n)
    weak = 0.4 * np.exp(2j * np.pi * 40 * k / n)
    strong = 0.4 * math.sqrt(2) * np.exp(2j * np.pi * 100 * k / n)
    spectrum = power_spectrum(IQBuffer(weak + strong, fs), n, "rectangular")
    assert find_peak(spectrum) == 100 * rbw


def test_occupied_bandwidth_of_single_bin():
    power = np.full(101, POWER_FLOOR_DB)
    power[50] = 0.0
    spectrum = Spectrum(np.arange(101.0) * 10.0, power, 10.0)
    assert occupied_bandwidth(spectrum) == pytest.approx(10.0)


def test_occupied_bandwidth_of_flat_spectrum():
    spectrum = Spectrum(np.arange(100.0), np.zeros(100), 1.0)
    assert 98.0 <= occupied_bandwidth(spectrum, 0.99) <= 100.0
    assert 48.0 <= occupied_bandwidth(spectrum, 0.5) <= 52.0


def test_carson_bandwidth():
    assert carson_bandwidth(75_000.0, 15_000.0) == 180_000.0


def test_simulated_capture_peaks_near_carrier():
    capture = simulate_capture(1_000_000.0, 1_200_000.0, 1_000_000.0, 2**14, seed=11)
    spectrum = power_spectrum(capture, 1024)
    assert abs(find_peak(spectrum) - 1_200_000.0) <= 30_000.0


def test_simulated_capture_is_reproducible_and_checks_span():
    a = simulate_capture(1e6, 1.1e6, 1e6, 1024, seed=3)
    b = simulate_capture(1e6, 1.1e6, 1e6, 1024, seed=3)
    assert np.array_equal(a.samples, b.samples)
    with pytest.raises(ValueError):
        simulate_capture(1e6, 1.6e6, 1e6, 1024, seed=3)
