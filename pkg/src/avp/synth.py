"""Synthetic scene generation: tone bursts, clicks and noise beds.

Used by the test suite and the demo/experiment scripts to build corpora with
known ground truth (shifted copies, SNR-controlled noise, unrelated decoys).
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .dsp import SAMPLE_RATE


def tone(freq_hz: float, duration_s: float, amp: float = 0.5, phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(round(duration_s * SAMPLE_RATE))) / SAMPLE_RATE
    return (amp * np.sin(2 * np.pi * freq_hz * t + phase)).astype(np.float64)


def _fade(x: np.ndarray, fade_s: float = 0.005) -> np.ndarray:
    n = min(len(x) // 2, int(fade_s * SAMPLE_RATE))
    if n > 0:
        ramp = np.linspace(0.0, 1.0, n)
        x[:n] *= ramp
        x[-n:] *= ramp[::-1]
    return x


def pluck(freq_hz: float, decay_s: float, amp: float, rng: np.random.Generator) -> np.ndarray:
    """Percussive harmonic burst: sharp attack, exponential decay.

    The attack transient pins each spectral peak's time position, so the
    landmarks survive additive noise (a steady tone's temporal maximum
    wanders wherever the noise happens to interfere constructively).
    """
    n = int(round(3.0 * decay_s * SAMPLE_RATE))
    t = np.arange(n) / SAMPLE_RATE
    env = np.exp(-t / decay_s)
    attack = int(0.002 * SAMPLE_RATE)
    env[:attack] *= np.linspace(0.0, 1.0, attack)
    x = np.zeros(n)
    rolloff = rng.uniform(0.5, 1.5)
    for k in range(1, 7):
        if k * freq_hz > SAMPLE_RATE / 2 * 0.9:
            break
        x += np.sin(2 * np.pi * k * freq_hz * t + rng.uniform(0, 2 * np.pi)) / k**rolloff
    return amp * env * x / max(1e-9, np.abs(x).max())


def make_scene(
    duration_s: float,
    rng: np.random.Generator,
    events_per_s: float = 3.0,
    noise_floor_db: float = -50.0,
) -> np.ndarray:
    """Random mixture of percussive harmonic bursts over a quiet noise bed.

    Dense enough in spectral landmarks that shifted copies re-align reliably
    even after SNR-controlled noise is added.
    """
    n = int(round(duration_s * SAMPLE_RATE))
    x = rng.normal(0.0, 10 ** (noise_floor_db / 20.0), n)
    n_events = max(1, int(duration_s * events_per_s))
    for _ in range(n_events):
        freq = float(np.exp(rng.uniform(np.log(150.0), np.log(4000.0))))
        burst = pluck(freq, decay_s=float(rng.uniform(0.08, 0.4)),
                      amp=float(rng.uniform(0.2, 0.6)), rng=rng)
        start = int(rng.uniform(0, max(1, n - len(burst) - 1)))
        x[start : start + len(burst)] += burst[: n - start]
    peak = np.abs(x).max()
    if peak > 0.9:
        x *= 0.9 / peak
    return x


def click_train(duration_s: float, click_times_s: list[float], amp: float = 0.8,
                noise_floor_db: float = -40.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """Quiet noise bed with short wideband clicks at the given times."""
    rng = rng or np.random.default_rng(0)
    n = int(round(duration_s * SAMPLE_RATE))
    x = rng.normal(0.0, 10 ** (noise_floor_db / 20.0), n)
    click_len = int(0.01 * SAMPLE_RATE)
    burst = rng.normal(0.0, 1.0, click_len) * np.hanning(click_len)
    for t in click_times_s:
        start = int(round(t * SAMPLE_RATE))
        x[start : start + click_len] += amp * burst[: max(0, n - start)]
    return np.clip(x, -1.0, 1.0)


def add_noise_snr(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Additive white noise at a given signal-to-noise ratio."""
    p_signal = float((x**2).mean())
    sigma = np.sqrt(p_signal / (10 ** (snr_db / 10.0)))
    return x + rng.normal(0.0, sigma, len(x))


def delay(x: np.ndarray, delay_s: float) -> np.ndarray:
    """Prepend delay_s of silence (recording that started earlier)."""
    return np.concatenate([np.zeros(int(round(delay_s * SAMPLE_RATE))), x])


def trim_start(x: np.ndarray, trim_s: float) -> np.ndarray:
    """Drop the first trim_s seconds (recording that started later)."""
    return x[int(round(trim_s * SAMPLE_RATE)) :]


def write_wav(path, samples: np.ndarray, rate: int = SAMPLE_RATE) -> None:
    """Write mono float samples as 16-bit PCM WAV."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    wavfile.write(path, rate, (clipped * 32767.0).astype(np.int16))
