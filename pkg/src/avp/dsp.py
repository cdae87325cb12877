"""Spectral front-end shared by fingerprinting, similarity and quick detectors.

All analysis runs on mono 44.1 kHz PCM.  The STFT uses a 2048-sample Hann
window with 50% overlap and keeps the one-sided magnitude spectrum (1025
bins).  The mel projection maps the power spectrum onto 80 triangular
HTK-scale filters spanning 0..22050 Hz and stores natural-log band powers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct, rfft
from scipy.signal import get_window

from .errors import TooShort

SAMPLE_RATE = 44100
WINDOW_SIZE = 2048
HOP_SIZE = 1024
N_BINS = WINDOW_SIZE // 2 + 1
N_MELS = 80
FMIN_HZ = 0.0
FMAX_HZ = SAMPLE_RATE / 2.0
LOG_FLOOR = 1e-10

HOP_S = HOP_SIZE / SAMPLE_RATE
BIN_HZ = SAMPLE_RATE / WINDOW_SIZE

SPECTRO_MAGIC = b"AVPS"


@dataclass
class Spectrogram:
    """One-sided STFT magnitudes, frames on axis 0 and bins on axis 1."""

    frames: np.ndarray
    hop_s: float = HOP_S
    bin_hz: float = BIN_HZ
    window_size: int = WINDOW_SIZE

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.frames.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames * self.hop_s


@dataclass
class MelSpectrogram:
    """Natural-log mel band powers, one row per STFT frame."""

    frames: np.ndarray
    mel_bands: int = N_MELS
    fmin: float = FMIN_HZ
    fmax: float = FMAX_HZ


def n_stft_frames(n_samples: int) -> int:
    """Frame count for a given sample count; trailing partial window dropped."""
    return (n_samples - WINDOW_SIZE) // HOP_SIZE + 1


_HANN = get_window("hann", WINDOW_SIZE, fftbins=True)


def stft(samples: np.ndarray) -> Spectrogram:
    """Magnitude STFT of mono PCM; raises TooShort below one window."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("stft expects mono samples")
    if len(x) < WINDOW_SIZE:
        raise TooShort(f"need >= {WINDOW_SIZE} samples, got {len(x)}")
    n_frames = n_stft_frames(len(x))
    frames = np.lib.stride_tricks.sliding_window_view(x, WINDOW_SIZE)[::HOP_SIZE][:n_frames]
    mags = np.abs(rfft(frames * _HANN, axis=1))
    return Spectrogram(frames=mags)


def hz_to_mel(f_hz):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f_hz, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, fmin: float = FMIN_HZ, fmax: float = FMAX_HZ) -> np.ndarray:
    """Triangular filters [n_mels x N_BINS]; centers equally spaced in mel."""
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    bin_hz = np.arange(N_BINS) * BIN_HZ
    fb = np.zeros((n_mels, N_BINS))
    for m in range(n_mels):
        lo, center, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_hz - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - center, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


_MEL_FB = mel_filterbank()


def mel(spec: Spectrogram) -> MelSpectrogram:
    """Project magnitude-squared frames onto the mel filterbank, log-compress."""
    power = spec.frames.astype(np.float64) ** 2
    bands = power @ _MEL_FB.T
    return MelSpectrogram(frames=np.log(bands + LOG_FLOOR))


def mfcc(melspec: MelSpectrogram, n_coeff: int = 20) -> np.ndarray:
    """First n_coeff DCT-II (orthonormal) coefficients of each log-mel frame."""
    return dct(melspec.frames, type=2, norm="ortho", axis=1)[:, :n_coeff]


def save_spectrogram(spec: Spectrogram, path) -> None:
    """Debug dump: 'AVPS' magic, u32 n_frames, u32 n_bins, pad, f32 row-major."""
    header = SPECTRO_MAGIC + struct.pack("<IIxxxx", spec.n_frames, spec.n_bins)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(spec.frames.astype("<f4").tobytes(order="C"))


def load_spectrogram(path) -> Spectrogram:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if header[:4] != SPECTRO_MAGIC:
            raise ValueError("not a spectrogram dump")
        n_frames, n_bins = struct.unpack("<II", header[4:12])
        data = np.frombuffer(fh.read(), dtype="<f4").reshape(n_frames, n_bins)
    return Spectrogram(frames=data.astype(np.float64))
