"""Audio to spectral point cloud: STFT, log magnitude, (frequency, time, magnitude) points."""

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .cloud import PointCloud, as_array
from .errors import FormatError, SizeError, TooShort
from .ply import write_ply

LOG_EPS = 1e-8


@dataclass
class AudioSignal:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).ravel()
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("audio samples must be finite")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


def load_wav(path):
    """Read a PCM16 or float WAV file as a mono signal in [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise FormatError(f"cannot read WAV {path}: {exc}") from exc
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise FormatError(f"unsupported WAV sample type {data.dtype}; use PCM16 or float")
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioSignal(x, float(rate))


def write_wav(signal, path, pcm16=True):
    if pcm16:
        data = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = signal.samples.astype(np.float32)
    wavfile.write(path, int(round(signal.sample_rate)), data)


def hann_window(n_fft):
    """Symmetric Hann window 0.5 * (1 - cos(2 pi n / (N - 1)))."""
    if n_fft < 2:
        raise SizeError("Hann window needs N_fft >= 2")
    n = np.arange(n_fft)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (n_fft - 1)))


@dataclass
class Spectrogram:
    frames: np.ndarray  # (n_frames, n_fft // 2 + 1) complex
    n_fft: int
    hop: int
    window: str = "hann"

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def n_bins(self):
        return self.frames.shape[1]


def frame_signal(x, n_fft, hop):
    """(n_frames, n_fft) view of frames starting at 0, hop, 2*hop, ...; no padding."""
    x = np.asarray(x, dtype=np.float64)
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if len(x) < n_fft:
        raise TooShort(f"signal has {len(x)} samples, shorter than N_fft={n_fft}")
    n_frames = (len(x) - n_fft) // hop + 1
    return np.lib.stride_tricks.sliding_window_view(x, n_fft)[::hop][:n_frames]


def stft(signal, n_fft=1024, hop=256):
    """One-sided short-time Fourier transform with a Hann window."""
    x = signal.samples if isinstance(signal, AudioSignal) else np.asarray(signal, dtype=np.float64)
    frames = frame_signal(x, n_fft, hop) * hann_window(n_fft)
    return Spectrogram(np.fft.rfft(frames, axis=1), n_fft, hop)


def log_magnitude(spec):
    """log(1e-8 + |X|) elementwise."""
    frames = spec.frames if isinstance(spec, Spectrogram) else np.asarray(spec)
    return np.log(LOG_EPS + np.abs(frames))


def spectrogram_segments(spec, sample_rate, hop=None):
    """One cloud per STFT frame, each holding (f', t, M) for every bin."""
    hop = spec.hop if hop is None else hop
    M = log_magnitude(spec)
    freqs = np.arange(spec.n_bins) * sample_rate / spec.n_fft
    out = []
    for n in range(spec.n_frames):
        t = np.full(spec.n_bins, n * hop / sample_rate)
        out.append(PointCloud(np.column_stack([freqs, t, M[n]])))
    return out


def spectrogram_to_cloud(spec, sample_rate, hop=None, label=None):
    """All (f', t, M) points of a spectrogram, frame by frame, bins ascending."""
    hop = spec.hop if hop is None else hop
    M = log_magnitude(spec)
    freqs = np.arange(spec.n_bins) * sample_rate / spec.n_fft
    times = np.arange(spec.n_frames) * hop / sample_rate
    f, t = np.meshgrid(freqs, times)
    return PointCloud(np.column_stack([f.ravel(), t.ravel(), M.ravel()]), label=label)


def aggregate(clouds):
    """Concatenate per-segment clouds in order."""
    return PointCloud(np.concatenate([as_array(c) for c in clouds], axis=0))


def aggregate_and_save(clouds, path, format="ascii"):
    merged = aggregate(clouds)
    write_ply(merged, path, format=format)
    return merged


def audio_to_cloud(signal, n_fft=1024, hop=256, label=None):
    """Full audio front end: STFT, then one (f', t, M) point per frame and bin."""
    spec = stft(signal, n_fft, hop)
    return spectrogram_to_cloud(spec, signal.sample_rate, hop, label=label)


def sine(freq, duration=1.0, sample_rate=16000, amplitude=0.5, phase=0.0):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioSignal(amplitude * np.sin(2 * np.pi * freq * t + phase), sample_rate)


def chirp(f0, f1, duration=1.0, sample_rate=16000, amplitude=0.5):
    """Linear frequency sweep from f0 to f1."""
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    k = (f1 - f0) / duration
    return AudioSignal(amplitude * np.sin(2 * np.pi * (f0 * t + 0.5 * k * t * t)), sample_rate)
