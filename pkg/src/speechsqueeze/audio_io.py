"""Mono WAV input/output.

Reading accepts RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples;
writing always produces 16-bit PCM. Integer codes map to floats as
``code / 32768`` so that -32768 is exactly -1.0.
"""

from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError

__all__ = ["AudioClip", "load_wav", "save_wav", "read_wav_header"]

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Immutable mono signal with its sample rate.

    Parameters
    ----------
    samples : array-like
        Amplitudes in [-1, 1]. Stored as a read-only float64 array.
    sample_rate : int
        Samples per second, strictly positive.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        if x.size and np.max(np.abs(x)) > 1.0:
            raise ValueError("samples must lie within [-1, 1]")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds, ``len(samples) / sample_rate``."""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class _Header:
    audio_format: int
    channels: int
    sample_rate: int
    bits_per_sample: int
    block_align: int


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        chunk_id, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        yield chunk_id, size, body
        pos += 8 + size + (size & 1)


def _parse(path: Path):
    if not path.is_file():
        raise FileNotFoundError(f"no such audio file: {path}")
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    header = None
    payload = None
    for chunk_id, size, body in _iter_chunks(data):
        if len(body) < size:
            raise AudioFormatError(
                f"{path}: truncated {chunk_id.decode('latin-1').strip()!r} chunk: "
                f"header declares {size} bytes, found {len(body)}"
            )
        if chunk_id == b"fmt ":
            if size < 16:
                raise AudioFormatError(f"{path}: fmt chunk too short")
            fmt, channels, rate, _, align, bits = struct.unpack_from("<HHIIHH", body)
            if fmt == _EXTENSIBLE and size >= 26:
                (fmt,) = struct.unpack_from("<H", body, 24)
            header = _Header(fmt, channels, rate, bits, align)
        elif chunk_id == b"data":
            payload = body
            break
    if header is None:
        raise AudioFormatError(f"{path}: missing fmt chunk")
    if payload is None:
        raise AudioFormatError(f"{path}: missing data chunk")
    return header, payload


def _check_header(header: _Header, path):
    if header.channels != 1:
        raise AudioFormatError(f"unsupported channel count: {header.channels}")
    encoding = (header.audio_format, header.bits_per_sample)
    if encoding not in ((_PCM, 16), (_IEEE_FLOAT, 32)):
        raise AudioFormatError(
            f"{path}: unsupported encoding (format tag {header.audio_format}, "
            f"{header.bits_per_sample} bits); expected 16-bit PCM or 32-bit float"
        )
    if header.sample_rate <= 0:
        raise AudioFormatError(f"{path}: invalid sample rate {header.sample_rate}")


def read_wav_header(path) -> tuple[int, int]:
    """Return ``(sample_rate, sample_count)`` of a supported WAV file."""
    path = Path(path)
    header, payload = _parse(path)
    _check_header(header, path)
    return header.sample_rate, len(payload) // header.block_align


def load_wav(path) -> AudioClip:
    """Load a mono 16-bit PCM or float-32 WAV file.

    Parameters
    ----------
    path : str or Path

    Returns
    -------
    AudioClip
        Samples scaled to [-1, 1]. Float files are clipped to that range.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    AudioFormatError
        For multichannel input, unsupported encodings, or a truncated payload.
    """
    path = Path(path)
    header, payload = _parse(path)
    _check_header(header, path)
    width = header.bits_per_sample // 8
    if len(payload) % width:
        raise AudioFormatError(
            f"{path}: truncated data chunk ({len(payload)} bytes is not a whole number of samples)"
        )
    if header.audio_format == _PCM:
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / PCM16_SCALE
    else:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise AudioFormatError(f"{path}: non-finite float samples")
        samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples, header.sample_rate)


def to_pcm16(samples) -> np.ndarray:
    """Quantize floats to int16 codes, rounding half away from zero."""
    x = np.asarray(samples, dtype=np.float64) * PCM16_SCALE
    codes = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(codes, -32768, 32767).astype("<i2")


def save_wav(clip: AudioClip, path) -> None:
    """Write ``clip`` as a 16-bit PCM mono WAV file."""
    if len(clip) == 0:
        raise ValueError("cannot write an empty clip")
    path = Path(path)
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(clip.sample_rate)
        fh.writeframes(to_pcm16(clip.samples).tobytes())
