import numpy as np
import pytest

from speechsqueeze.audio_io import AudioClip

SR = 16000

# Lines recorded by test_acceptance, echoed after the run.
ACCEPTANCE_LINES = []


def tone(seconds, freq=440.0, sr=SR, amp=1.0, phase=0.0):
    n = int(round(seconds * sr))
    return amp * np.sin(2 * np.pi * freq * np.arange(n) / sr + phase)


def silence(seconds, sr=SR):
    return np.zeros(int(round(seconds * sr)))


def clip_of(*parts, sr=SR):
    return AudioClip(np.concatenate(parts), sr)


@pytest.fixture
def sr():
    return SR


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
