import numpy as np
import pytest

from noetic.core import ChannelInfo, Marker, SignalBlock


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_block(data, fs=100.0, t0=0.0, roles=None):
    data = np.asarray(data, dtype=np.float64)
    roles = roles or ["eeg"] * data.shape[0]
    channels = tuple(ChannelInfo(f"ch{i}", i, roles[i]) for i in range(data.shape[0]))
    return SignalBlock(data, fs, t0, channels)


def markers_at(times, label="stim", class_id=0):
    return [Marker(float(t), label, class_id) for t in times]
