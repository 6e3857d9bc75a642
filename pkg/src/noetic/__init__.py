"""noetic: a desk-scale EEG BCI pipeline engine.

Typed pick-and-place dataflow graphs over streaming or recorded EEG:
stimulus scheduling, channel selection, preprocessing, feature extraction,
classification, closed-loop simulation, and plot-frame production.
"""

__version__ = "0.1.0"

from .core import ChannelInfo, EpochSet, Marker, SignalBlock, epoch_by_markers  # noqa: F401
