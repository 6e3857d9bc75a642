"""Feature kernels over epochs: time, frequency, time-frequency, spatial,
and connectivity families, producing labeled feature vectors.

Naming convention is "chN.family.name" so exported matrices are
self-describing. Non-finite kernel outputs never propagate into vectors:
they are substituted with 0 and the feature name is recorded in ``flags``.
"""

from __future__ import annotations

import csv as _csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple
    flags: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        names = tuple(self.names)
        if values.ndim != 1 or values.size != len(names):
            raise ValueError("values and names must be parallel 1-D")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        flags = list(self.flags)
        bad = ~np.isfinite(values)
        if bad.any():
            values = values.copy()
            for i in np.flatnonzero(bad):
                flags.append(names[i])
                values[i] = 0.0
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "flags", tuple(flags))


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # (n_rows, n_features)
    names: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(self.names):
            raise ValueError("values must be (rows, len(names))")
        if not np.isfinite(values).all():
            raise ValueError("feature matrix must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def from_rows(cls, rows: Sequence[FeatureVector]) -> "FeatureMatrix":
        if not rows:
            raise ValueError("no feature rows")
        names = rows[0].names
        for r in rows:
            if r.names != names:
                raise ValueError("inconsistent feature names across rows")
        return cls(np.stack([r.values for r in rows]), names)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = _csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for row in self.values:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"names": list(self.names),
                           "values": self.values.tolist()})


from .timedomain import (  # noqa: E402,F401
    Moments, dfa, entropy, fractal_dimension, hjorth, moments,
)
from .spectral import (  # noqa: E402,F401
    Spectrum, band_powers, connectivity, stft, welch_psd,
)
from .wavelet import dwt_energies  # noqa: E402,F401
from .csp import CspModel, csp_features, csp_fit  # noqa: E402,F401
