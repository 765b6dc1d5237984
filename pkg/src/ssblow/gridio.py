"""Discretized scalar fields on uniform rectangular grids, plus the
binary and CSV interchange formats shared by the verification and
simulation modules.

Binary layout: a header of six float64 values (n1, n2, h1, h2, x1_0,
x2_0) followed by the row-major float64 field data, axis 0 first.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<6d")


@dataclass
class ScalarField2D:
    """values[i, j] at (x1_0 + i*h1, x2_0 + j*h2)."""

    values: np.ndarray
    h1: float
    h2: float
    x1_0: float = 0.0
    x2_0: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("field values must be 2-D")

    @property
    def shape(self):
        return self.values.shape

    def axis1(self) -> np.ndarray:
        return self.x1_0 + self.h1 * np.arange(self.values.shape[0])

    def axis2(self) -> np.ndarray:
        return self.x2_0 + self.h2 * np.arange(self.values.shape[1])

    def mesh(self):
        return np.meshgrid(self.axis1(), self.axis2(), indexing="ij")

    def like(self, values: np.ndarray) -> "ScalarField2D":
        if values.shape != self.values.shape:
            raise ValueError("shape mismatch")
        return ScalarField2D(values, self.h1, self.h2, self.x1_0, self.x2_0)

    # -- interchange -------------------------------------------------------

    def to_binary(self, path) -> None:
        n1, n2 = self.values.shape
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(float(n1), float(n2), self.h1, self.h2,
                                  self.x1_0, self.x2_0))
            fh.write(np.ascontiguousarray(self.values).tobytes())

    @staticmethod
    def from_binary(path) -> "ScalarField2D":
        raw = Path(path).read_bytes()
        n1f, n2f, h1, h2, x1_0, x2_0 = _HEADER.unpack_from(raw)
        n1, n2 = int(n1f), int(n2f)
        data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size,
                             count=n1 * n2).reshape(n1, n2).copy()
        return ScalarField2D(data, h1, h2, x1_0, x2_0)

    def to_csv(self, path) -> None:
        x1 = self.axis1()
        x2 = self.axis2()
        with open(path, "w") as fh:
            fh.write("x1,x2,value\n")
            for i in range(self.values.shape[0]):
                for j in range(self.values.shape[1]):
                    fh.write(f"{float(x1[i])!r},{float(x2[j])!r},"
                             f"{float(self.values[i, j])!r}\n")

    @staticmethod
    def from_csv(path) -> "ScalarField2D":
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        x1 = np.unique(rows[:, 0])
        x2 = np.unique(rows[:, 1])
        vals = np.full((x1.size, x2.size), np.nan)
        i = np.searchsorted(x1, rows[:, 0])
        j = np.searchsorted(x2, rows[:, 1])
        vals[i, j] = rows[:, 2]
        h1 = float(x1[1] - x1[0]) if x1.size > 1 else 1.0
        h2 = float(x2[1] - x2[0]) if x2.size > 1 else 1.0
        return ScalarField2D(vals, h1, h2, float(x1[0]), float(x2[0]))


def gradient(field: ScalarField2D):
    """Centered interior / one-sided 2nd-order boundary differences."""
    d1 = _diff(field.values, field.h1, axis=0)
    d2 = _diff(field.values, field.h2, axis=1)
    return d1, d2


def _diff(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    d = np.empty_like(v)
    v = np.moveaxis(v, axis, 0)
    out = np.moveaxis(d, axis, 0)
    out[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return d


def trapezoid_2d(values: np.ndarray, h1: float, h2: float) -> float:
    w1 = np.ones(values.shape[0])
    w1[[0, -1]] = 0.5
    w2 = np.ones(values.shape[1])
    w2[[0, -1]] = 0.5
    return float(w1 @ values @ w2) * h1 * h2
