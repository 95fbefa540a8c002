"""Streaming log-sum-exp accumulator (running max, rescaled partial sum)."""

from __future__ import annotations

import math

import numpy as np


class LogSum:
    __slots__ = ("m", "s")

    def __init__(self):
        self.m = -math.inf
        self.s = 0.0

    def add(self, z: float) -> None:
        if z == -math.inf:
            return
        if z > self.m:
            self.s = self.s * math.exp(self.m - z) + 1.0
            self.m = z
        else:
            self.s += math.exp(z - self.m)

    def add_array(self, z: np.ndarray) -> None:
        if z.size == 0:
            return
        zm = float(z.max())
        if zm == -math.inf:
            return
        if zm > self.m:
            self.s = self.s * math.exp(self.m - zm) + float(np.exp(z - zm).sum())
            self.m = zm
        else:
            self.s += float(np.exp(z - self.m).sum())

    def value(self) -> float:
        if self.s <= 0.0:
            return -math.inf
        return self.m + math.log(self.s)
