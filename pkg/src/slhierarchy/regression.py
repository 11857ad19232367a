"""Unweighted least-squares line fit with the usual diagnostics."""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateRange


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr: float            # standard error of the slope
    intercept_stderr: float
    r2: float
    n: int


def linear_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 3:
        raise DegenerateRange(f"need at least 3 points for a line fit, got {n}")
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    dy = y - ym
    sxx = float(dx @ dx)
    if sxx == 0.0 or sxx <= 1e-300:
        raise DegenerateRange("abscissa has zero spread")
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = dy - slope * dx
    ssr = float(resid @ resid)
    sst = float(dy @ dy)
    s2 = ssr / (n - 2)
    stderr = math.sqrt(s2 / sxx)
    intercept_stderr = math.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    if sst > 0.0:
        r2 = min(1.0, max(0.0, 1.0 - ssr / sst))
    else:
        r2 = 1.0
    return LineFit(slope, float(intercept), stderr, intercept_stderr, r2, n)
