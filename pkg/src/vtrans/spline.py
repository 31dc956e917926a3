"""Natural cubic spline interpolation.

Small and self-contained: the second derivatives at the interior knots
come from the classic tridiagonal system (solved with the Thomas
algorithm), with S'' = 0 at both end knots. Below three knots the curve
degrades to linear (two) or constant (one) interpolation; outside the
knot span it extrapolates linearly with the boundary slope.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


class NaturalCubicSpline:
    def __init__(self, x: Sequence[float], y: Sequence[float]):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape or x.size == 0:
            raise ValueError("x and y must be equal-length 1-D sequences")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("knot abscissae must be strictly increasing")
        self.x = x
        self.y = y
        self.m2 = self._second_derivatives(x, y)

    @staticmethod
    def _second_derivatives(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n = x.size
        m2 = np.zeros(n)
        if n < 3:
            return m2
        h = np.diff(x)
        # Tridiagonal system for the n-2 interior second derivatives:
        #   h[i-1]/6 * M[i-1] + (h[i-1]+h[i])/3 * M[i] + h[i]/6 * M[i+1] = rhs[i]
        sub = h[:-1] / 6.0
        diag = (h[:-1] + h[1:]) / 3.0
        sup = h[1:] / 6.0
        rhs = (y[2:] - y[1:-1]) / h[1:] - (y[1:-1] - y[:-2]) / h[:-1]

        k = n - 2
        cp = np.zeros(k)  # modified superdiagonal
        dp = np.zeros(k)  # modified rhs
        cp[0] = sup[0] / diag[0]
        dp[0] = rhs[0] / diag[0]
        for i in range(1, k):
            denom = diag[i] - sub[i] * cp[i - 1]
            cp[i] = sup[i] / denom
            dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / denom
        sol = np.zeros(k)
        sol[-1] = dp[-1]
        for i in range(k - 2, -1, -1):
            sol[i] = dp[i] - cp[i] * sol[i + 1]
        m2[1:-1] = sol
        return m2

    def __call__(self, q):
        scalar = np.isscalar(q)
        q = np.atleast_1d(np.asarray(q, dtype=np.float64))
        out = np.empty_like(q)
        x, y, m2 = self.x, self.y, self.m2
        n = x.size
        if n == 1:
            out[:] = y[0]
            return out[0] if scalar else out
        for j, v in enumerate(q):
            if v <= x[0]:
                out[j] = y[0] + self.slope_at(x[0]) * (v - x[0])
            elif v >= x[-1]:
                out[j] = y[-1] + self.slope_at(x[-1]) * (v - x[-1])
            else:
                i = int(np.searchsorted(x, v, side="right") - 1)
                h = x[i + 1] - x[i]
                a = (x[i + 1] - v) / h
                b = (v - x[i]) / h
                out[j] = (
                    a * y[i]
                    + b * y[i + 1]
                    + ((a ** 3 - a) * m2[i] + (b ** 3 - b) * m2[i + 1]) * h * h / 6.0
                )
        return out[0] if scalar else out

    def slope_at(self, v: float) -> float:
        """First derivative, used for linear extrapolation at the ends."""
        x, y, m2 = self.x, self.y, self.m2
        if x.size == 1:
            return 0.0
        i = int(np.clip(np.searchsorted(x, v, side="right") - 1, 0, x.size - 2))
        h = x[i + 1] - x[i]
        a = (x[i + 1] - v) / h
        b = (v - x[i]) / h
        return (
            (y[i + 1] - y[i]) / h
            + (-(3 * a ** 2 - 1) * m2[i] + (3 * b ** 2 - 1) * m2[i + 1]) * h / 6.0
        )

    def second_derivative(self, v: float) -> float:
        x, m2 = self.x, self.m2
        if x.size < 2:
            return 0.0
        if v <= x[0] or v >= x[-1]:
            # evaluate the touching segment (the natural condition puts it at 0)
            v = min(max(v, x[0]), x[-1])
        i = int(np.clip(np.searchsorted(x, v, side="right") - 1, 0, x.size - 2))
        h = x[i + 1] - x[i]
        a = (x[i + 1] - v) / h
        b = (v - x[i]) / h
        return a * m2[i] + b * m2[i + 1]
