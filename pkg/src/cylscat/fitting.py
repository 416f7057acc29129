"""Small regression helpers: decay fits, 1/r extrapolation, Hölder exponents."""

from __future__ import annotations

import numpy as np


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if np.count_nonzero(keep) < 3:
        raise ValueError("need at least three positive samples for a log fit")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def decay_power(t, values):
    """Fitted power p in values ~ t^(-p)."""
    return -loglog_slope(t, values)


def ols_line(x, y):
    """Slope, intercept and slope standard error of an ordinary LS line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    dof = max(n - 2, 1)
    se = np.sqrt(np.sum(resid**2) / dof / sxx)
    return float(slope), float(intercept), float(se)


def inverse_r_fit(r, tau, top_octave: bool = True):
    """Fit tau(r) = tau_inf + c / r, optionally on the top octave of r.

    Returns (tau_inf, c, residual) with the rms residual of the fit.
    """
    r = np.asarray(r, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if top_octave:
        keep = r >= r.max() / 2.0
        if np.count_nonzero(keep) >= 3:
            r, tau = r[keep], tau[keep]
    slope, intercept, _ = ols_line(1.0 / r, tau)
    resid = tau - (intercept + slope / r)
    return float(intercept), float(slope), float(np.sqrt(np.mean(resid**2)))


def holder_exponent(x, values):
    """Two-scale Hölder exponent of samples of a (possibly matrix) function.

    values: array with the sample axis first; differences at spacing h and 2h
    are compared, alpha = log2(M(2h) / M(h)).
    """
    values = np.asarray(values)
    d1 = values[1:] - values[:-1]
    d2 = values[2:] - values[:-2]
    axes = tuple(range(1, values.ndim))
    m1 = np.max(np.abs(d1), axis=axes).max()
    m2 = np.max(np.abs(d2), axis=axes).max()
    if m1 == 0:
        return np.inf
    return float(np.log2(m2 / m1))


def measured_order(coarse, mid, fine):
    """Observed convergence order from three nested-resolution values."""
    num = np.abs(np.asarray(coarse) - np.asarray(mid))
    den = np.abs(np.asarray(mid) - np.asarray(fine))
    keep = (num > 0) & (den > 0)
    if not np.any(keep):
        return np.inf
    return float(np.median(np.log2(num[keep] / den[keep])))
