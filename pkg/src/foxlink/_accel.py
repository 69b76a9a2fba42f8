"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version implementing the same algorithm.  Set ``FOXLINK_DISABLE_NUMBA=1``
(or run without numba installed) to force the numpy path.
"""

import math
import os

import numpy as np

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling series coefficients B_{2k} / (2k (2k-1)), k = 1..8
_STIRLING = np.array(
    [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ]
)
# below this real part the recurrence is replaced by reflection
_REFLECT_BELOW = -1000.0
_SHIFT_TO = 10.0


def _flag_disabled():
    return os.environ.get("FOXLINK_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


try:
    if _flag_disabled():
        raise ImportError("numba disabled by FOXLINK_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ----------------------------------------------------------------------------
# numpy implementations
# ----------------------------------------------------------------------------


def _stirling_np(z):
    inv = 1.0 / z
    inv2 = inv * inv
    acc = np.zeros_like(z)
    for c in _STIRLING[::-1]:
        acc = acc * inv2 + c
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + acc * inv


def loggamma_np(z):
    """Principal-branch log Gamma for a complex array (numpy path)."""
    z = np.asarray(z, dtype=np.complex128)
    flip = z.imag < 0
    w = np.where(flip, np.conj(z), z)
    refl = w.real < _REFLECT_BELOW
    # reflection argument 1 - w lies far to the right
    w_eff = np.where(refl, 1.0 - w, w)
    nshift = np.maximum(0, np.ceil(_SHIFT_TO - w_eff.real)).astype(np.int64)
    corr = np.zeros_like(w_eff)
    y = w_eff.copy()
    kmax = int(nshift.max()) if nshift.size else 0
    for k in range(kmax):
        active = nshift > k
        corr = corr + np.where(active, np.log(np.where(active, y, 1.0)), 0.0)
        y = np.where(active, y + 1.0, y)
    out = _stirling_np(y) - corr
    if np.any(refl):
        wr = w[refl]
        # 2 pi i k keeps the result on the principal branch
        k = np.floor(0.5 * wr.real + 0.25)
        out[refl] = math.log(math.pi) - np.log(np.sin(math.pi * wr)) - out[refl] + 2j * math.pi * k
    return np.where(flip, np.conj(out), out)


def log_kernel_np(shift, cs, ct, sign, s, t):
    """Sum_j sign_j * logGamma(shift_j + cs_j*s + ct_j*t) over node arrays s, t."""
    s = np.asarray(s, dtype=np.complex128)
    t = np.asarray(t, dtype=np.complex128)
    out = np.zeros(np.broadcast(s, t).shape, dtype=np.complex128)
    for j in range(shift.shape[0]):
        out += sign[j] * loggamma_np(shift[j] + cs[j] * s + ct[j] * t)
    return out


def fixed_gain_sinr_np(g1, g2, gain):
    return g1 * g2 / (g2 + gain)


def csi_sinr_np(g1, g2):
    return g1 * g2 / (g1 + g2 + 1.0)


def batch_below_np(values, threshold, batches):
    """Per-batch fraction of ``values`` strictly below ``threshold``."""
    n = values.shape[0] // batches
    v = values[: n * batches].reshape(batches, n)
    return (v < threshold).mean(axis=1)


# ----------------------------------------------------------------------------
# numba implementations
# ----------------------------------------------------------------------------

if HAVE_NUMBA:
    _STIRLING_NB = _STIRLING.copy()

    @njit(cache=True)
    def _loggamma_scalar(z):
        flip = z.imag < 0.0
        if flip:
            z = z.conjugate()
        refl = z.real < _REFLECT_BELOW
        w = 1.0 - z if refl else z
        corr = 0.0 + 0.0j
        while w.real < _SHIFT_TO:
            corr += np.log(w)
            w += 1.0
        inv = 1.0 / w
        inv2 = inv * inv
        acc = 0.0 + 0.0j
        for i in range(_STIRLING_NB.shape[0] - 1, -1, -1):
            acc = acc * inv2 + _STIRLING_NB[i]
        out = (w - 0.5) * np.log(w) - w + _HALF_LOG_2PI + acc * inv - corr
        if refl:
            # 2 pi i k keeps the result on the principal branch
            out = math.log(math.pi) - np.log(np.sin(math.pi * z)) - out + 2j * math.pi * math.floor(0.5 * z.real + 0.25)
        if flip:
            out = out.conjugate()
        return out

    @njit(cache=True)
    def _loggamma_nb(z):
        flat = z.ravel()
        out = np.empty(flat.shape[0], dtype=np.complex128)
        for i in range(flat.shape[0]):
            out[i] = _loggamma_scalar(flat[i])
        return out.reshape(z.shape)

    @njit(cache=True)
    def _log_kernel_nb(shift, cs, ct, sign, s, t):
        n = s.shape[0]
        out = np.zeros(n, dtype=np.complex128)
        for i in range(n):
            acc = 0.0 + 0.0j
            si = s[i]
            ti = t[i]
            for j in range(shift.shape[0]):
                acc += sign[j] * _loggamma_scalar(shift[j] + cs[j] * si + ct[j] * ti)
            out[i] = acc
        return out

    @njit(cache=True)
    def _fixed_gain_sinr_nb(g1, g2, gain):
        out = np.empty_like(g1)
        for i in range(g1.shape[0]):
            out[i] = g1[i] * g2[i] / (g2[i] + gain)
        return out

    @njit(cache=True)
    def _csi_sinr_nb(g1, g2):
        out = np.empty_like(g1)
        for i in range(g1.shape[0]):
            out[i] = g1[i] * g2[i] / (g1[i] + g2[i] + 1.0)
        return out

    @njit(cache=True)
    def _batch_below_nb(values, threshold, batches):
        n = values.shape[0] // batches
        out = np.empty(batches)
        for b in range(batches):
            cnt = 0
            for i in range(b * n, (b + 1) * n):
                if values[i] < threshold:
                    cnt += 1
            out[b] = cnt / n
        return out


# ----------------------------------------------------------------------------
# dispatch
# ----------------------------------------------------------------------------


def loggamma(z):
    z = np.asarray(z, dtype=np.complex128)
    if HAVE_NUMBA:
        return _loggamma_nb(np.ascontiguousarray(z))
    return loggamma_np(z)


def log_kernel(shift, cs, ct, sign, s, t):
    s, t = np.broadcast_arrays(np.asarray(s, np.complex128), np.asarray(t, np.complex128))
    if HAVE_NUMBA:
        shape = s.shape
        out = _log_kernel_nb(shift, cs, ct, sign, np.array(s).ravel(), np.array(t).ravel())
        return out.reshape(shape)
    return log_kernel_np(shift, cs, ct, sign, s, t)


def fixed_gain_sinr(g1, g2, gain):
    if HAVE_NUMBA:
        return _fixed_gain_sinr_nb(g1, g2, float(gain))
    return fixed_gain_sinr_np(g1, g2, gain)


def csi_sinr(g1, g2):
    if HAVE_NUMBA:
        return _csi_sinr_nb(g1, g2)
    return csi_sinr_np(g1, g2)


def batch_below(values, threshold, batches):
    if HAVE_NUMBA:
        return _batch_below_nb(values, float(threshold), int(batches))
    return batch_below_np(values, threshold, batches)
