"""Array responses, the one-bit LOS channel, and Gaussian tail probabilities."""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import erfc

SQRT_HALF = 1.0 / math.sqrt(2.0)
UNIT_TOL = 1e-12

# Beyond this |x| the log-tail switches to the asymptotic series.
_LOGQ_SWITCH = 8.0
_ERFC_RANGE = 37.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DimensionError(ValueError):
    """Raised when array sizes are invalid or inconsistent."""


@dataclass(frozen=True)
class SnrConfig:
    """Received SNR per receive antenna, stored as a linear power ratio."""

    rho: float

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be positive and finite, got {self.rho}")

    @classmethod
    def from_db(cls, snr_db):
        return cls(db_to_linear(snr_db))

    @property
    def db(self):
        return linear_to_db(self.rho)


def db_to_linear(snr_db):
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(rho):
    return 10.0 * np.log10(rho)


def as_rho(snr):
    """Accept either an SnrConfig or a bare non-negative float."""
    if isinstance(snr, SnrConfig):
        return snr.rho
    rho = float(snr)
    if rho < 0 or not math.isfinite(rho):
        raise ValueError(f"rho must be non-negative and finite, got {rho}")
    return rho


def ula_response(n, theta):
    """Steering vector of a half-wavelength ULA.

    Element k is ``exp(j*k*pi*sin(theta))`` with ``theta`` in radians.
    """
    n = int(n)
    if n < 1:
        raise DimensionError(f"array size must be >= 1, got {n}")
    k = np.arange(n)
    return np.exp(1j * k * np.pi * np.sin(theta))


def as_array_response(b):
    """Validate a user supplied array response (unit-magnitude complex entries)."""
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    if b.ndim != 1 or b.size == 0:
        raise DimensionError("array response must be a non-empty 1-D vector")
    if not np.all(np.isfinite(b)):
        raise ValueError("array response has non-finite entries")
    if np.max(np.abs(np.abs(b) - 1.0)) > UNIT_TOL:
        raise ValueError("array response entries must have magnitude 1")
    return b


def sign_quantize(v):
    """Per-component one-bit quantizer onto {+-1 +-j}.

    An exact zero in either part quantizes to +1.
    """
    v = np.asarray(v, dtype=complex)
    re = np.where(v.real < 0, -1.0, 1.0)
    im = np.where(v.imag < 0, -1.0, 1.0)
    return re + 1j * im


def complex_noise(rng, shape):
    """Circularly symmetric CN(0, 1) samples, variance 1/2 per real dimension."""
    if isinstance(shape, int):
        shape = (shape,)
    g = rng.standard_normal(tuple(shape) + (2,))
    return (g[..., 0] + 1j * g[..., 1]) * SQRT_HALF


def simulate_linear(s, b_r, snr, rng):
    """Unquantized SIMO output ``sqrt(rho)*b_r*s + n``.

    ``s`` may be a scalar or a 1-D array of symbols; the output then has
    shape ``(len(s), N)``.
    """
    rho = as_rho(snr)
    b_r = np.asarray(b_r, dtype=complex)
    s = np.asarray(s, dtype=complex)
    clean = math.sqrt(rho) * np.multiply.outer(s, b_r)
    return clean + complex_noise(rng, clean.shape)


def simulate_onebit(s, b_r, snr, rng):
    """One-bit SIMO output ``sign(sqrt(rho)*b_r*s + n)``."""
    return sign_quantize(simulate_linear(s, b_r, snr, rng))


def _logq_asymptotic(x):
    # ln Q(x) for large positive x via the Mills-ratio series.
    z = 1.0 / (x * x)
    series = np.ones_like(x)
    term = np.ones_like(x)
    for n in range(1, 13):
        term = -term * (2 * n - 1) * z
        series = series + term
    return -0.5 * x * x - np.log(x) - _LOG_SQRT_2PI + np.log(series)


def log_q(x):
    """Natural log of the Gaussian tail probability Q(x) = P(N(0,1) > x).

    Accurate to ~1e-12 relative for x <= 8 (including the deep negative
    tail) and to ~1e-10 relative beyond, where the log is large.
    Works elementwise on arrays.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    mid = np.abs(x) <= _LOGQ_SWITCH
    pos = mid & (x >= 0)
    neg = mid & (x < 0)
    far_pos = x > _LOGQ_SWITCH
    # erfc stays representable out here, so ln(1 - Q(|x|)) is still exact-ish
    near_neg = (x < -_LOGQ_SWITCH) & (x >= -_ERFC_RANGE)
    far_neg = x < -_ERFC_RANGE

    out[pos] = np.log(0.5 * erfc(x[pos] * SQRT_HALF))
    # ln(1 - Q(|x|)) keeps relative accuracy when Q(x) is close to 1
    out[neg] = np.log1p(-0.5 * erfc(-x[neg] * SQRT_HALF))
    out[far_pos] = _logq_asymptotic(x[far_pos])
    out[near_neg] = np.log1p(-0.5 * erfc(-x[near_neg] * SQRT_HALF))
    out[far_neg] = np.log1p(-np.exp(_logq_asymptotic(-x[far_neg])))
    return float(out[0]) if scalar else out


def q_function(x):
    return np.exp(log_q(x))


def make_rng(seed, *key):
    """Seeded generator; ``key`` names an independent substream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)
