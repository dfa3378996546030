"""Receive beamforming as detection over the one-bit SIMO channel.

For a symbol ``s`` the per-antenna, per-part output probabilities are

    p_{B,k}(s) = Q(-sqrt(2 rho) * part_B(r_k s)),   q_{B,k}(s) = 1 - p_{B,k}(s)

and the log-likelihood of a received vector ``y`` in ``{+-1 +-j}^N`` is the
linear statistic ``(real(w(s)^H y) + d(s)) / 2``.  Everything is kept in the
log domain.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import logsumexp

from .core import as_rho, log_q

DEFAULT_LLR_CLIP = 50.0


@dataclass(frozen=True)
class FlipProbs:
    """Log output probabilities, each of shape (K, N)."""

    log_p_re: np.ndarray
    log_q_re: np.ndarray
    log_p_im: np.ndarray
    log_q_im: np.ndarray


def flip_probs(s, b_r, snr):
    """Log-domain p/q tables for one symbol or an array of symbols.

    Rows follow ``s`` (a scalar gives a single row).
    """
    rho = as_rho(snr)
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    b_r = np.asarray(b_r, dtype=complex)
    mean = math.sqrt(2.0 * rho) * (s[:, None] * b_r[None, :])
    return FlipProbs(
        log_p_re=log_q(-mean.real),
        log_q_re=log_q(mean.real),
        log_p_im=log_q(-mean.imag),
        log_q_im=log_q(mean.imag),
    )


@dataclass(frozen=True)
class MlWeights:
    """Per-symbol ML combining weights ``w`` (K, N) and offsets ``d`` (K,)."""

    w: np.ndarray
    d: np.ndarray
    probs: FlipProbs
    symbols: np.ndarray

    @property
    def k(self):
        return self.w.shape[0]

    @property
    def n(self):
        return self.w.shape[1]


def ml_weights(codebook, b_r, snr, llr_clip=DEFAULT_LLR_CLIP):
    """Beamforming weights and offsets for every codebook symbol.

    ``codebook`` may be a Codebook or a plain array of symbols.  Each
    per-dimension log-probability is floored at ``-2*llr_clip`` before
    forming ``w`` and ``d``, so the log-ratios lie in ``+-2*llr_clip`` and
    ``(real(w^H r) + d) / 2`` stays a consistent (floored) log-likelihood even
    when the unclipped offsets would be astronomically negative.
    """
    symbols = np.asarray(getattr(codebook, "symbols", codebook), dtype=complex)
    fp = flip_probs(symbols, b_r, snr)
    floor = -2.0 * llr_clip
    lp_re, lq_re = np.maximum(fp.log_p_re, floor), np.maximum(fp.log_q_re, floor)
    lp_im, lq_im = np.maximum(fp.log_p_im, floor), np.maximum(fp.log_q_im, floor)
    w = (lp_re - lq_re) + 1j * (lp_im - lq_im)
    d = np.sum(lp_re + lq_re + lp_im + lq_im, axis=1)
    return MlWeights(w, d, fp, symbols)


def symbol_log_likelihoods(r, weights):
    """``log Pr(r|s)`` for each codebook symbol.

    ``r`` has shape (N,) or (T, N); the result has shape (K,) or (T, K).
    """
    r = np.asarray(r, dtype=complex)
    # real(w^H r) = w_re * r_re + w_im * r_im, summed over antennas
    stat = r.real @ weights.w.real.T + r.imag @ weights.w.imag.T
    return 0.5 * (stat + weights.d)


def detect_ml(r, weights):
    """Index of the ML symbol; the lowest index wins ties."""
    r = np.asarray(r, dtype=complex)
    stat = r.real @ weights.w.real.T + r.imag @ weights.w.imag.T + weights.d
    return np.argmax(stat, axis=-1)


def bit_llrs(r, weights, labels, llr_clip=DEFAULT_LLR_CLIP):
    """Exact log-sum-exp BICM demapper; a positive LLR favours bit 0.

    ``labels`` are integer labels (MSB first) or a (K, nbits) bit array.
    Output has shape (nbits,) or (T, nbits).
    """
    labels = np.asarray(labels)
    if labels.ndim == 1:
        nbits = max(1, int(round(math.log2(len(labels)))))
        shifts = np.arange(nbits - 1, -1, -1)
        bits = (labels[:, None] >> shifts[None, :]) & 1
    else:
        bits = labels
    if bits.shape[0] != weights.k:
        raise ValueError("number of labels does not match the codebook size")
    ll = symbol_log_likelihoods(r, weights)
    out = np.empty(ll.shape[:-1] + (bits.shape[1],))
    for b in range(bits.shape[1]):
        zero = bits[:, b] == 0
        out[..., b] = logsumexp(ll[..., zero], axis=-1) - logsumexp(ll[..., ~zero], axis=-1)
    return np.clip(out, -llr_clip, llr_clip)


def detect_mrc(y, b_r, snr, codebook):
    """Linear baseline: conjugate (MRC) combining then nearest symbol."""
    rho = as_rho(snr)
    b_r = np.asarray(b_r, dtype=complex)
    symbols = np.asarray(getattr(codebook, "symbols", codebook), dtype=complex)
    y = np.asarray(y, dtype=complex)
    z = (y @ b_r.conj()) / (math.sqrt(rho) * np.vdot(b_r, b_r).real)
    return np.argmin(np.abs(np.asarray(z)[..., None] - symbols), axis=-1)
