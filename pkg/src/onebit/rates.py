"""Mutual information and capacity of the one-bit SIMO channel.

The channel from an equivalent symbol ``s`` to the quantized output is a
DMC whose transition law factorizes over receive antennas and real/imag
parts.  Outputs are enumerated as ``2N`` sign bits, MSB first in the order
(antenna 0 real, antenna 0 imag, antenna 1 real, ...), a set bit meaning -1.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import logsumexp

from .codebook import brute_force_symbols, candidate_symbols, unique_symbols
from .core import as_rho, db_to_linear, linear_to_db, simulate_onebit
from .detector import flip_probs, ml_weights, symbol_log_likelihoods

LN2 = math.log(2.0)
DENSE_LIMIT = 10
# transition matrices larger than this many cells are streamed in blocks
DENSE_CELLS = 2**26


class EnumerationError(ValueError):
    pass


@dataclass
class RateResult:
    rate_bits: float
    method: str
    stderr: float | None = None
    iterations: int | None = None
    converged: bool = True
    upper_bound: float | None = None
    input_distribution: np.ndarray | None = None
    inputs: np.ndarray | None = None


class DmcChannel:
    """Factorized transition law Pr(r|s) for a fixed input alphabet."""

    def __init__(self, inputs, b_r, snr, dense_limit=DENSE_LIMIT):
        self.inputs = np.atleast_1d(np.asarray(inputs, dtype=complex))
        self.b_r = np.asarray(b_r, dtype=complex)
        self.rho = as_rho(snr)
        self.n = self.b_r.size
        self.dense_limit = dense_limit
        fp = flip_probs(self.inputs, self.b_r, self.rho)
        # (S, 2N, 2): log Pr(bit = 0), log Pr(bit = 1) per output bit
        lp = np.empty((len(self.inputs), 2 * self.n))
        lq = np.empty_like(lp)
        lp[:, 0::2], lp[:, 1::2] = fp.log_p_re, fp.log_p_im
        lq[:, 0::2], lq[:, 1::2] = fp.log_q_re, fp.log_q_im
        self.bit_logprob = np.stack([lp, lq], axis=-1)

    @property
    def n_outputs(self):
        return 4**self.n

    def check_enumerable(self):
        if self.n > self.dense_limit:
            raise EnumerationError(
                f"N={self.n} exceeds dense_limit={self.dense_limit}; "
                "use mc_mi or a reduced configuration")

    def _enumerate(self, bits):
        out = np.zeros((len(self.inputs), 1))
        for b in bits:
            out = (out[:, :, None] + self.bit_logprob[:, b, None, :]).reshape(len(self.inputs), -1)
        return out

    def log_likelihoods(self):
        """Dense (S, 4^N) matrix of log Pr(r|s)."""
        self.check_enumerable()
        return self._enumerate(range(2 * self.n))

    def log_likelihood_blocks(self, max_cells=DENSE_CELLS):
        """Yield (S, B) blocks of log Pr(r|s) covering all outputs in order."""
        self.check_enumerable()
        nbits = 2 * self.n
        s = len(self.inputs)
        low = nbits
        while low > 0 and s * 2**low > max_cells:
            low -= 1
        high = nbits - low
        tail = self._enumerate(range(high, nbits))
        for prefix in range(2**high):
            head = np.zeros(s)
            for i in range(high):
                bit = (prefix >> (high - 1 - i)) & 1
                head = head + self.bit_logprob[:, i, bit]
            yield head[:, None] + tail

    def output_vectors(self, index):
        """Received vectors in {+-1 +-j}^N for output indices."""
        index = np.atleast_1d(np.asarray(index, dtype=np.int64))
        shifts = np.arange(2 * self.n - 1, -1, -1, dtype=np.int64)
        bits = (index[:, None] >> shifts[None, :]) & 1
        sgn = 1.0 - 2.0 * bits
        return sgn[:, 0::2] + 1j * sgn[:, 1::2]


def _as_symbols(codebook):
    return np.asarray(getattr(codebook, "symbols", codebook), dtype=complex)


def _divergences(channel, log_px, max_cells=DENSE_CELLS):
    """D(P(.|x) || q) in nats for every input, q induced by ``log_px``."""
    parts = []
    for block in channel.log_likelihood_blocks(max_cells):
        log_q = logsumexp(block + log_px[:, None], axis=0)
        parts.append(np.sum(np.exp(block) * (block - log_q[None, :]), axis=1))
    if len(parts) == 1:
        return parts[0]
    parts = np.array(parts)
    return np.array([math.fsum(col) for col in parts.T])


def exact_mi(codebook, b_r, snr, dense_limit=DENSE_LIMIT):
    """I(s; r) in bits for uniform inputs over the codebook, by full enumeration."""
    symbols = _as_symbols(codebook)
    channel = DmcChannel(symbols, b_r, snr, dense_limit)
    k = len(symbols)
    log_px = np.full(k, -math.log(k))
    div = _divergences(channel, log_px)
    rate = max(0.0, math.fsum(div) / k / LN2)
    return RateResult(rate, "exact", stderr=0.0)


def mc_mi(codebook, b_r, snr, samples, rng, batch=100_000):
    """Monte Carlo estimate of the uniform-input mutual information."""
    if samples < 1000:
        raise ValueError("mc_mi needs at least 1000 samples")
    symbols = _as_symbols(codebook)
    k = len(symbols)
    weights = ml_weights(symbols, b_r, snr, llr_clip=np.inf)
    vals = []
    done = 0
    while done < samples:
        t = min(batch, samples - done)
        idx = rng.integers(0, k, size=t)
        r = simulate_onebit(symbols[idx], b_r, snr, rng)
        ll = symbol_log_likelihoods(r, weights)
        vals.append((ll[np.arange(t), idx] - logsumexp(ll, axis=1) + math.log(k)) / LN2)
        done += t
    vals = np.concatenate(vals)
    return RateResult(float(vals.mean()), "monte-carlo",
                      stderr=float(vals.std(ddof=1) / math.sqrt(len(vals))))


def _ba_core(log_lik_or_channel, n_inputs, tol, max_iter, max_cells=DENSE_CELLS):
    """Blahut-Arimoto on a dense log-likelihood matrix or a streamed channel.

    Returns (capacity_bits, upper_bits, log_px, iterations, converged).
    """
    log_px = np.full(n_inputs, -math.log(n_inputs))
    if n_inputs == 1:
        return 0.0, 0.0, log_px, 0, True
    if isinstance(log_lik_or_channel, np.ndarray):
        lik = np.exp(log_lik_or_channel)
        # sum_y P log P is fixed across iterations
        neg_ent = np.sum(lik * log_lik_or_channel, axis=1)

        def divergences(lp):
            q = np.exp(lp) @ lik
            return neg_ent - lik @ np.log(np.maximum(q, 1e-300))
    else:
        def divergences(lp):
            return _divergences(log_lik_or_channel, lp, max_cells)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        div = divergences(log_px)
        px = np.exp(log_px)
        lower = float(px @ div)
        upper = float(div.max())
        if (upper - lower) / LN2 <= tol:
            converged = True
            break
        log_px = log_px + div
        log_px -= logsumexp(log_px)
    return max(lower, 0.0) / LN2, upper / LN2, log_px, it, converged


def blahut_arimoto_dmc(transition, tol=1e-6, max_iter=10_000):
    """Capacity of a DMC given as a row-stochastic matrix (or a DmcChannel).

    Stops on the duality gap ``max_x D(P(.|x)||q) - sum_x p(x) D`` <= ``tol``
    bits.  Non-convergence is reported through ``converged``.
    """
    if isinstance(transition, DmcChannel):
        s = len(transition.inputs)
        if s * transition.n_outputs <= DENSE_CELLS:
            core_in = transition.log_likelihoods()
        else:
            core_in = transition
    else:
        p = np.asarray(transition, dtype=float)
        if p.ndim != 2 or np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1)) > 1e-9:
            raise ValueError("transition must be a row-stochastic matrix")
        s = p.shape[0]
        with np.errstate(divide="ignore"):
            core_in = np.log(p)
        # zero-probability cells contribute nothing; keep them finite
        core_in = np.where(p > 0, core_in, -1e300)
    cap, upper, log_px, it, ok = _ba_core(core_in, s, tol, max_iter)
    return RateResult(cap, "blahut-arimoto", iterations=it, converged=ok,
                      upper_bound=upper, input_distribution=np.exp(log_px))


def blahut_arimoto(inputs, b_r, snr, tol=1e-6, max_iter=10_000, dense_limit=DENSE_LIMIT):
    """Capacity of the one-bit SIMO channel restricted to ``inputs``."""
    inputs = _as_symbols(inputs)
    if inputs.size == 0:
        raise ValueError("input alphabet is empty")
    result = blahut_arimoto_dmc(DmcChannel(inputs, b_r, snr, dense_limit), tol, max_iter)
    result.inputs = inputs
    return result


def input_alphabet(b_t, mode="full", max_m=8):
    """Distinct equivalent symbols available to the transmitter.

    ``full`` enumerates all 4^M vectors (M <= ``max_m``); ``candidate-reduced``
    keeps only the phase-sweep candidates and gives a capacity lower bound.
    """
    if mode == "full":
        symset = brute_force_symbols(b_t, max_m=max_m)
    elif mode in ("candidate-reduced", "reduced"):
        symset = candidate_symbols(b_t)
    else:
        raise ValueError(f"unknown capacity mode {mode!r}")
    # vectors with equal symbols induce identical rows; merging them is exact
    return unique_symbols(symset).symbols


def onebit_capacity(b_t, b_r, snr, mode="full", tol=1e-6, max_iter=10_000,
                    dense_limit=DENSE_LIMIT):
    result = blahut_arimoto(input_alphabet(b_t, mode), b_r, snr, tol, max_iter, dense_limit)
    result.method = "blahut-arimoto"
    return result


def linear_capacity(m, n, snr):
    """log2(1 + M N rho) for the unquantized array link."""
    rho = as_rho(snr)
    return RateResult(math.log2(1.0 + m * n * rho), "closed-form", stderr=0.0)


def linear_snr_for_rate(m, n, rate_bits):
    """SNR (dB) at which the linear capacity reaches ``rate_bits``."""
    return float(linear_to_db((2.0**rate_bits - 1.0) / (m * n)))


def snr_for_rate(rate_fn, target, lo_db=-40.0, hi_db=30.0, tol_db=1e-3):
    """Bisection for the SNR (dB) where a non-decreasing rate curve hits ``target``.

    ``rate_fn`` maps a linear rho to bits.  Returns ``inf`` if the curve never
    reaches the target below ``hi_db``.
    """
    if rate_fn(db_to_linear(hi_db)) < target:
        return math.inf
    if rate_fn(db_to_linear(lo_db)) >= target:
        return lo_db
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        if rate_fn(db_to_linear(mid)) >= target:
            hi_db = mid
        else:
            lo_db = mid
    return 0.5 * (lo_db + hi_db)


def capacity_gap_db(m, n, b_t, b_r, rate_bits, mode="full", tol=1e-7):
    """Horizontal gap (dB) between the linear and one-bit capacity curves."""
    inputs = input_alphabet(b_t, mode)
    linear_db = linear_snr_for_rate(m, n, rate_bits)
    onebit_db = snr_for_rate(lambda rho: blahut_arimoto(inputs, b_r, rho, tol=tol).rate_bits,
                             rate_bits)
    return onebit_db - linear_db, linear_db, onebit_db

