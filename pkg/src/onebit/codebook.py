"""Transmit codebook design for one-bit (QPSK-per-antenna) arrays.

Transmit vectors live in ``{+-1/sqrt2 +- j/sqrt2}^M`` and are identified by
an integer *code* of ``2M`` sign bits.  Bits are ordered MSB first as
(antenna 0 real, antenna 0 imag, antenna 1 real, ...), a set bit meaning a
negative component.  The same layout is used for the hex strings in the
codebook JSON files.
"""

from dataclasses import dataclass, field
import itertools
import json
import math

import numpy as np

from .core import SQRT_HALF, DimensionError, as_array_response, sign_quantize

ALG_EPSILON = 1e-6
DEFAULT_BRUTE_FORCE_GUARD = 10
EXACT_SEARCH_LIMIT = 10**7
TIE_TOL = 1e-9

# per-antenna alphabet indexed by the 2-bit value (re_bit << 1) | im_bit
QPSK_ALPHABET = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) * SQRT_HALF


class InfeasibleError(ValueError):
    pass


class GuardError(ValueError):
    """Raised when an exhaustive enumeration would exceed its size guard."""


# ---------------------------------------------------------------------------
# sign-bit codes

def encode_vectors(x):
    """Pack rows of QPSK transmit vectors into integer codes."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    m = x.shape[1]
    if 2 * m > 62:
        raise DimensionError("codes are limited to 31 antennas")
    bits = np.empty((x.shape[0], 2 * m), dtype=np.int64)
    bits[:, 0::2] = x.real < 0
    bits[:, 1::2] = x.imag < 0
    weights = np.left_shift(np.int64(1), np.arange(2 * m - 1, -1, -1, dtype=np.int64))
    return bits @ weights


def decode_codes(codes, m):
    """Inverse of :func:`encode_vectors`."""
    codes = np.atleast_1d(np.asarray(codes, dtype=np.int64))
    shifts = np.arange(2 * m - 2, -1, -2, dtype=np.int64)
    pairs = (codes[:, None] >> shifts[None, :]) & 3
    return QPSK_ALPHABET[pairs]


def code_to_hex(code, m):
    return format(int(code), "0{}x".format(math.ceil(2 * m / 4)))


def hex_to_code(text):
    return int(text, 16)


# ---------------------------------------------------------------------------
# candidate set

@dataclass(frozen=True)
class CandidateSet:
    """The phase-sweep candidate vectors together with their generating phases."""

    codes: np.ndarray
    phases: np.ndarray
    m: int

    @property
    def vectors(self):
        return decode_codes(self.codes, self.m)

    def __len__(self):
        return len(self.codes)


@dataclass(frozen=True)
class SymbolSet:
    """Equivalent transmitted symbols paired with their transmit-vector codes."""

    symbols: np.ndarray
    codes: np.ndarray
    m: int

    @property
    def vectors(self):
        return decode_codes(self.codes, self.m)

    def __len__(self):
        return len(self.symbols)

    def argmax_magnitude(self):
        # ties (up to rounding) resolve to the lowest index
        mags = np.abs(self.symbols)
        return int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])


def x_of_phi(b_t, phi):
    """Quantized, phase-rotated steering vector ``sign(b_t e^{j phi}) / sqrt2``."""
    b_t = np.asarray(b_t, dtype=complex)
    return sign_quantize(b_t * np.exp(1j * phi)) * SQRT_HALF


def switching_epsilon(b_t, eps=ALG_EPSILON):
    """Phase offset used past each switching point.

    Entries of x(phi) switch when ``angle(t_k) + phi`` crosses a multiple of
    pi/2.  If two distinct switching points are closer than ``eps`` the
    offset is halved to the smallest gap so no switch is skipped.
    """
    a = np.sort(np.mod(np.angle(b_t), np.pi / 2))
    gaps = np.diff(np.concatenate([a, [a[0] + np.pi / 2]]))
    gaps = gaps[gaps > 1e-15]
    if gaps.size and gaps.min() <= eps:
        return 0.5 * gaps.min()
    return eps


def candidate_set(b_t, eps=ALG_EPSILON):
    """Build the <= 4M candidate transmit vectors (closed under rotation by j)."""
    b_t = as_array_response(b_t)
    m = b_t.size
    eps = switching_epsilon(b_t, eps)
    codes, phases, seen = [], [], set()
    for t in b_t:
        phi = -np.angle(t) + eps
        x = x_of_phi(b_t, phi)
        for q in range(4):
            code = int(encode_vectors(x * 1j**q)[0])
            if code not in seen:
                seen.add(code)
                codes.append(code)
                phases.append(np.mod(phi + q * np.pi / 2, 2 * np.pi))
    return CandidateSet(np.array(codes, dtype=np.int64), np.array(phases), m)


def equivalent_symbol(b_t, x):
    """``sqrt(1/M) b_t^H x``; ``x`` may be one vector or a stack of rows."""
    b_t = np.asarray(b_t, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != b_t.size:
        raise DimensionError(f"vector length {x.shape[-1]} does not match M={b_t.size}")
    return (x @ b_t.conj()) / math.sqrt(b_t.size)


def candidate_symbols(b_t, eps=ALG_EPSILON):
    cs = candidate_set(b_t, eps)
    return SymbolSet(equivalent_symbol(b_t, cs.vectors), cs.codes, cs.m)


def brute_force_symbols(b_t, max_m=DEFAULT_BRUTE_FORCE_GUARD):
    """All 4^M equivalent symbols; the symbol at index i has code i."""
    b_t = as_array_response(b_t)
    m = b_t.size
    if m > max_m:
        raise GuardError(
            f"brute force over 4^{m} vectors exceeds the guard M <= {max_m}; "
            "use candidate_symbols or raise max_m explicitly")
    sums = np.zeros(1, dtype=complex)
    for t in b_t:
        sums = (sums[:, None] + np.conj(t) * QPSK_ALPHABET[None, :]).ravel()
    return SymbolSet(sums / math.sqrt(m), np.arange(4**m, dtype=np.int64), m)


def unique_symbols(symbols, decimals=12):
    """Drop entries whose symbols coincide (rounded to ``decimals``)."""
    key = np.round(symbols.symbols.real, decimals) + 1j * np.round(symbols.symbols.imag, decimals)
    _, first = np.unique(key, return_index=True)
    first = np.sort(first)
    return SymbolSet(symbols.symbols[first], symbols.codes[first], symbols.m)


# ---------------------------------------------------------------------------
# codebooks

def gray_label(k):
    """Cyclic binary-reflected Gray sequence of length ``k``."""
    k = int(k)
    if k < 1 or k & (k - 1):
        raise ValueError(f"K must be a power of 2, got {k}")
    i = np.arange(k)
    return i ^ (i >> 1)


@dataclass
class Codebook:
    """K symbols ordered by phase, with Gray labels and a PSK alignment rotation.

    ``codes`` holds the transmit vector codes (None for the linear PSK
    baseline, whose vectors are ``b_T * exp(j*tx_phases)``).
    """

    symbols: np.ndarray
    codes: np.ndarray | None
    m: int
    labels: np.ndarray | None = None
    rotation: complex = 1 + 0j
    b_t: np.ndarray | None = None
    theta_t_deg: float | None = None
    tx_phases: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.symbols)

    @property
    def k(self):
        return len(self.symbols)

    @property
    def bits_per_symbol(self):
        return int(round(math.log2(self.k)))

    @property
    def vectors(self):
        if self.codes is None:
            return None
        return decode_codes(self.codes, self.m)

    @property
    def aligned_symbols(self):
        return self.symbols * self.rotation

    @property
    def min_distance(self):
        return min_distance(self.symbols)

    def label_bits(self):
        """(K, log2 K) array of label bits, MSB first."""
        nb = self.bits_per_symbol
        shifts = np.arange(nb - 1, -1, -1)
        return (self.labels[:, None] >> shifts[None, :]) & 1

    def label_strings(self):
        nb = self.bits_per_symbol
        return [format(int(lab), f"0{nb}b") for lab in self.labels]

    def psk_deviation_deg(self):
        """Largest deviation of the aligned phases from an ideal K-PSK grid."""
        # entries are already in increasing phase order from the first one
        ideal = 2 * np.pi * np.arange(self.k) / self.k
        dev = np.angle(self.aligned_symbols * np.exp(-1j * ideal))
        return float(np.degrees(np.max(np.abs(dev))))

    def to_dict(self):
        doc = {"M": self.m, "K": self.k}
        if self.theta_t_deg is not None:
            doc["theta_T_deg"] = self.theta_t_deg
        if self.b_t is not None and self.theta_t_deg is None:
            doc["b_T"] = [[float(z.real), float(z.imag)] for z in self.b_t]
        doc["rotation"] = {"re": float(np.real(self.rotation)), "im": float(np.imag(self.rotation))}
        entries = []
        labels = self.label_strings() if self.labels is not None else [None] * self.k
        for i, s in enumerate(self.symbols):
            e = {"re": float(s.real), "im": float(s.imag)}
            if self.codes is not None:
                e["tx"] = code_to_hex(self.codes[i], self.m)
            if self.tx_phases is not None:
                e["tx_phase"] = float(self.tx_phases[i])
            e["label"] = labels[i]
            entries.append(e)
        doc["entries"] = entries
        if self.meta:
            doc["meta"] = self.meta
        return doc

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc):
        m = int(doc["M"])
        entries = doc["entries"]
        if len(entries) != int(doc["K"]):
            raise ValueError("K does not match the number of entries")
        symbols = np.array([e["re"] + 1j * e["im"] for e in entries])
        codes = None
        if all("tx" in e for e in entries):
            codes = np.array([hex_to_code(e["tx"]) for e in entries], dtype=np.int64)
        labels = None
        if all(e.get("label") is not None for e in entries):
            labels = np.array([int(e["label"], 2) for e in entries])
        tx_phases = None
        if all("tx_phase" in e for e in entries):
            tx_phases = np.array([e["tx_phase"] for e in entries])
        rot = doc.get("rotation", {"re": 1.0, "im": 0.0})
        theta = doc.get("theta_T_deg")
        b_t = None
        if theta is not None:
            from .core import ula_response
            b_t = ula_response(m, np.radians(theta))
        elif "b_T" in doc:
            b_t = np.array([a + 1j * b for a, b in doc["b_T"]])
        return cls(symbols, codes, m, labels, complex(rot["re"], rot["im"]), b_t, theta,
                   tx_phases, dict(doc.get("meta", {})))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def min_distance(symbols):
    s = np.asarray(symbols)
    if s.size < 2:
        return math.inf
    d = np.abs(s[:, None] - s[None, :])
    return float(d[np.triu_indices(s.size, 1)].min())


def _relative_phases(symbols, ref):
    rel = np.mod(np.angle(symbols * np.conj(ref)), 2 * np.pi)
    rel[rel > 2 * np.pi - TIE_TOL] = 0.0
    return rel


def make_codebook(symset, indices, b_t=None, theta_t_deg=None, labelled=True):
    """Assemble a Codebook from chosen entries of a SymbolSet.

    The entry of largest magnitude (lowest index on ties) goes first and
    fixes the alignment rotation; the rest follow in increasing phase.
    """
    indices = np.asarray(indices, dtype=int)
    sym = symset.symbols[indices]
    mags = np.abs(sym)
    first = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    rel = _relative_phases(sym, sym[first])
    rel[first] = -1.0
    order = np.lexsort((indices, rel))
    sym = sym[order]
    codes = symset.codes[indices[order]] if symset.codes is not None else None
    rotation = np.exp(-1j * np.angle(sym[0])) if abs(sym[0]) > 0 else 1 + 0j
    k = len(sym)
    labels = gray_label(k) if labelled and k >= 1 and not (k & (k - 1)) else None
    return Codebook(sym, codes, symset.m, labels, complex(rotation), b_t, theta_t_deg)


def _tie_key(dists, rel_phases, idx):
    return (np.sort(dists), np.sort(rel_phases), tuple(sorted(idx)))


def _better(a, b):
    """True if tie key ``a`` beats ``b``: larger sorted distances, then smaller phases."""
    for x, y in zip(a[0], b[0]):
        if abs(x - y) > TIE_TOL:
            return x > y
    for x, y in zip(a[1], b[1]):
        if abs(x - y) > TIE_TOL:
            return x < y
    return a[2] < b[2]


def _subset_key(dmat, rel_phases, idx):
    idx = list(idx)
    sub = dmat[np.ix_(idx, idx)]
    dists = sub[np.triu_indices(len(idx), 1)]
    return _tie_key(dists, rel_phases[idx], idx)


def _exact_search(dmat, k):
    n = dmat.shape[0]
    pairs = list(itertools.combinations(range(k), 2))
    best = -math.inf
    winners = []
    combos = itertools.combinations(range(n), k)
    chunk = max(1, 400_000 // k)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)),
                            dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, k)
        mind = np.full(len(block), math.inf)
        for a, b in pairs:
            np.minimum(mind, dmat[block[:, a], block[:, b]], out=mind)
        top = mind.max()
        if top > best + TIE_TOL:
            best = top
            winners = [tuple(r) for r in block[mind >= top - TIE_TOL]]
        elif top >= best - TIE_TOL:
            best = max(best, top)
            winners.extend(tuple(r) for r in block[mind >= best - TIE_TOL])
    return [w for w in winners if min(dmat[a, b] for a, b in itertools.combinations(w, 2)) >= best - TIE_TOL]


def _swap_search(dmat, chosen):
    """Pairwise-swap local search on the minimum distance."""
    chosen = list(chosen)
    k = len(chosen)
    while True:
        sub = dmat[np.ix_(chosen, chosen)]
        current = sub[np.triu_indices(k, 1)].min()
        improved = False
        for pos in range(k):
            rest = chosen[:pos] + chosen[pos + 1:]
            if len(rest) > 1:
                rs = dmat[np.ix_(rest, rest)]
                rest_min = rs[np.triu_indices(len(rest), 1)].min()
            else:
                rest_min = math.inf
            cand = np.minimum(dmat[rest].min(axis=0), rest_min)
            cand[chosen] = -math.inf
            j = int(np.argmax(cand))
            if cand[j] > current + TIE_TOL:
                chosen[pos] = j
                improved = True
                break
        if not improved:
            return chosen


def _greedy_seed(dmat, seed, k):
    chosen = [seed]
    closest = dmat[seed].copy()
    closest[seed] = -math.inf
    while len(chosen) < k:
        j = int(np.argmax(closest))
        chosen.append(j)
        np.minimum(closest, dmat[j], out=closest)
        closest[chosen] = -math.inf
    return chosen


def _heuristic_search(dmat, symbols, k, max_seeds=64):
    n = dmat.shape[0]
    if n <= 256:
        seeds = range(n)
    else:
        seeds = np.argsort(-np.abs(symbols), kind="stable")[:max_seeds]
    results = []
    for seed in seeds:
        chosen = _swap_search(dmat, _greedy_seed(dmat, int(seed), k))
        results.append(tuple(sorted(chosen)))
    return sorted(set(results))


def select_codebook(symbols, k, exact_limit=EXACT_SEARCH_LIMIT, b_t=None, theta_t_deg=None):
    """K-subset of ``symbols`` maximizing the minimum pairwise distance.

    Exhaustive when C(len(symbols), K) <= ``exact_limit``; otherwise greedy
    farthest-point seeding followed by pairwise-swap local search.  Ties are
    resolved on the sorted pairwise distances, then on phases measured from
    the largest-magnitude symbol, then on entry indices, which keeps the
    choice stable under a common rotation of all symbols.
    """
    k = int(k)
    n = len(symbols)
    if k < 1:
        raise InfeasibleError("K must be positive")
    if k > n:
        raise InfeasibleError(f"cannot choose K={k} symbols from a set of {n}")
    s = symbols.symbols
    dmat = np.abs(s[:, None] - s[None, :])
    rel = _relative_phases(s, s[symbols.argmax_magnitude()])
    if k == 1:
        winners = [(symbols.argmax_magnitude(),)]
        exact = True
    elif math.comb(n, k) <= exact_limit:
        winners = _exact_search(dmat, k)
        exact = True
    else:
        winners = _heuristic_search(dmat, s, k)
        exact = False
        best = max(min_distance(s[list(w)]) for w in winners)
        winners = [w for w in winners if min_distance(s[list(w)]) >= best - TIE_TOL]
    best_key = None
    for w in winners:
        key = _subset_key(dmat, rel, w)
        if best_key is None or _better(key, best_key):
            best_key = key
    cb = make_codebook(symbols, list(best_key[2]), b_t, theta_t_deg)
    cb.meta["search"] = "exact" if exact else "heuristic"
    return cb


def closed_form_codebook(symbols, k, tol=1e-9, b_t=None, theta_t_deg=None):
    """``{+-s_max}`` for K=2 or ``{+-s_max, +-j s_max}`` for K=4."""
    if k not in (2, 4):
        raise ValueError("closed form exists only for K = 2 or 4")
    s = symbols.symbols
    i_max = symbols.argmax_magnitude()
    s_max = s[i_max]
    rots = [1, -1] if k == 2 else [1, 1j, -1, -1j]
    scale = max(1.0, float(np.abs(s).max()))

    def find(target):
        d = np.abs(s - target)
        j = int(np.argmin(d))
        return j if d[j] <= tol * scale else None

    for z in s:
        for q in rots[1:]:
            if find(z * q) is None:
                raise ValueError(f"symbol set is not closed under multiplication by {q}")
    idx = [find(s_max * q) for q in rots]
    cb = make_codebook(symbols, idx, b_t, theta_t_deg)
    cb.meta["search"] = "closed-form"
    return cb


def linear_psk_codebook(m, k):
    """K-PSK of radius sqrt(M): the linear-transceiver baseline."""
    k = int(k)
    if k < 2:
        raise ValueError("K must be at least 2")
    phases = 2 * np.pi * np.arange(k) / k
    symbols = math.sqrt(m) * np.exp(1j * phases)
    labels = gray_label(k) if not (k & (k - 1)) else None
    cb = Codebook(symbols, None, int(m), labels, 1 + 0j, tx_phases=phases)
    cb.meta["search"] = "linear-psk"
    return cb


def design_codebook(b_t, k, method="auto", theta_t_deg=None, eps=ALG_EPSILON):
    """Candidate symbols followed by subset selection (closed form for K=2/4 if asked)."""
    symset = candidate_symbols(b_t, eps)
    if method == "closed-form" or (method == "auto" and k in (2, 4)):
        return closed_form_codebook(symset, k, b_t=np.asarray(b_t), theta_t_deg=theta_t_deg)
    return select_codebook(symset, k, b_t=np.asarray(b_t), theta_t_deg=theta_t_deg)


# ---------------------------------------------------------------------------
# bound checks

@dataclass
class BoundReport:
    m: int
    n_candidates: int
    min_abs: float
    lower_bound: float
    max_abs: float
    max_bound: float
    prop1_pass: bool
    prop2_pass: bool
    size_pass: bool
    brute_max_abs: float | None = None
    membership_gap: float | None = None
    membership_pass: bool | None = None

    @property
    def passed(self):
        flags = [self.prop1_pass, self.prop2_pass, self.size_pass]
        if self.membership_pass is not None:
            flags.append(self.membership_pass)
        return all(flags)

    def to_dict(self):
        return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in self.__dict__.items()} | {
            "passed": self.passed}


def check_propositions(b_t, brute_force=False, max_m=DEFAULT_BRUTE_FORCE_GUARD, tol=1e-12):
    """Evaluate the beamforming-gain bounds on the candidate symbols.

    Checks ``min|s| > sqrt(M/2)``, ``max|s| >= 2 sqrt(2M)/pi`` and
    ``|candidates| <= 4M``.  With ``brute_force`` the largest symbol over all
    4^M vectors is also required to be among the candidates.
    """
    b_t = as_array_response(b_t)
    m = b_t.size
    symset = candidate_symbols(b_t)
    mags = np.abs(symset.symbols)
    lower = math.sqrt(m / 2)
    upper = 2 * math.sqrt(2 * m) / math.pi
    report = BoundReport(
        m=m,
        n_candidates=len(symset),
        min_abs=float(mags.min()),
        lower_bound=lower,
        max_abs=float(mags.max()),
        max_bound=upper,
        prop1_pass=bool(mags.min() > lower),
        prop2_pass=bool(mags.max() >= upper),
        size_pass=len(symset) <= 4 * m,
    )
    if brute_force and m <= max_m:
        full = brute_force_symbols(b_t, max_m)
        s_best = full.symbols[full.argmax_magnitude()]
        gap = float(np.min(np.abs(symset.symbols - s_best)))
        report.brute_max_abs = float(abs(s_best))
        report.membership_gap = gap
        report.membership_pass = bool(gap <= tol and abs(abs(s_best) - mags.max()) <= tol)
    return report
