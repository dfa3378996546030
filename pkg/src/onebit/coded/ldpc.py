"""Binary LDPC codes: alist I/O, GF(2) systematic encoding, sum-product decoding.

Alist format (MacKay), whitespace separated, one record per line::

    n m                      number of columns (bits) and rows (checks)
    dv_max dc_max            largest column and row weights
    w_1 ... w_n              column weights
    w_1 ... w_m              row weights
    n lines                  1-based row indices of each column (0-padded)
    m lines                  1-based column indices of each row (0-padded)

Lines starting with ``#`` are ignored.  The column and row lists must
describe the same matrix.
"""

from dataclasses import dataclass, field
import hashlib
import io
from pathlib import Path

import numpy as np
import scipy.sparse as sp

# boxplus identity: exp(-BIG) underflows to exactly 0
_BIG = 1e4
MSG_CLIP = 200.0
DEFAULT_MAX_ITER = 50


class AlistError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class RankError(ValueError):
    pass


# ---------------------------------------------------------------------------
# alist parsing

def _records(text):
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _ints(line, lineno):
    try:
        return [int(t) for t in line.split()]
    except ValueError:
        raise AlistError(f"expected integers, got {line!r}", lineno) from None


def parse_alist(text):
    """Parse alist text into (m, n) edge arrays ``(rows, cols)`` (0-based)."""
    recs = list(_records(text))
    if len(recs) < 4:
        raise AlistError("truncated header (need 4 header lines)")
    it = iter(recs)

    def take(expected=None, what="record"):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise AlistError(f"unexpected end of file while reading {what}") from None
        vals = _ints(line, lineno)
        if expected is not None and len(vals) != expected:
            raise AlistError(f"{what}: expected {expected} values, got {len(vals)}", lineno)
        return lineno, vals

    ln, (n, m) = take(2, "dimensions")
    if n <= 0 or m <= 0:
        raise AlistError("dimensions must be positive", ln)
    ln, (dv_max, dc_max) = take(2, "maximum weights")
    ln, col_w = take(n, "column weights")
    ln, row_w = take(m, "row weights")
    if max(col_w) > dv_max or max(row_w) > dc_max:
        raise AlistError("a weight exceeds the declared maximum", ln)

    col_sets = []
    for j in range(n):
        ln, vals = take(None, f"column {j + 1}")
        idx = [v for v in vals if v != 0]
        if len(idx) != col_w[j]:
            raise AlistError(f"column {j + 1} lists {len(idx)} rows, weight says {col_w[j]}", ln)
        if any(v < 1 or v > m for v in idx):
            raise AlistError(f"column {j + 1} has a row index outside 1..{m}", ln)
        if len(set(idx)) != len(idx):
            raise AlistError(f"column {j + 1} repeats a row index", ln)
        col_sets.append(idx)
    row_sets = []
    for i in range(m):
        ln, vals = take(None, f"row {i + 1}")
        idx = [v for v in vals if v != 0]
        if len(idx) != row_w[i]:
            raise AlistError(f"row {i + 1} lists {len(idx)} columns, weight says {row_w[i]}", ln)
        if any(v < 1 or v > n for v in idx):
            raise AlistError(f"row {i + 1} has a column index outside 1..{n}", ln)
        row_sets.append(idx)
    extra = next(it, None)
    if extra is not None:
        raise AlistError("trailing data after the row lists", extra[0])

    from_cols = {(r - 1, j) for j, rows in enumerate(col_sets) for r in rows}
    from_rows = {(i, c - 1) for i, cols in enumerate(row_sets) for c in cols}
    if from_cols != from_rows:
        raise AlistError("column lists and row lists describe different matrices")
    edges = np.array(sorted(from_rows), dtype=np.int64).reshape(-1, 2)
    return m, n, edges[:, 0], edges[:, 1]


def format_alist(m, n, rows, cols):
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    col_lists = [sorted(rows[cols == j] + 1) for j in range(n)]
    row_lists = [sorted(cols[rows == i] + 1) for i in range(m)]
    dv = max(len(c) for c in col_lists)
    dc = max(len(r) for r in row_lists)
    out = [f"{n} {m}", f"{dv} {dc}",
           " ".join(str(len(c)) for c in col_lists),
           " ".join(str(len(r)) for r in row_lists)]
    out += [" ".join(map(str, c + [0] * (dv - len(c)))) for c in col_lists]
    out += [" ".join(map(str, r + [0] * (dc - len(r)))) for r in row_lists]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# GF(2) elimination

def _pack_sparse(m, n, rows, cols):
    a = np.zeros((m, (n + 7) // 8), dtype=np.uint8)
    np.bitwise_or.at(a, (rows, cols >> 3), (0x80 >> (cols & 7)).astype(np.uint8))
    return a


def _packed_rref(a, col_order):
    """Row-reduce packed GF(2) rows in place; returns (reduced rows, pivot columns)."""
    m = a.shape[0]
    pivots = []
    row = 0
    for c in col_order:
        if row == m:
            break
        byte, mask = c >> 3, np.uint8(0x80 >> (c & 7))
        hits = np.flatnonzero(a[row:, byte] & mask)
        if hits.size == 0:
            continue
        p = row + hits[0]
        if p != row:
            a[[row, p]] = a[[p, row]]
        others = np.flatnonzero(a[:, byte] & mask)
        others = others[others != row]
        if others.size:
            a[others] ^= a[row]
        pivots.append(c)
        row += 1
    return a[:row], pivots


def gf2_rank(h_dense):
    h = np.asarray(h_dense, dtype=np.uint8)
    _, piv = _packed_rref(np.packbits(h, axis=1), range(h.shape[1]))
    return len(piv)


@dataclass
class LdpcCode:
    """Sparse parity-check code with a precomputed systematic encoder.

    Parity bits sit on the pivot columns of the reduced H; the message is
    written to the remaining ``info_cols`` in increasing order.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    name: str = ""
    source_sha256: str = ""
    info_cols: np.ndarray = field(init=False, repr=False)
    parity_cols: np.ndarray = field(init=False, repr=False)
    k: int = field(init=False)
    _parity_map: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        order = np.lexsort((self.cols, self.rows))
        self.rows, self.cols = self.rows[order], self.cols[order]
        # pivot search from the last column so generated codes come out with
        # the message on the leading positions
        packed, pivots = _packed_rref(_pack_sparse(self.m, self.n, self.rows, self.cols),
                                      range(self.n - 1, -1, -1))
        pivot_set = set(pivots)
        self.parity_cols = np.array(pivots, dtype=np.int64)
        self.info_cols = np.array([c for c in range(self.n) if c not in pivot_set], dtype=np.int64)
        self.k = self.n - len(pivots)
        # parity bit i = <row i restricted to info columns, message> over GF(2)
        chunks = []
        for lo in range(0, len(packed), 1024):
            dense = np.unpackbits(packed[lo:lo + 1024], axis=1, count=self.n)
            chunks.append(np.packbits(dense[:, self.info_cols], axis=1))
        self._parity_map = (np.concatenate(chunks) if chunks
                            else np.zeros((0, (self.k + 7) // 8), dtype=np.uint8))
        self._decoder = _DecoderGraph(self.m, self.n, self.rows, self.cols)

    @property
    def rank(self):
        return self.n - self.k

    @property
    def rate(self):
        return self.k / self.n

    @property
    def num_edges(self):
        return len(self.rows)

    def parity_matrix(self):
        return sp.csr_matrix((np.ones(len(self.rows), dtype=np.uint8), (self.rows, self.cols)),
                             shape=(self.m, self.n))

    def syndrome(self, c):
        c = np.atleast_2d(np.asarray(c, dtype=np.int64))
        s = np.zeros((c.shape[0], self.m), dtype=np.int64)
        np.add.at(s, (slice(None), self.rows), c[:, self.cols])
        return (s & 1).astype(np.uint8)

    def is_codeword(self, c):
        return ~np.any(self.syndrome(c), axis=1)

    def to_alist(self):
        return format_alist(self.m, self.n, self.rows, self.cols)


def load_parity(path_or_text, k=None, name=None):
    """Read an alist parity-check file and build encoder and decoder tables.

    If ``k`` is given, the GF(2) rank of H must give exactly that message
    length; otherwise a RankError is raised.
    """
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        path = Path(path_or_text)
        raw = path.read_bytes()
        name = name or path.name
    else:
        raw = path_or_text.encode()
        name = name or "<text>"
    m, n, rows, cols = parse_alist(raw.decode())
    code = LdpcCode(m, n, rows, cols, name=name, source_sha256=hashlib.sha256(raw).hexdigest())
    if k is not None and code.k != k:
        raise RankError(f"H has rank {code.rank}, giving k={code.k}, but k={k} was declared")
    return code


def default_code_path():
    return Path(__file__).resolve().parent.parent / "data" / "regular_3_6_n4096.alist"


def default_code():
    return load_parity(default_code_path())


def ldpc_encode(message, code):
    """Systematic encoding of one message (k,) or a batch (F, k)."""
    msg = np.asarray(message)
    single = msg.ndim == 1
    msg = np.atleast_2d(msg).astype(np.uint8)
    if msg.shape[1] != code.k:
        raise ValueError(f"message length {msg.shape[1]} does not match k={code.k}")
    if np.any(msg > 1):
        raise ValueError("message must be binary")
    cw = np.zeros((msg.shape[0], code.n), dtype=np.uint8)
    cw[:, code.info_cols] = msg
    packed = np.packbits(msg, axis=1)
    for f in range(msg.shape[0]):
        ones = np.bitwise_count(code._parity_map & packed[f]).sum(axis=1, dtype=np.int64)
        cw[f, code.parity_cols] = ones & 1
    return cw[0] if single else cw


def extract_message(codeword, code):
    return np.asarray(codeword)[..., code.info_cols]


# ---------------------------------------------------------------------------
# sum-product decoding

class _DecoderGraph:
    """Edge index tables for check-view / variable-view message layouts."""

    def __init__(self, m, n, rows, cols):
        e = len(rows)
        self.m, self.n, self.e = m, n, e
        self.var_of_edge = cols
        dc = np.bincount(rows, minlength=m)
        dv = np.bincount(cols, minlength=n)
        # edges are sorted by check; slot within the check's row
        start = np.concatenate([[0], np.cumsum(dc)[:-1]])
        slot = np.arange(e) - start[rows]
        self.c_idx = np.full((m, max(1, dc.max())), e, dtype=np.int64)
        self.c_idx[rows, slot] = np.arange(e)
        self.c_mask = self.c_idx < e
        by_var = np.argsort(cols, kind="stable")
        vstart = np.concatenate([[0], np.cumsum(dv)[:-1]])
        vslot = np.arange(e) - vstart[cols[by_var]]
        self.v_idx = np.full((n, max(1, dv.max())), e, dtype=np.int64)
        self.v_idx[cols[by_var], vslot] = by_var


def boxplus(a, b):
    """Exact pairwise check-node combination 2 atanh(tanh(a/2) tanh(b/2))."""
    return (np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
            + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b))))


def _check_update(x):
    """Extrinsic boxplus over the last axis via prefix/suffix products."""
    d = x.shape[-1]
    if d == 1:
        return np.full_like(x, _BIG)
    fwd = np.empty_like(x)
    bwd = np.empty_like(x)
    fwd[..., 0] = x[..., 0]
    for i in range(1, d):
        fwd[..., i] = boxplus(fwd[..., i - 1], x[..., i])
    bwd[..., d - 1] = x[..., d - 1]
    for i in range(d - 2, -1, -1):
        bwd[..., i] = boxplus(bwd[..., i + 1], x[..., i])
    out = np.empty_like(x)
    out[..., 0] = bwd[..., 1]
    out[..., d - 1] = fwd[..., d - 2]
    for i in range(1, d - 1):
        out[..., i] = boxplus(fwd[..., i - 1], bwd[..., i + 1])
    return out


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    llr: np.ndarray


def ldpc_decode(llrs, code, max_iter=DEFAULT_MAX_ITER):
    """Log-domain sum-product decoding with early exit on a zero syndrome.

    ``llrs`` has shape (n,) or (F, n), positive meaning bit 0.  Frames are
    processed together but never interact, so each frame's result does not
    depend on what else is in the batch.
    """
    llr = np.asarray(llrs, dtype=np.float64)
    single = llr.ndim == 1
    llr = np.atleast_2d(llr)
    if llr.shape[1] != code.n:
        raise ValueError(f"expected {code.n} LLRs per frame, got {llr.shape[1]}")
    g = code._decoder
    frames = llr.shape[0]
    bits = (llr < 0).astype(np.uint8)
    post = llr.copy()
    converged = np.zeros(frames, dtype=bool)
    iters = np.full(frames, max_iter, dtype=np.int64)

    active = np.arange(frames)
    ch = llr
    v2c = ch[:, g.var_of_edge]
    for it in range(1, max_iter + 1):
        f = len(active)
        ext = np.concatenate([v2c, np.full((f, 1), _BIG)], axis=1)
        c2v_view = _check_update(ext[:, g.c_idx])
        c2v = np.zeros((f, g.e + 1))
        c2v[:, :g.e] = c2v_view[:, g.c_mask]
        total = ch + c2v[:, g.v_idx].sum(axis=2)
        hard = (total < 0).astype(np.uint8)
        hv = np.concatenate([hard[:, g.var_of_edge], np.zeros((f, 1), dtype=np.uint8)], axis=1)
        ok = ~np.any(hv[:, g.c_idx].sum(axis=2) & 1, axis=1)
        bits[active] = hard
        post[active] = total
        if ok.any():
            done = active[ok]
            converged[done] = True
            iters[done] = it
            keep = ~ok
            active, ch, total, c2v = active[keep], ch[keep], total[keep], c2v[keep]
            if active.size == 0:
                break
        v2c = np.clip(total[:, g.var_of_edge] - c2v[:, :g.e], -MSG_CLIP, MSG_CLIP)
    if single:
        return DecodeResult(bits[0], converged[0], iters[0], post[0])
    return DecodeResult(bits, converged, iters, post)


# ---------------------------------------------------------------------------
# code construction

def regular_parity_check(n, dv, dc, seed=0, max_rounds=10_000):
    """Random (dv, dc)-regular H without 4-cycles, as (m, rows, cols).

    Sockets are paired by a seeded permutation; parallel edges and 4-cycles
    are then removed by degree-preserving swaps of check endpoints.
    """
    if (n * dv) % dc:
        raise ValueError("n*dv must be divisible by dc")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    cols = np.repeat(np.arange(n), dv)
    rows = np.repeat(np.arange(m), dc)[rng.permutation(n * dv)]
    for _ in range(max_rounds):
        bad = _bad_edges(m, n, rows, cols)
        if bad.size == 0:
            return m, rows, cols
        partners = rng.integers(0, len(rows), size=bad.size)
        for a, b in zip(bad, partners):
            rows[a], rows[b] = rows[b], rows[a]
    raise RuntimeError("could not remove all 4-cycles; try another seed")


def _bad_edges(m, n, rows, cols):
    h = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, n))
    dup = h.data > 1
    if np.any(dup):
        h = h.tocoo()
        bad_pairs = set(zip(h.row[h.data > 1], h.col[h.data > 1]))
        return np.array([i for i, (r, c) in enumerate(zip(rows, cols)) if (r, c) in bad_pairs])
    overlap = (h.T @ h).tocoo()
    mask = (overlap.row < overlap.col) & (overlap.data >= 2)
    if not mask.any():
        return np.array([], dtype=np.int64)
    # one offending edge per 4-cycle: an edge of the first variable that lands
    # on a check shared with the second
    bad = []
    hc = h.tocsc()
    for v1, v2 in zip(overlap.row[mask], overlap.col[mask]):
        shared = np.intersect1d(hc.indices[hc.indptr[v1]:hc.indptr[v1 + 1]],
                                hc.indices[hc.indptr[v2]:hc.indptr[v2 + 1]])
        hit = np.flatnonzero((cols == v1) & (rows == shared[0]))
        bad.append(hit[0])
    return np.unique(np.array(bad, dtype=np.int64))


def write_regular_code(path, n=4096, dv=3, dc=6, seed=2018):
    m, rows, cols = regular_parity_check(n, dv, dc, seed)
    text = f"# ({dv},{dc})-regular LDPC code, n={n}, seed={seed}, no 4-cycles\n"
    Path(path).write_text(text + format_alist(m, n, rows, cols))
