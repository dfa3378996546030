"""LDPC-coded BICM over the one-bit SIMO channel and BER/SNR sweeps.

Every frame draws its message, interleaver and channel noise from its own
generator keyed by (seed, SNR point index, frame index), and frames are
tallied in index order in fixed-size blocks.  Results therefore do not
depend on how many worker threads run the blocks.
"""

from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict, dataclass
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from ..codebook import Codebook, gray_label
from ..core import db_to_linear, make_rng, simulate_onebit
from ..detector import DEFAULT_LLR_CLIP, bit_llrs, ml_weights
from .ldpc import DEFAULT_MAX_ITER, LdpcCode, ldpc_decode, ldpc_encode

BER_COLUMNS = ["snr_db", "ber", "fer", "bits", "frames", "ci_halfwidth"]
Z95 = 1.959963984540054


class ConfigError(ValueError):
    pass


def interleaver_permutation(n, seed):
    return np.random.default_rng(seed).permutation(n)


def interleave(bits, seed):
    """Seeded uniform permutation: ``out[i] = bits[perm[i]]``."""
    bits = np.asarray(bits)
    return bits[..., interleaver_permutation(bits.shape[-1], seed)]


def deinterleave(bits, seed):
    bits = np.asarray(bits)
    perm = interleaver_permutation(bits.shape[-1], seed)
    out = np.empty_like(bits)
    out[..., perm] = bits
    return out


@dataclass
class BicmConfig:
    codebook: Codebook
    code: LdpcCode
    b_r: np.ndarray
    snr_db: list
    seed: int = 0
    max_iter: int = DEFAULT_MAX_ITER
    target_frame_errors: int = 100
    max_bits: int = 10**7
    max_frames: int | None = None
    batch_frames: int = 32
    threads: int = 1
    llr_clip: float = DEFAULT_LLR_CLIP

    def validate(self):
        k = self.codebook.k
        if k < 2 or k & (k - 1):
            raise ConfigError(f"codebook size must be a power of 2 >= 2, got {k}")
        if self.codebook.labels is None or len(self.codebook.labels) != k:
            raise ConfigError("codebook has no bit labels")
        if sorted(int(x) for x in self.codebook.labels) != list(range(k)):
            raise ConfigError("codebook labels must be a permutation of 0..K-1")
        if np.asarray(self.b_r).ndim != 1 or len(self.b_r) == 0:
            raise ConfigError("b_R must be a non-empty vector")
        if not all(math.isfinite(x) for x in self.snr_db):
            raise ConfigError("SNR grid must be finite")
        if self.batch_frames < 1 or self.threads < 1 or self.max_iter < 1:
            raise ConfigError("batch_frames, threads and max_iter must be >= 1")
        if self.target_frame_errors < 1 or self.max_bits < 1:
            raise ConfigError("stopping targets must be >= 1")
        if self.max_frames is not None and self.max_frames < 1:
            raise ConfigError("max_frames must be >= 1")

    @property
    def bits_per_symbol(self):
        return self.codebook.bits_per_symbol

    @property
    def symbols_per_frame(self):
        return -(-self.code.n // self.bits_per_symbol)

    @property
    def info_rate(self):
        """Information bits per channel use."""
        return self.code.k / (self.symbols_per_frame)

    @property
    def nominal_info_rate(self):
        return self.code.rate * self.bits_per_symbol

    def echo(self):
        """Everything that determines the simulated numbers."""
        return {
            "codebook_sha256": hashlib.sha256(self.codebook.to_json().encode()).hexdigest(),
            "code": {"name": self.code.name, "n": self.code.n, "k": self.code.k,
                     "sha256": self.code.source_sha256},
            "b_R": [[float(z.real), float(z.imag)] for z in np.asarray(self.b_r)],
            "snr_db": [float(x) for x in self.snr_db],
            "seed": int(self.seed),
            "max_iter": int(self.max_iter),
            "target_frame_errors": int(self.target_frame_errors),
            "max_bits": int(self.max_bits),
            "max_frames": self.max_frames,
            "batch_frames": int(self.batch_frames),
            "llr_clip": float(self.llr_clip),
            "padding": "zeros appended after interleaving; their LLRs are dropped",
        }


@dataclass
class BerPoint:
    snr_db: float
    bit_errors: int
    bits: int
    frame_errors: int
    frames: int
    ber: float
    fer: float
    ci_halfwidth: float
    mean_iterations: float = 0.0

    @classmethod
    def from_frames(cls, snr_db, errors, bits_per_frame, iterations):
        errors = np.asarray(errors, dtype=np.int64)
        frames = len(errors)
        bits = frames * bits_per_frame
        total = int(errors.sum())
        ber = total / bits if bits else 0.0
        if total == 0:
            # rule of three: 95% upper bound with no observed errors
            ci = 3.0 / bits if bits else 1.0
        elif frames > 1:
            # errors cluster inside failed frames, so use the per-frame spread
            ci = Z95 * float(np.std(errors / bits_per_frame, ddof=1)) / math.sqrt(frames)
        else:
            ci = 1.0
        return cls(float(snr_db), total, int(bits), int(np.count_nonzero(errors)), frames,
                   ber, int(np.count_nonzero(errors)) / frames if frames else 0.0, ci,
                   float(np.mean(iterations)) if frames else 0.0)


def _label_tables(codebook):
    labels = np.asarray(codebook.labels, dtype=np.int64)
    index_of_label = np.empty(len(labels), dtype=np.int64)
    index_of_label[labels] = np.arange(len(labels))
    return labels, index_of_label


def simulate_frames(config, point_index, frame_ids, weights=None):
    """Run the full chain for the given frames; returns (bit errors, iterations)."""
    code, cb = config.code, config.codebook
    rho = db_to_linear(config.snr_db[point_index])
    if weights is None:
        weights = ml_weights(cb, config.b_r, rho, config.llr_clip)
    labels, index_of_label = _label_tables(cb)
    nb = config.bits_per_symbol
    n_sym = config.symbols_per_frame
    pad = n_sym * nb - code.n
    weights_bits = 1 << np.arange(nb - 1, -1, -1)

    rngs = [make_rng(config.seed, point_index, f) for f in frame_ids]
    msgs = np.stack([r.integers(0, 2, code.k, dtype=np.uint8) for r in rngs])
    perms = [r.permutation(code.n) for r in rngs]
    cws = ldpc_encode(msgs, code)
    llrs = np.empty((len(frame_ids), code.n))
    for i, rng in enumerate(rngs):
        tx_bits = np.concatenate([cws[i][perms[i]], np.zeros(pad, dtype=np.uint8)])
        lab = tx_bits.reshape(n_sym, nb) @ weights_bits
        symbols = cb.symbols[index_of_label[lab]]
        r = simulate_onebit(symbols, config.b_r, rho, rng)
        soft = bit_llrs(r, weights, labels, config.llr_clip).reshape(-1)[:code.n]
        llrs[i, perms[i]] = soft
    res = ldpc_decode(llrs, code, config.max_iter)
    dec = res.bits[:, code.info_cols]
    errors = np.count_nonzero(dec != msgs, axis=1)
    return errors, res.iterations


def run_point(config, point_index, executor=None):
    """Simulate one SNR point until the stopping rule fires."""
    code = config.code
    rho = db_to_linear(config.snr_db[point_index])
    weights = ml_weights(config.codebook, config.b_r, rho, config.llr_clip)
    cap = config.max_frames if config.max_frames is not None else math.inf
    errors, iters = [], []
    next_frame = 0
    wave = max(1, config.threads)

    def block_ids(start):
        stop = start + config.batch_frames
        if cap != math.inf:
            stop = min(stop, int(cap))
        return list(range(start, stop))

    while True:
        blocks = []
        start = next_frame
        for _ in range(wave):
            ids = block_ids(start)
            if not ids:
                break
            blocks.append(ids)
            start = ids[-1] + 1
        if not blocks:
            break
        if executor is not None and len(blocks) > 1:
            results = list(executor.map(lambda ids: simulate_frames(config, point_index, ids, weights),
                                        blocks))
        else:
            results = [simulate_frames(config, point_index, ids, weights) for ids in blocks]
        stop = False
        for ids, (err, it) in zip(blocks, results):
            errors.extend(err.tolist())
            iters.extend(it.tolist())
            next_frame = ids[-1] + 1
            frame_errors = sum(1 for e in errors if e)
            if (frame_errors >= config.target_frame_errors
                    or len(errors) * code.k >= config.max_bits
                    or len(errors) >= cap):
                stop = True
                break
        if stop:
            break
    return BerPoint.from_frames(config.snr_db[point_index], errors, code.k, iters)


def run_bicm(config):
    """BER/FER for every SNR point of the configuration."""
    config.validate()
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as ex:
            return [run_point(config, i, ex) for i in range(len(config.snr_db))]
    return [run_point(config, i) for i in range(len(config.snr_db))]


def format_float(x):
    return repr(float(x))


def ber_csv(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BER_COLUMNS)
    for p in points:
        w.writerow([format_float(p.snr_db), format_float(p.ber), format_float(p.fer),
                    p.bits, p.frames, format_float(p.ci_halfwidth)])
    return buf.getvalue()


def _config_key(config):
    return hashlib.sha256(json.dumps(config.echo(), sort_keys=True).encode()).hexdigest()


def snr_sweep(config, out_dir, resume=True, extra_manifest=None):
    """Run (or resume) a sweep, writing ``ber.csv``, ``manifest.json`` and a checkpoint.

    The checkpoint is rewritten after every finished SNR point; a resumed
    run reuses finished points only when the configuration matches.
    """
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt_path = out / "checkpoint.json"
    key = _config_key(config)
    done = {}
    if resume and ckpt_path.exists():
        ckpt = json.loads(ckpt_path.read_text())
        if ckpt.get("config_key") == key:
            done = {int(i): BerPoint(**p) for i, p in ckpt["points"].items()}

    def save():
        doc = {"config_key": key, "points": {str(i): asdict(p) for i, p in sorted(done.items())}}
        tmp = ckpt_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, indent=1, sort_keys=True))
        tmp.replace(ckpt_path)

    ex = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        for i in range(len(config.snr_db)):
            if i in done:
                continue
            done[i] = run_point(config, i, ex)
            save()
    finally:
        if ex is not None:
            ex.shutdown()
    points = [done[i] for i in range(len(config.snr_db))]
    (out / "ber.csv").write_text(ber_csv(points))
    manifest = {
        "config": config.echo(),
        "info_bits_per_channel_use": config.info_rate,
        "nominal_info_rate": config.nominal_info_rate,
        "points": [asdict(p) for p in points],
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return points


def ber_crossing_db(points, target=1e-4):
    """SNR (dB) where the BER curve first drops to ``target``.

    Interpolates log10(BER) linearly between the bracketing points; when the
    lower point has no errors the crossing is taken at that point, which
    overestimates the SNR.  Returns ``inf`` if the target is never reached.
    """
    pts = sorted(points, key=lambda p: p.snr_db)
    for prev, cur in zip([None] + pts[:-1], pts):
        if cur.ber <= target:
            if prev is None or prev.ber <= target:
                return cur.snr_db
            if cur.ber == 0:
                return cur.snr_db
            a, b = math.log10(prev.ber), math.log10(cur.ber)
            t = (math.log10(target) - a) / (b - a)
            return prev.snr_db + t * (cur.snr_db - prev.snr_db)
    return math.inf


def is_waterfall_monotone(points):
    """BER non-increasing in SNR up to the reported confidence half-widths."""
    pts = sorted(points, key=lambda p: p.snr_db)
    return all(b.ber <= a.ber + a.ci_halfwidth + b.ci_halfwidth for a, b in zip(pts, pts[1:]))


__all__ = ["BicmConfig", "BerPoint", "ConfigError", "gray_label", "interleave", "deinterleave",
           "run_bicm", "run_point", "snr_sweep", "ber_crossing_db", "is_waterfall_monotone",
           "simulate_frames", "ber_csv"]
