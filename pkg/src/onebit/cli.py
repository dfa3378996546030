"""Command-line entry point: ``onebit {design,rates,ber,check}``.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 bound-check
failure.  Every output file depends only on the config file and the seed.
"""

import argparse
import csv
import hashlib
import io
import json
import math
from pathlib import Path
import sys

from . import __version__
from .codebook import (Codebook, GuardError, InfeasibleError, brute_force_symbols,
                       candidate_set, candidate_symbols, check_propositions, code_to_hex,
                       design_codebook, select_codebook)
from .coded.bicm import BicmConfig, ConfigError, snr_sweep
from .coded.ldpc import AlistError, RankError, default_code, load_parity
from .config import ConfigValidationError, ExperimentConfig
from .core import db_to_linear, make_rng, ula_response
from .rates import (EnumerationError, exact_mi, input_alphabet, linear_capacity, mc_mi,
                    blahut_arimoto)

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_BOUND = 0, 1, 2, 3
VALIDATION_ERRORS = (ConfigValidationError, ConfigError, AlistError, RankError, GuardError,
                     InfeasibleError, EnumerationError)
RATE_COLUMNS = ["curve", "snr_db", "rate_bits", "method", "stderr", "converged"]


class InputFileError(ValueError):
    pass


def _f(x):
    return "" if x is None else repr(float(x))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_manifest(out, command, cfg, extra=None):
    doc = {"command": command, "version": __version__, "config": cfg.echo()}
    if extra:
        doc.update(extra)
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# subcommands

def cmd_design(cfg, out, args):
    b_t = cfg.b_t
    d = cfg["design"]
    cs = candidate_set(b_t, d["epsilon"])
    symset = candidate_symbols(b_t, d["epsilon"])
    theta = cfg["array"]["theta_T_deg"]
    if d["method"] == "exact":
        cb = select_codebook(symset, cfg.k, d["exact_limit"], b_t=b_t, theta_t_deg=theta)
    else:
        cb = design_codebook(b_t, cfg.k, d["method"], theta_t_deg=theta, eps=d["epsilon"])
    (out / "codebook.json").write_text(cb.to_json())
    rows = [[i, code_to_hex(c, cfg.m), _f(s.real), _f(s.imag), _f(abs(s)), _f(p)]
            for i, (c, s, p) in enumerate(zip(cs.codes, symset.symbols, cs.phases))]
    (out / "candidates.csv").write_text(
        _csv_text(["index", "tx", "re", "im", "abs", "phase_rad"], rows))
    files = ["codebook.json", "candidates.csv"]
    status = EXIT_OK
    extra = {"n_candidates": len(symset), "min_distance": cb.min_distance,
             "psk_deviation_deg": cb.psk_deviation_deg(), "search": cb.meta.get("search")}
    if cfg.m <= d["brute_force_guard"]:
        full = brute_force_symbols(b_t, d["brute_force_guard"])
        cand = set(int(c) for c in cs.codes)
        rows = [[code_to_hex(c, cfg.m), _f(s.real), _f(s.imag), int(int(c) in cand)]
                for c, s in zip(full.codes, full.symbols)]
        (out / "scatter.csv").write_text(_csv_text(["tx", "re", "im", "candidate"], rows))
        files.append("scatter.csv")
    if d["oracle"]:
        ref = select_codebook(symset, cfg.k, exact_limit=math.inf, b_t=b_t, theta_t_deg=theta)
        gap = ref.min_distance - cb.min_distance
        extra["oracle"] = {"exact_min_distance": ref.min_distance, "gap": gap,
                           "passed": bool(gap <= 1e-9)}
        if gap > 1e-9:
            status = EXIT_BOUND
    extra["files"] = files
    _write_manifest(out, "design", cfg, extra)
    print(f"K={cfg.k} codebook from {len(symset)} candidates, "
          f"min distance {cb.min_distance:.6g} ({cb.meta.get('search')})")
    if "oracle" in extra:
        print("oracle: " + ("PASS" if extra["oracle"]["passed"] else "FAIL")
              + f" (exact {extra['oracle']['exact_min_distance']:.12g})")
    return status


def cmd_rates(cfg, out, args):
    b_t, b_r = cfg.b_t, cfg.b_r
    r = cfg["rates"]
    rows = []
    for k in r["K_list"]:
        cb = design_codebook(b_t, k, theta_t_deg=cfg["array"]["theta_T_deg"],
                             eps=cfg["design"]["epsilon"])
        for i, snr_db in enumerate(cfg.snr_db):
            rho = db_to_linear(snr_db)
            if r["mi_method"] == "exact":
                res = exact_mi(cb, b_r, rho)
            else:
                res = mc_mi(cb, b_r, rho, r["mc_samples"], make_rng(cfg.seed, k, i))
            rows.append([f"mi_K{k}", _f(snr_db), _f(res.rate_bits), res.method,
                         _f(res.stderr), int(res.converged)])
    if r["capacity_mode"] != "none":
        inputs = input_alphabet(b_t, r["capacity_mode"])
        for snr_db in cfg.snr_db:
            res = blahut_arimoto(inputs, b_r, db_to_linear(snr_db), r["tol"], r["max_iter"])
            rows.append([f"capacity_{r['capacity_mode']}", _f(snr_db), _f(res.rate_bits),
                         res.method, _f(res.upper_bound - res.rate_bits), int(res.converged)])
    for snr_db in cfg.snr_db:
        res = linear_capacity(cfg.m, cfg.n, db_to_linear(snr_db))
        rows.append(["linear", _f(snr_db), _f(res.rate_bits), res.method, _f(0.0), 1])
    (out / "rates.csv").write_text(_csv_text(RATE_COLUMNS, rows))
    _write_manifest(out, "rates", cfg, {"files": ["rates.csv"]})
    print(f"wrote {len(rows)} rate points to {out / 'rates.csv'}")
    return EXIT_OK


def _load_codebook(cfg):
    path = cfg["ber"]["codebook"]
    if path is None:
        cb = design_codebook(cfg.b_t, cfg.k, cfg["design"]["method"]
                             if cfg["design"]["method"] != "exact" else "auto",
                             theta_t_deg=cfg["array"]["theta_T_deg"],
                             eps=cfg["design"]["epsilon"])
        return cb, {"source": "designed", "sha256": hashlib.sha256(cb.to_json().encode()).hexdigest()}
    p = Path(path)
    if not p.is_file():
        raise InputFileError(f"codebook file not found: {path}")
    try:
        cb = Codebook.from_json(p.read_text())
    except (ValueError, KeyError, TypeError) as exc:
        raise InputFileError(f"invalid codebook file {path}: {exc}") from None
    if cb.k != cfg.k:
        raise InputFileError(f"codebook has K={cb.k} but the config says K={cfg.k}")
    return cb, {"source": str(path), "sha256": _sha256(p)}


def cmd_ber(cfg, out, args):
    cb, cb_info = _load_codebook(cfg)
    b = cfg["ber"]
    if b["code"] is None:
        code = default_code()
    else:
        if not Path(b["code"]).is_file():
            raise InputFileError(f"parity-check file not found: {b['code']}")
        code = load_parity(b["code"], k=b["code_k"])
    bcfg = BicmConfig(cb, code, cfg.b_r, cfg.snr_db, seed=cfg.seed, max_iter=b["max_iter"],
                      target_frame_errors=b["target_frame_errors"], max_bits=b["max_bits"],
                      max_frames=b["max_frames"], batch_frames=b["batch_frames"],
                      threads=args.threads, llr_clip=b["llr_clip"])
    points = snr_sweep(bcfg, out, resume=not args.no_resume,
                       extra_manifest={"command": "ber", "version": __version__,
                                       "experiment": cfg.echo(), "codebook_file": cb_info})
    for p in points:
        print(f"{p.snr_db:8.3f} dB  BER {p.ber:.3e}  FER {p.fer:.3e}  frames {p.frames}")
    return EXIT_OK


def _random_config(rng, m_max):
    m = int(rng.integers(1, m_max + 1))
    theta = float(rng.uniform(-90.0, 90.0))
    return m, theta


def cmd_check(cfg, out, args):
    c = cfg["check"]
    guard = cfg["design"]["brute_force_guard"]
    cases = [(cfg.m, cfg["array"]["theta_T_deg"], cfg.b_t)]
    if c["sweep"]:
        rng = make_rng(cfg.seed)
        cases = []
        for _ in range(c["sweep"]):
            m, theta = _random_config(rng, c["M_max"])
            cases.append((m, theta, ula_response(m, math.radians(theta))))
    reports = []
    lines = []
    for m, theta, b_t in cases:
        rep = check_propositions(b_t, brute_force=c["brute_force"] and m <= guard, max_m=guard)
        d = rep.to_dict()
        d["theta_T_deg"] = theta
        reports.append(d)
        tag = "PASS" if rep.passed else "FAIL"
        theta_txt = "custom" if theta is None else f"{theta:9.4f}"
        lines.append(f"{tag}  M={m:<3d} theta_T={theta_txt}  |X|={rep.n_candidates:<3d} "
                     f"min|s|={rep.min_abs:.6f}>{rep.lower_bound:.6f}  "
                     f"max|s|={rep.max_abs:.6f}>={rep.max_bound:.6f}"
                     + ("" if rep.membership_pass is None
                        else f"  s_max member={'yes' if rep.membership_pass else 'NO'}"))
    failed = sum(1 for r in reports if not r["passed"])
    (out / "check.json").write_text(
        json.dumps({"reports": reports, "failed": failed}, indent=2, sort_keys=True) + "\n")
    (out / "check.txt").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "check", cfg, {"files": ["check.json", "check.txt"]})
    print("\n".join(lines))
    print(f"{len(reports) - failed}/{len(reports)} passed")
    return EXIT_BOUND if failed else EXIT_OK


COMMANDS = {"design": cmd_design, "rates": cmd_rates, "ber": cmd_ber, "check": cmd_check}


def build_parser():
    p = argparse.ArgumentParser(prog="onebit", description="One-bit MIMO transceiver experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in [("design", "design a codebook from the candidate set"),
                            ("rates", "mutual information and capacity curves"),
                            ("ber", "coded BICM bit error rate sweep"),
                            ("check", "beamforming-gain bound checks")]:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")
        sp.add_argument("--out-dir", default=None, help=f"output directory (default out/{name})")
        if name == "ber":
            sp.add_argument("--no-resume", action="store_true",
                            help="ignore an existing checkpoint")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigValidationError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigValidationError("--seed must be non-negative")
        if not Path(args.config).is_file():
            raise InputFileError(f"config file not found: {args.config}")
        cfg = ExperimentConfig.load(args.config, seed=args.seed)
        out = Path(args.out_dir if args.out_dir else Path("out") / args.command)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args)
    except VALIDATION_ERRORS + (InputFileError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
