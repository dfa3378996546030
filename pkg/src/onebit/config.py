"""Experiment configuration: YAML documents with a fixed, validated schema.

Example::

    array:
      M: 8
      N: 8
      theta_T_deg: 10      # or b_T: [[re, im], ...]
      theta_R_deg: 10      # or b_R: [[re, im], ...]
    K: 8
    snr_db: {start: -20, stop: 10, step: 1}   # or an explicit list
    seed: 0
    design: {method: auto, epsilon: 1.0e-6, oracle: false}
    rates: {K_list: [2, 4, 8], capacity_mode: candidate-reduced}
    ber: {codebook: null, code: null, max_frames: 2000}
    check: {sweep: 0, brute_force: true}

Unknown keys anywhere raise ``ConfigValidationError``.  SNR values are in
dB and angles in degrees; both are converted only at the point of use.
"""

import copy
import math

import numpy as np
import yaml

from .codebook import DEFAULT_BRUTE_FORCE_GUARD, EXACT_SEARCH_LIMIT, ALG_EPSILON
from .coded.ldpc import DEFAULT_MAX_ITER
from .core import ula_response
from .detector import DEFAULT_LLR_CLIP


class ConfigValidationError(ValueError):
    pass


DEFAULTS = {
    "array": {"M": 8, "N": 8, "theta_T_deg": 10.0, "theta_R_deg": 10.0, "b_T": None, "b_R": None},
    "K": 8,
    "snr_db": [],
    "seed": 0,
    "design": {
        "method": "auto",
        "epsilon": ALG_EPSILON,
        "oracle": False,
        "brute_force_guard": DEFAULT_BRUTE_FORCE_GUARD,
        "exact_limit": EXACT_SEARCH_LIMIT,
    },
    "rates": {
        "K_list": [2, 4, 8],
        "capacity_mode": "candidate-reduced",
        "tol": 1e-6,
        "max_iter": 10_000,
        "mi_method": "exact",
        "mc_samples": 100_000,
    },
    "ber": {
        "codebook": None,
        "code": None,
        "code_k": None,
        "max_iter": DEFAULT_MAX_ITER,
        "target_frame_errors": 100,
        "max_bits": 10**7,
        "max_frames": None,
        "batch_frames": 32,
        "llr_clip": DEFAULT_LLR_CLIP,
    },
    "check": {"sweep": 0, "brute_force": True, "M_max": 8},
}

CHOICES = {
    ("design", "method"): {"auto", "exact", "closed-form"},
    ("rates", "capacity_mode"): {"full", "candidate-reduced", "none"},
    ("rates", "mi_method"): {"exact", "monte-carlo"},
}


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigValidationError(f"{path or 'config'}: expected a mapping")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigValidationError(f"unknown key(s): {', '.join(where + k for k in unknown)}")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], val or {}, f"{path}.{key}" if path else key)
        else:
            out[key] = val
    return out


def _snr_grid(value):
    if isinstance(value, dict):
        if set(value) != {"start", "stop", "step"}:
            raise ConfigValidationError("snr_db range needs exactly start, stop and step")
        start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigValidationError("snr_db range must have step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        # round to kill accumulated float noise in the grid
        return [round(start + i * step, 10) for i in range(count)]
    if isinstance(value, (int, float)):
        value = [value]
    if not isinstance(value, list):
        raise ConfigValidationError("snr_db must be a list or a {start, stop, step} range")
    try:
        grid = [float(x) for x in value]
    except (TypeError, ValueError):
        raise ConfigValidationError("snr_db entries must be numbers") from None
    if not all(math.isfinite(x) for x in grid):
        raise ConfigValidationError("snr_db entries must be finite")
    return grid


def _complex_list(val, name):
    try:
        arr = np.array([complex(float(a), float(b)) for a, b in val])
    except (TypeError, ValueError):
        raise ConfigValidationError(f"{name} must be a list of [re, im] pairs") from None
    if arr.size == 0 or np.max(np.abs(np.abs(arr) - 1)) > 1e-9:
        raise ConfigValidationError(f"{name} entries must have unit magnitude")
    return arr


def _positive_int(val, name, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, int) or val < 1:
        raise ConfigValidationError(f"{name} must be a positive integer")
    return val


class ExperimentConfig:
    """Validated configuration; ``data`` holds the fully-resolved document."""

    def __init__(self, data):
        self.data = data

    @classmethod
    def from_dict(cls, doc, seed=None):
        data = _merge(DEFAULTS, doc or {}, "")
        if seed is not None:
            data["seed"] = seed
        data["snr_db"] = _snr_grid(data["snr_db"])
        arr = data["array"]
        if arr["b_T"] is not None:
            arr["M"] = len(_complex_list(arr["b_T"], "array.b_T"))
            arr["theta_T_deg"] = None
        if arr["b_R"] is not None:
            arr["N"] = len(_complex_list(arr["b_R"], "array.b_R"))
            arr["theta_R_deg"] = None
        for key in ("M", "N"):
            _positive_int(arr[key], f"array.{key}")
        for key in ("theta_T_deg", "theta_R_deg"):
            if arr[key] is not None:
                if isinstance(arr[key], bool) or not isinstance(arr[key], (int, float)):
                    raise ConfigValidationError(f"array.{key} must be a number")
                arr[key] = float(arr[key])
        k = _positive_int(data["K"], "K")
        if k < 2 or k & (k - 1):
            raise ConfigValidationError("K must be a power of 2 >= 2")
        if isinstance(data["seed"], bool) or not isinstance(data["seed"], int) or data["seed"] < 0:
            raise ConfigValidationError("seed must be a non-negative integer")
        for (sec, key), allowed in CHOICES.items():
            if data[sec][key] not in allowed:
                raise ConfigValidationError(
                    f"{sec}.{key} must be one of {sorted(allowed)}, got {data[sec][key]!r}")
        for kk in data["rates"]["K_list"]:
            _positive_int(kk, "rates.K_list entry")
        ber = data["ber"]
        for key in ("max_iter", "target_frame_errors", "max_bits", "batch_frames"):
            _positive_int(ber[key], f"ber.{key}")
        _positive_int(ber["max_frames"], "ber.max_frames", allow_none=True)
        _positive_int(ber["code_k"], "ber.code_k", allow_none=True)
        if not isinstance(data["check"]["sweep"], int) or data["check"]["sweep"] < 0:
            raise ConfigValidationError("check.sweep must be a non-negative integer")
        _positive_int(data["check"]["M_max"], "check.M_max")
        return cls(data)

    @classmethod
    def from_yaml(cls, text, seed=None):
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigValidationError(f"cannot parse config: {exc}") from None
        return cls.from_dict(doc, seed)

    @classmethod
    def load(cls, path, seed=None):
        with open(path, encoding="utf-8") as fh:
            return cls.from_yaml(fh.read(), seed)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def m(self):
        return self.data["array"]["M"]

    @property
    def n(self):
        return self.data["array"]["N"]

    @property
    def k(self):
        return self.data["K"]

    @property
    def seed(self):
        return self.data["seed"]

    @property
    def snr_db(self):
        return self.data["snr_db"]

    @property
    def b_t(self):
        arr = self.data["array"]
        if arr["b_T"] is not None:
            return _complex_list(arr["b_T"], "array.b_T")
        return ula_response(arr["M"], math.radians(arr["theta_T_deg"]))

    @property
    def b_r(self):
        arr = self.data["array"]
        if arr["b_R"] is not None:
            return _complex_list(arr["b_R"], "array.b_R")
        return ula_response(arr["N"], math.radians(arr["theta_R_deg"]))

    def echo(self):
        """Resolved configuration, defaults included, safe for JSON."""
        return copy.deepcopy(self.data)
