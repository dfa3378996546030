"""One-bit MIMO transceiver design, detection, rates and coded simulation."""

__version__ = "0.1.0"

from .core import (SnrConfig, db_to_linear, linear_to_db, log_q, make_rng, q_function,
                   sign_quantize, simulate_linear, simulate_onebit, ula_response)
from .codebook import (Codebook, candidate_set, candidate_symbols, check_propositions,
                       design_codebook, gray_label, select_codebook)
from .detector import bit_llrs, detect_ml, detect_mrc, ml_weights
from .rates import (blahut_arimoto, blahut_arimoto_dmc, capacity_gap_db, exact_mi,
                    linear_capacity, mc_mi, onebit_capacity)

__all__ = [
    "SnrConfig", "db_to_linear", "linear_to_db", "log_q", "make_rng", "q_function",
    "sign_quantize", "simulate_linear", "simulate_onebit", "ula_response",
    "Codebook", "candidate_set", "candidate_symbols", "check_propositions", "design_codebook",
    "gray_label", "select_codebook",
    "bit_llrs", "detect_ml", "detect_mrc", "ml_weights",
    "blahut_arimoto", "blahut_arimoto_dmc", "capacity_gap_db", "exact_mi", "linear_capacity",
    "mc_mi", "onebit_capacity",
]
