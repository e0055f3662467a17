"""Non-interactive correlation distillation over large alphabets."""

__version__ = "0.1.0"

from .noise import NoiseModel, FunctionTable, apply_noise_operator, correlated_expectation  # noqa: E402
from .sets import Cylinder, Explicit, HammingBall, evaluate, m_epsilon  # noqa: E402
from .protocol import build_center_set, build_protocol, verify_protocol  # noqa: E402
from .bounds import min_alphabet, sigma, solve_p  # noqa: E402
from .gaussian import bivariate_orthant, hamming_limit_m, lemma_exponent  # noqa: E402

__all__ = [
    "NoiseModel", "FunctionTable", "apply_noise_operator", "correlated_expectation",
    "Cylinder", "Explicit", "HammingBall", "evaluate", "m_epsilon",
    "build_center_set", "build_protocol", "verify_protocol",
    "min_alphabet", "sigma", "solve_p",
    "bivariate_orthant", "hamming_limit_m", "lemma_exponent",
]
