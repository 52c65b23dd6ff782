"""Turnstile-stream sketches driven by a tree-structured hash PRG."""

from .errors import (BudgetError, ParameterError, SamplerFailure, SketchError,
                     StreamFormatError)
from .hashing import (KWiseHash, PairwiseHash, kwise_eval, kwise_new,
                      pairwise_eval, pairwise_new, sign_eval)
from .prg import HashPrg, UniformBlockSource, nisan_new, prg_new

__all__ = [
    "BudgetError", "ParameterError", "SamplerFailure", "SketchError",
    "StreamFormatError",
    "KWiseHash", "PairwiseHash", "kwise_eval", "kwise_new",
    "pairwise_eval", "pairwise_new", "sign_eval",
    "HashPrg", "UniformBlockSource", "nisan_new", "prg_new",
]
