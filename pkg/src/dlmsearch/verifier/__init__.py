"""Ground-truth-free composite verifier and token-level rewards."""

from .components import (
    MASK_TOKEN,
    SPECIAL_TOKENS,
    STRUCT_KEYWORDS,
    parse_equalities,
    s_conf,
    s_consist,
    s_ndegen,
    s_reach,
    s_struct,
)
from .composite import ScoringContext, VerifierReport, composite_of, score
from .constraints import aime_constraint, countdown_constraint, mc_constraint, sudoku_constraint
from .extract import extract_answer, find_answer
from .profiles import PROFILES, ProfileError, WeightProfile, get_profile
from .rewards import PatternReward, TableReward, TargetSimilarity, TextVerifier, TokenVerifier, default_verifier, terminal_values

__all__ = [
    "MASK_TOKEN",
    "PROFILES",
    "SPECIAL_TOKENS",
    "STRUCT_KEYWORDS",
    "PatternReward",
    "ProfileError",
    "ScoringContext",
    "TableReward",
    "TargetSimilarity",
    "TextVerifier",
    "TokenVerifier",
    "VerifierReport",
    "WeightProfile",
    "aime_constraint",
    "composite_of",
    "countdown_constraint",
    "default_verifier",
    "extract_answer",
    "find_answer",
    "get_profile",
    "mc_constraint",
    "parse_equalities",
    "s_conf",
    "s_consist",
    "s_ndegen",
    "s_reach",
    "s_struct",
    "score",
    "sudoku_constraint",
    "terminal_values",
]
