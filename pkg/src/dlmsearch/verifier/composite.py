"""The composite score ``sum_k alpha_k s_k + alpha_c s_constraint``."""

from dataclasses import dataclass, field
from typing import Optional

from . import components as C
from .constraints import aime_constraint, countdown_constraint, mc_constraint, sudoku_constraint
from .extract import find_answer
from .profiles import COMPONENTS, get_profile


@dataclass(frozen=True)
class ScoringContext:
    """Everything the verifier may look at besides the output itself.

    There is deliberately no slot for a reference answer.
    """

    input_text: str = ""
    confidences: Optional[tuple] = None
    profile: object = "GSM8K"
    special_tokens: tuple = C.SPECIAL_TOKENS
    mask_token: str = C.MASK_TOKEN

    def __post_init__(self):
        object.__setattr__(self, "profile", get_profile(self.profile))
        if self.confidences is not None:
            object.__setattr__(self, "confidences", tuple(float(c) for c in self.confidences))


@dataclass(frozen=True)
class VerifierReport:
    s_struct: float
    s_consist: float
    s_reach: float
    s_conf: float
    s_ndegen: float
    s_constraint: float
    composite: float
    profile: str
    details: dict = field(default_factory=dict, compare=False)

    def components(self):
        return (self.s_struct, self.s_consist, self.s_reach, self.s_conf, self.s_ndegen)

    def to_dict(self):
        out = {f"s_{k}": v for k, v in zip(COMPONENTS, self.components())}
        out.update(s_constraint=self.s_constraint, composite=self.composite, profile=self.profile, details=self.details)
        return out


def constraint_score(text, ctx):
    kind = ctx.profile.constraint
    if kind == "countdown":
        return countdown_constraint(text, ctx.input_text)
    if kind == "sudoku":
        return sudoku_constraint(text, ctx.input_text)
    if kind == "mc":
        return mc_constraint(text)
    if kind == "aime":
        return aime_constraint(text)
    return 0.0


def score(text, ctx=None):
    """Score ``text`` under ``ctx`` and return a :class:`VerifierReport`.

    Total over arbitrary strings; each component is evaluated once.
    """
    if ctx is None:
        ctx = ScoringContext()
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    prof = ctx.profile
    answer = find_answer(text)
    eqs = C.parse_equalities(text)
    stats = C.degeneracy_stats(text, ctx.special_tokens, ctx.mask_token)

    parts = (
        C.s_struct(text, prof.task_kind),
        C.s_consist(text, eqs),
        C.s_reach(text, answer),
        C.s_conf(ctx.confidences),
        C.s_ndegen(text, stats=stats),
    )
    parts = tuple(C.clamp01(p) for p in parts)
    s_c = C.clamp01(constraint_score(text, ctx)) if prof.alpha_c > 0 or prof.constraint != "none" else 0.0
    composite = sum(a * s for a, s in zip(prof.alpha, parts)) + prof.alpha_c * s_c
    details = {
        "answer": None if answer is None else {
            "value": answer.value, "kind": answer.kind, "level": answer.level, "start": answer.start
        },
        "equalities": [
            {"a": e.a, "op": e.op, "b": e.b, "c": e.c, "span": list(e.span), "holds": e.holds()} for e in eqs
        ],
        "words": stats.words,
        "bigram_ratio": stats.bigram_ratio,
        "trigram_ratio": stats.trigram_ratio,
    }
    return VerifierReport(*parts, s_c, C.clamp01(composite), prof.name, details)


def composite_of(components, s_constraint, profile):
    prof = get_profile(profile)
    return sum(a * s for a, s in zip(prof.alpha, components)) + prof.alpha_c * s_constraint
