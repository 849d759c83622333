"""The five intrinsic verifier components. Every function returns a value in [0, 1]."""

import math
import re
from typing import NamedTuple

import numpy as np

from .extract import NUMBER, find_answer, numeric_value, scan_numbers

# distinct hits are soft-thresholded at 3
STRUCT_KEYWORDS = (
    "step",
    "therefore",
    "thus",
    "compute",
    "calculate",
    "because",
    "hence",
    "so",
    "answer",
    "solve",
    "substitute",
    "simplify",
    "equation",
    "result",
)
_WORD = re.compile(r"[a-z]+")
_LETTER_CHOICE = re.compile(r"(?<![A-Za-z])\(?([A-H])\)?(?![A-Za-z])")

SPECIAL_TOKENS = ("<|endoftext|>", "<|eot_id|>")
MASK_TOKEN = "<|mdm_mask|>"


def keyword_hits(text, vocabulary=STRUCT_KEYWORDS):
    words = set(_WORD.findall(text.lower()))
    return sum(1 for k in vocabulary if k in words)


def alnum_density(text):
    if not text:
        return 0.0
    good = sum(1 for c in text if c.isalnum() or c.isspace())
    return good / len(text)


def has_delimiter(text):
    return find_answer(text) is not None


def letter_choice(text):
    """The chosen option letter A-H: cascade answer first, else the last standalone letter."""
    a = find_answer(text)
    if a is not None and a.kind == "letter":
        return a.value
    last = None
    for m in _LETTER_CHOICE.finditer(text):
        last = m.group(1)
    return last


def s_struct(text, task_kind="math"):
    """Structural completeness.

    math: ``0.40 * min(h/3, 1) + 0.35 * delimiter + 0.25 * min(r/0.5, 1)``.
    mc: ``0.5 * letter + 0.25 * min(h/3, 1) + 0.25 * min(r/0.5, 1)``.
    sudoku: 1 when the text carries at least 81 digits.
    """
    if task_kind == "sudoku":
        return 1.0 if sum(c.isdigit() for c in text) >= 81 else 0.0
    kw = min(keyword_hits(text) / 3.0, 1.0)
    dens = min(alnum_density(text) / 0.5, 1.0)
    if task_kind == "mc":
        return 0.5 * (letter_choice(text) is not None) + 0.25 * kw + 0.25 * dens
    return 0.40 * kw + 0.35 * has_delimiter(text) + 0.25 * dens


# -- arithmetic consistency -------------------------------------------------

_OP = r"\\{1,2}times|\\{1,2}cdot|\\{1,2}div|[+\-−–*×·/÷]|(?<=\s)[xX](?=\s)"
_EQUALITY = re.compile(
    r"(?<![\d.])(" + NUMBER + r")\s*(" + _OP + r")\s*(" + NUMBER + r")\s*=\s*([-−]?(?:" + NUMBER + r"))"
)
_FRAC_EQUALITY = re.compile(
    r"\\{1,2}d?frac\s*\{\s*(" + NUMBER + r")\s*\}\s*\{\s*(" + NUMBER + r")\s*\}\s*=\s*([-−]?(?:" + NUMBER + r"))"
)
_CHAIN_VALUE = re.compile(r"=\s*([-−]?(?:" + NUMBER + r"))")
_OPERATOR_CHARS = set("+-−–*×·/÷^=\\")
_OP_NAMES = {"+": "+", "-": "-", "−": "-", "–": "-", "*": "×", "×": "×", "·": "×", "x": "×", "X": "×", "/": "÷", "÷": "÷"}


class Equality(NamedTuple):
    a: float
    op: str  # one of "+", "-", "×", "÷"
    b: float
    c: float
    span: tuple

    def holds(self, rel=1e-6, abs_tol=1e-4):
        if self.op == "+":
            v = self.a + self.b
        elif self.op == "-":
            v = self.a - self.b
        elif self.op == "×":
            v = self.a * self.b
        else:
            if self.b == 0:
                return False
            v = self.a / self.b
        return abs(v - self.c) <= max(abs(self.c) * rel, abs_tol)


def _num(s):
    return float(s.replace(",", "").replace("−", "-"))


def _op_name(raw):
    raw = raw.lstrip("\\")
    if raw in ("times", "cdot"):
        return "×"
    if raw == "div":
        return "÷"
    return _OP_NAMES[raw]


def _compound(text, start, end):
    """True when the match is glued to a larger expression on either side."""
    if start > 0 and (text[start - 1].isalnum() or text[start - 1] in ".)]}"):
        return True
    j = start - 1
    while j >= 0 and text[j].isspace():
        j -= 1
    if j >= 0 and (text[j] in _OPERATOR_CHARS or text[j] in ")]}"):
        return True
    k = end
    if k < len(text) and (text[k].isdigit() or text[k] in "({["):
        return True
    while k < len(text) and text[k].isspace():
        k += 1
    if k < len(text) and text[k] in "*×·/÷^(":
        return True
    return False


def parse_equalities(text):
    """Explicit single-operation equalities ``a op b = c``, in source order.

    Recognises ASCII and unicode operators plus ``\\times``, ``\\cdot``,
    ``\\div`` and ``\\frac{a}{b} = c``. Anything glued to a larger expression
    (parentheses, another operator) is skipped rather than guessed at.
    """
    found = []
    pos = 0
    while True:
        m = _EQUALITY.search(text, pos)
        if m is None:
            break
        if _compound(text, m.start(), m.end()):
            pos = m.start() + 1
            continue
        found.append(Equality(_num(m.group(1)), _op_name(m.group(2)), _num(m.group(3)), _num(m.group(4)), m.span()))
        pos = m.start(4)
    for m in _FRAC_EQUALITY.finditer(text):
        found.append(Equality(_num(m.group(1)), "÷", _num(m.group(2)), _num(m.group(3)), m.span()))
    found.sort(key=lambda e: e.span)
    return found


def chain_violation(text):
    """Any consecutive ``= value`` ratio outside (1e-3, 1e3); zero values are skipped."""
    vals = [_num(m.group(1)) for m in _CHAIN_VALUE.finditer(text)]
    vals = [v for v in vals if v != 0.0]
    for prev, cur in zip(vals, vals[1:]):
        r = abs(cur / prev)
        if not 1e-3 < r < 1e3:
            return True
    return False


def s_consist(text, equalities=None):
    eqs = parse_equalities(text) if equalities is None else equalities
    if not eqs:
        return 0.5
    score = sum(e.holds() for e in eqs) / len(eqs)
    if chain_violation(text):
        score *= 0.5
    return score


# -- reachability -------------------------------------------------------------


def s_reach(text, answer=None):
    """1.0 traceable answer, 0.3 answer without support in the prefix, 0.2 no answer."""
    a = find_answer(text) if answer is None else answer
    if a is None:
        return 0.2
    prefix = text[: a.start]
    if a.kind == "numeric":
        target = numeric_value(a.value)
        if any(abs(v - target) <= 1e-6 for v in scan_numbers(prefix)):
            return 1.0
        return 0.3
    return 1.0 if a.value.lower() in prefix.lower() else 0.3


# -- confidence ---------------------------------------------------------------


def s_conf(confidences=None, logits=None, token_ids=None):
    """Mean per-token probability over the generated region; 0.5 when unavailable.

    ``confidences`` are probabilities (clipped to [0, 1]). Raw ``logits`` of
    shape ``(|G|, V)`` are clamped to [-100, 100] and softmaxed; the probability
    of ``token_ids`` (or the top-1 when absent) is averaged.
    """
    if logits is not None:
        z = np.clip(np.asarray(logits, dtype=np.float64), -100.0, 100.0)
        if z.size == 0:
            return 0.5
        z = np.atleast_2d(z)
        p = np.exp(z - z.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        probs = p.max(axis=1) if token_ids is None else p[np.arange(p.shape[0]), np.asarray(token_ids)]
        return float(np.clip(probs.mean(), 0.0, 1.0))
    if confidences is None:
        return 0.5
    c = np.asarray(confidences, dtype=np.float64).ravel()
    c = c[np.isfinite(c)]
    if c.size == 0:
        return 0.5
    return float(np.clip(np.clip(c, 0.0, 1.0).mean(), 0.0, 1.0))


# -- non-degeneracy -------------------------------------------------------------


class DegeneracyStats(NamedTuple):
    words: int
    special_fraction: float
    mask_fraction: float
    bigram_ratio: float
    trigram_ratio: float


def _words(text, specials):
    for tok in specials:
        if tok in text:
            text = text.replace(tok, f" {tok} ")
    return text.split()


def degeneracy_stats(text, special_tokens=SPECIAL_TOKENS, mask_token=MASK_TOKEN):
    words = _words(text, tuple(special_tokens) + ((mask_token,) if mask_token else ()))
    n = len(words)
    special = sum(1 for w in words if w in special_tokens)
    masks = sum(1 for w in words if w == mask_token) if mask_token else 0
    bi = list(zip(words, words[1:]))
    tri = list(zip(words, words[1:], words[2:]))
    return DegeneracyStats(
        n,
        special / n if n else 0.0,
        masks / n if n else 0.0,
        len(set(bi)) / len(bi) if bi else 1.0,
        len(set(tri)) / len(tri) if tri else 1.0,
    )


def s_ndegen(text, special_tokens=SPECIAL_TOKENS, mask_token=MASK_TOKEN, stats=None):
    st = degeneracy_stats(text, special_tokens, mask_token) if stats is None else stats
    if st.words == 0:
        return 0.0
    if st.special_fraction > 0.20:
        return 0.0
    if st.mask_fraction > 0.15:
        return 0.05
    if st.words < 8:
        return 0.2
    if st.words > 12:
        if st.bigram_ratio < 0.15:
            return 0.05
        if st.bigram_ratio < 0.30:
            return 0.3
    if st.words > 30 and st.trigram_ratio < 0.25:
        return 0.2
    return 1.0


def clamp01(x):
    if not math.isfinite(x):
        return 0.0
    return min(1.0, max(0.0, x))
