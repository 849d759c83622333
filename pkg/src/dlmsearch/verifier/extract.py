"""Final-answer extraction and number scanning.

All patterns are bounded so a pass over the text stays linear in its length.
"""

import bisect
import re
from typing import NamedTuple, Optional

# bounded spans keep pathological inputs (unclosed tags, deep nesting) linear
_MAX_ANSWER = 512

_BOXED = re.compile(r"\\boxed\s*\{")
_BRACE = re.compile(r"[{}]")
_TAG_OPEN = re.compile(r"<answer>", re.IGNORECASE)
_TAG_CLOSE = re.compile(r"</answer>", re.IGNORECASE)
_HASHES = re.compile(r"####[ \t]*([^\n]{0,200})")
_ANSWER_IS = re.compile(r"\banswer\s*(?:is\b|=)\s*:?\s*(\S{1,64})", re.IGNORECASE)

_LETTER = re.compile(r"\(?([A-H])\)?")
_TEXT_WRAP = re.compile(r"\\(?:text|mathrm|textbf|mathbf)\s*\{([^{}]*)\}")
_FRAC = re.compile(r"\\d?frac\s*\{([^{}]*)\}\s*\{([^{}]*)\}")

_PLAIN = re.compile(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d{1,3})?")
NUMBER = r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+"
_NUMBER_SCAN = re.compile(
    r"\\d?frac\s*\{\s*(" + NUMBER + r")\s*\}\s*\{\s*(" + NUMBER + r")\s*\}"
    r"|(?<![\d.])(-?)(" + NUMBER + r")(?:\s*/\s*(" + NUMBER + r"))?(%?)"
)


class Answer(NamedTuple):
    value: str
    kind: str  # "numeric" | "symbolic" | "letter"
    start: int  # offset of the answer delimiter; the reasoning prefix ends here
    level: str  # which delimiter matched


def _boxed(text):
    """Last ``\\boxed{...}`` content (balanced braces) and its start offset."""
    opens = list(_BOXED.finditer(text))
    if not opens:
        return None
    # one pass over the braces pairs every "{" with its closing "}"
    close, stack = {}, []
    for m in _BRACE.finditer(text):
        if m.group() == "{":
            stack.append(m.start())
        elif stack:
            close[stack.pop()] = m.start()
    for m in reversed(opens):
        end = close.get(m.end() - 1)
        if end is not None and end - m.end() <= _MAX_ANSWER:
            return text[m.end() : end], m.start()
    return None


def _tag(text):
    """Content of the last ``<answer>...</answer>`` pair (nearest opening tag)."""
    closes = [m.start() for m in _TAG_CLOSE.finditer(text)]
    if not closes:
        return None
    opens = [m for m in _TAG_OPEN.finditer(text)]
    starts = [m.start() for m in opens]
    for c in reversed(closes):
        i = bisect.bisect_left(starts, c) - 1
        if i >= 0 and c - opens[i].end() <= _MAX_ANSWER and opens[i].end() <= c:
            return text[opens[i].end() : c], opens[i].start()
    return None


def _last(pattern, text):
    last = None
    for m in pattern.finditer(text):
        last = (m.group(1), m.start())
    return last


def _clean(raw):
    s = raw.strip()
    s = s.strip("$").strip()
    s = re.sub(r"^\\\(|\\\)$", "", s).strip()
    return s


def numeric_value(s):
    """Decimal value of an answer string, or ``None``.

    Strips thousands separators, ``$``, ``\\text{}`` wrappers and a trailing
    percent sign; understands ``a/b`` and ``\\frac{a}{b}``.
    """
    s = _TEXT_WRAP.sub(r"\1", s)
    s = s.replace("\\!", "").replace("\\,", "").replace("$", "").replace(",", "").strip()
    s = s.rstrip(".").strip()
    if s.endswith("%"):
        s = s[:-1].strip()
    m = _FRAC.fullmatch(s)
    if m:
        a, b = numeric_value(m.group(1)), numeric_value(m.group(2))
        return a / b if a is not None and b not in (None, 0) else None
    if re.fullmatch(r"[-+−]?\d+(?:\.\d+)?\s*/\s*\d+(?:\.\d+)?", s):
        a, b = re.split(r"\s*/\s*", s.replace("−", "-"))
        return float(a) / float(b) if float(b) != 0 else None
    s = s.replace("−", "-")
    if not _PLAIN.fullmatch(s):
        return None
    return float(s)


def _classify(value):
    if _LETTER.fullmatch(value):
        return "letter"
    if numeric_value(value) is not None:
        return "numeric"
    return "symbolic"


def find_answer(text) -> Optional[Answer]:
    """Final answer by the cascade ``\\boxed{}`` > ``<answer>`` > ``####`` > "answer is/=".

    The first level with a match wins; within a level the last match wins.
    """
    hit = _boxed(text)
    level = "boxed"
    if hit is None:
        hit, level = _tag(text), "tag"
    if hit is None:
        hit, level = _last(_HASHES, text), "hashes"
    if hit is None:
        hit, level = _last(_ANSWER_IS, text), "answer_is"
        if hit is not None:
            hit = (hit[0].rstrip(".,;:!?"), hit[1])
    if hit is None:
        return None
    value = _clean(hit[0])
    if not value:
        return None
    kind = _classify(value)
    if kind == "letter":
        value = _LETTER.fullmatch(value).group(1)
    return Answer(value, kind, hit[1], level)


def extract_answer(text):
    """``(answer, kind)`` or ``None``; see :func:`find_answer`."""
    a = find_answer(text)
    return None if a is None else (a.value, a.kind)


def scan_numbers(text):
    """Every number mentioned in ``text``: decimals, percents and fractions.

    A fraction contributes its value and both of its parts.
    """
    out = []
    for m in _NUMBER_SCAN.finditer(text):
        if m.group(1) is not None:
            a, b = float(m.group(1).replace(",", "")), float(m.group(2).replace(",", ""))
            out.extend([a, b] + ([a / b] if b else []))
            continue
        sign = -1.0 if m.group(3) else 1.0
        a = sign * float(m.group(4).replace(",", ""))
        out.append(a)
        if m.group(5) is not None:
            b = float(m.group(5).replace(",", ""))
            out.append(b)
            if b:
                out.append(a / b)
        if m.group(6):
            out.append(a / 100.0)
    return out
