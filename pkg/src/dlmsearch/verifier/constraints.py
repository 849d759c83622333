"""Task-specific constraint terms. Inputs come from the prompt text only."""

import ast
import operator
import re
from collections import Counter

from .components import keyword_hits, letter_choice
from .extract import NUMBER, find_answer, numeric_value

# -- countdown ----------------------------------------------------------------

_TARGET = re.compile(r"target\s*[:=]?\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_POOL = re.compile(r"numbers\s*[:=]?\s*((?:\d+(?:\.\d+)?[\s,;]*){1,32})", re.IGNORECASE)
# maximal runs of arithmetic characters; filtered below
_EXPR_RUN = re.compile(r"[\d\s.()+\-−*×·/÷x]{3,400}")
_OPERAND = re.compile(NUMBER)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_countdown_prompt(input_text):
    """``(target, pool)`` from text like "Target: 952 Numbers: 100, 75, 50", or ``None``."""
    t = _TARGET.search(input_text)
    p = _POOL.search(input_text)
    if t is None or p is None:
        return None
    pool = [float(x) for x in re.findall(r"\d+(?:\.\d+)?", p.group(1))]
    if not pool:
        return None
    return float(t.group(1)), pool


def _normalise_expr(s):
    s = s.replace("\\times", "*").replace("\\cdot", "*").replace("\\div", "/")
    for a, b in (("×", "*"), ("·", "*"), ("÷", "/"), ("−", "-"), ("x", "*")):
        s = s.replace(a, b)
    return s.strip()


def _eval_node(node, depth=0):
    if depth > 64:
        raise ValueError("expression too deep")
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, depth + 1)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _eval_node(node.operand, depth + 1)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        a, b = _eval_node(node.left, depth + 1), _eval_node(node.right, depth + 1)
        if isinstance(node.op, ast.Div) and b == 0:
            raise ValueError("division by zero")
        return _BINOPS[type(node.op)](a, b)
    raise ValueError("unsupported expression")


def evaluate(expr):
    """Value of a plain arithmetic expression (+ - * / and parentheses), or ``None``."""
    s = _normalise_expr(expr)
    if not s or len(s) > 400:
        return None
    try:
        return _eval_node(ast.parse(s, mode="eval"))
    except (SyntaxError, ValueError, OverflowError, MemoryError, RecursionError):
        return None


def candidate_expression(text):
    """The expression the output commits to: the delimited answer, else the last
    arithmetic run containing an operator. A trailing ``= value`` is dropped."""
    a = find_answer(text)
    pieces = []
    if a is not None:
        pieces.append(a.value)
    pieces.extend(reversed([m.group(0) for m in _EXPR_RUN.finditer(text)]))
    for raw in pieces:
        body = raw.split("=")[0]
        if not re.search(r"\d\s*[-+*/×·÷−x]\s*[\d(]|\d\s*\\(?:times|cdot|div)", body):
            continue
        if evaluate(body) is not None:
            return body.strip()
    return None


def countdown_constraint(text, input_text):
    prompt = parse_countdown_prompt(input_text)
    expr = candidate_expression(text)
    if prompt is None:
        return 0.7 if expr is not None else 0.0
    target, pool = prompt
    if expr is None:
        return 0.1 + 0.1
    value = evaluate(expr)
    gap = abs(value - target)
    match = 0.6 if gap <= 1e-6 else 0.3 if gap <= 1.0 else 0.1
    operands = Counter(float(x.replace(",", "")) for x in _OPERAND.findall(_normalise_expr(expr)))
    allowed = Counter(pool)
    valid = bool(operands) and all(allowed[k] >= c for k, c in operands.items())
    return match + (0.4 if valid else 0.1)


# -- sudoku ---------------------------------------------------------------------

_UNITS = tuple(
    [tuple(9 * r + c for c in range(9)) for r in range(9)]
    + [tuple(9 * r + c for r in range(9)) for c in range(9)]
    + [tuple(9 * (br + r) + bc + c for r in range(3) for c in range(3)) for br in (0, 3, 6) for bc in (0, 3, 6)]
)
_FULL = frozenset("123456789")


def parse_grid(text):
    digits = [c for c in text if c.isascii() and c.isdigit()]
    return digits[:81] if len(digits) >= 81 else None


def parse_clues(input_text):
    cells = [c for c in input_text if c in "0123456789."]
    if len(cells) < 81:
        return None
    return ["0" if c == "." else c for c in cells[:81]]


def satisfied_units(grid):
    return sum(1 for unit in _UNITS if {grid[i] for i in unit} == _FULL)


def sudoku_constraint(text, input_text):
    grid = parse_grid(text)
    if grid is None:
        return 0.0
    clues = parse_clues(input_text)
    if clues is None:
        clue = 0.0
    else:
        given = [i for i, c in enumerate(clues) if c != "0"]
        clue = sum(grid[i] == clues[i] for i in given) / len(given) if given else 1.0
    return 0.75 * satisfied_units(grid) / 27.0 + 0.25 * clue


# -- multiple choice ----------------------------------------------------------------

MC_KEYWORDS = ("because", "therefore", "thus", "hence", "since", "so", "implies", "consequently")
_ELIMINAT = re.compile(r"\beliminat", re.IGNORECASE)
_STANDALONE = re.compile(r"(?<![A-Za-z])([A-H])(?![A-Za-z])")


def mc_keyword_hits(text):
    return keyword_hits(text, MC_KEYWORDS) + (1 if _ELIMINAT.search(text) else 0)


def mc_constraint(text):
    choice = letter_choice(text)
    score = 0.0
    if choice is not None:
        score += 0.3
        counts = Counter(m.group(1) for m in _STANDALONE.finditer(text))
        if counts[choice] >= max(counts.values(), default=0):
            score += 0.2
    score += 0.3 * min(mc_keyword_hits(text) / 3.0, 1.0)
    if len(text) >= 30:
        score += 0.2
    return min(score, 1.0)


# -- integer-range bonus ---------------------------------------------------------------


def aime_constraint(text):
    a = find_answer(text)
    if a is None or a.kind != "numeric":
        return 0.0
    v = numeric_value(a.value)
    return 1.0 if v is not None and v == int(v) and 0 <= v <= 999 else 0.0
