import dataclasses
import math
import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlmsearch.verifier import (
    PROFILES,
    STRUCT_KEYWORDS,
    ProfileError,
    ScoringContext,
    WeightProfile,
    composite_of,
    countdown_constraint,
    extract_answer,
    get_profile,
    mc_constraint,
    parse_equalities,
    s_conf,
    s_consist,
    s_ndegen,
    s_reach,
    s_struct,
    score,
    sudoku_constraint,
)
from dlmsearch.verifier.components import Equality
from dlmsearch.verifier.extract import scan_numbers

FULL = r"Step 1: subtract 5: 3x=9. Therefore x=3. \boxed{3}"


def solved_grid():
    return [[(r * 3 + r // 3 + c) % 9 + 1 for c in range(9)] for r in range(9)]


def grid_text(g):
    return "\n".join("".join(str(v) for v in row) for row in g)


def clue_string(g, cells):
    keep = set(cells)
    return "".join(str(g[r][c]) if (r, c) in keep else "." for r in range(9) for c in range(9))


# -- S1 ---------------------------------------------------------------


def test_struct_examples():
    assert s_struct(FULL) == pytest.approx(0.40 * 2 / 3 + 0.35 + 0.25, abs=1e-12)
    assert s_struct("3") == pytest.approx(0.25, abs=1e-12)
    assert s_struct("") == 0.0


def test_struct_keyword_list():
    assert len(STRUCT_KEYWORDS) == 14
    assert len(set(STRUCT_KEYWORDS)) == 14


def test_struct_mc_kind():
    assert s_struct("B", "mc") == pytest.approx(0.5 + 0.25, abs=1e-12)
    assert s_struct("", "mc") == 0.0


# -- S2 ---------------------------------------------------------------


def test_parse_equalities_examples():
    eqs = parse_equalities("12 × 4 = 48, then 48 + 7 = 55")
    assert [(e.a, e.op, e.b, e.c) for e in eqs] == [(12, "×", 4, 48), (48, "+", 7, 55)]
    assert parse_equalities("(a+b)×c = d") == []
    assert [(e.a, e.op, e.b, e.c) for e in parse_equalities("$3 \\times 5 = 15$")] == [(3, "×", 5, 15)]


def test_parse_equalities_spans_point_at_source():
    text = "so 6 - 2 = 4 and 9 ÷ 3 = 3"
    for e in parse_equalities(text):
        assert "=" in text[e.span[0] : e.span[1]]


def test_parse_latex_forms():
    ops = [e.op for e in parse_equalities(r"$2 \cdot 3 = 6$ and $8 \div 2 = 4$")]
    assert ops == ["×", "÷"]
    fr = parse_equalities(r"$\frac{6}{3} = 2$")
    assert len(fr) == 1 and fr[0].holds()


def test_consist_examples():
    assert s_consist("12 × 4 = 48, then 48 + 7 = 55") == 1.0
    assert s_consist("no math here") == 0.5


def test_consist_fraction():
    assert s_consist("2 + 2 = 4 and 3 + 3 = 7") == pytest.approx(0.5)


def test_chain_jump_halves():
    assert s_consist("2 + 2 = 4 then 4 * 1000000 = 4000000") == pytest.approx(0.5)


@given(
    st.floats(-1e6, 1e6, allow_nan=False),
    st.floats(-1e6, 1e6, allow_nan=False),
    st.floats(1e-12, 1.0),
    st.floats(1.0, 100.0),
)
def test_tolerance_is_monotone(a, c, rel, grow):
    e = Equality(a, "+", 0.0, c, (0, 0))
    if e.holds(rel=rel, abs_tol=rel):
        assert e.holds(rel=rel * grow, abs_tol=rel * grow)


# -- S3 ---------------------------------------------------------------


def test_reach_examples():
    assert s_reach(r"We compute 6×7=42. The answer is \boxed{42}") == 1.0
    assert s_reach(r"\boxed{42}") == 0.3
    assert s_reach("") == 0.2


def test_reach_symbolic_and_negation():
    assert s_reach(r"the root is x+1 so \boxed{X+1}") == 1.0
    # a negated mention still counts
    assert s_reach(r"it is not 42. \boxed{42}") == 1.0


def test_scan_numbers_forms():
    got = scan_numbers(r"numbers 3,5 and 1,234 and 7/2 and 50% and \frac{1}{4}")
    assert got == [3, 5, 1234, 7, 2, 3.5, 50, 0.5, 1, 4, 0.25]


# -- S4 ---------------------------------------------------------------


def test_conf_examples():
    assert s_conf([1.0] * 5) == 1.0
    assert s_conf(None) == 0.5
    assert s_conf([0.2, 0.4, 0.9]) == pytest.approx(0.5, abs=1e-12)


def test_conf_clamps():
    assert s_conf([-3.0, 7.0]) == pytest.approx(0.5)


# -- S5 ---------------------------------------------------------------


def test_ndegen_flood_and_clean():
    assert s_ndegen("<|endoftext|>" * 30) == 0.0
    assert s_ndegen(" ".join(f"w{i}" for i in range(40))) == 1.0


def test_ndegen_cascade():
    assert s_ndegen("<|mdm_mask|> " * 4 + " ".join(f"w{i}" for i in range(12))) == 0.05
    assert s_ndegen("one two three") == 0.2
    assert s_ndegen(" ".join(["a"] * 20)) == 0.05
    assert s_ndegen("") == 0.0


# -- constraints --------------------------------------------------------

PROMPT = "Target: 24 Numbers: 4, 6, 2, 3"


def test_countdown_examples():
    assert countdown_constraint("(4 + 2) * 3 + 6", PROMPT) == pytest.approx(1.0)
    assert countdown_constraint("6 * 4 + 3 - 2", PROMPT) == pytest.approx(0.7)
    assert countdown_constraint("4 * 6", "make it work") == pytest.approx(0.7)


def test_countdown_other_branches():
    assert countdown_constraint("4 * 4 * 6 / 4", PROMPT) == pytest.approx(0.7)  # reuses 4
    assert countdown_constraint("6 * 4 * 2", PROMPT) == pytest.approx(0.5)
    assert countdown_constraint("nothing", "make it work") == 0.0


def test_sudoku_examples():
    g = solved_grid()
    cells = random.Random(3).sample([(r, c) for r in range(9) for c in range(9)], 30)
    clues = clue_string(g, cells)
    assert sudoku_constraint(grid_text(g), clues) == pytest.approx(1.0)
    altered = [row[:] for row in g]
    for r, c in cells[:3]:
        altered[r][c] = g[r][c] % 9 + 1
    # the solution is valid; the prompt disagrees on 3 of its 30 clues
    bad_clues = clue_string(altered, cells)
    assert sudoku_constraint(grid_text(g), bad_clues) == pytest.approx(0.75 + 0.25 * 27 / 30)
    assert sudoku_constraint("12345", clues) == 0.0


def test_sudoku_partial_units():
    g = solved_grid()
    g[0][0], g[0][1] = g[0][1], g[0][0]
    ok = 27 - 2  # row and box survive the swap, columns 0 and 1 do not
    clues = clue_string(solved_grid(), [])
    want = 0.75 * ok / 27 + 0.25
    assert sudoku_constraint(grid_text(g), clues) == pytest.approx(want)


def test_mc_examples():
    assert mc_constraint("B") == pytest.approx(0.5)
    assert mc_constraint("The answer is B because heat rises, therefore B.") == pytest.approx(0.9)
    assert mc_constraint("") == 0.0


def test_extract_answer_examples():
    assert extract_answer(r"#### 17 and \boxed{42}")[0] == "42"
    assert extract_answer("the answer is B") == ("B", "letter")
    assert extract_answer("") is None


def test_extract_last_match_within_level():
    assert extract_answer(r"\boxed{1} then \boxed{2}")[0] == "2"
    assert extract_answer("<answer>7</answer> and <answer> 9 </answer>")[0] == "9"
    assert extract_answer("#### 1,234")[1] == "numeric"


# -- profiles and composite ---------------------------------------------

TABLE = {
    "GSM8K": (0.20, 0.25, 0.25, 0.10, 0.20, 0.00),
    "MATH500": (0.25, 0.20, 0.25, 0.10, 0.20, 0.00),
    "ARC": (0.20, 0.00, 0.00, 0.15, 0.20, 0.45),
    "TruthfulQA": (0.20, 0.00, 0.00, 0.15, 0.20, 0.45),
    "Countdown": (0.15, 0.10, 0.10, 0.10, 0.15, 0.40),
    "Sudoku": (0.05, 0.00, 0.00, 0.05, 0.10, 0.80),
    "Custom": (0.20, 0.25, 0.25, 0.10, 0.15, 0.05),
}


def test_profiles_match_table():
    assert set(PROFILES) == set(TABLE)
    for name, row in TABLE.items():
        p = PROFILES[name]
        assert tuple(p.alpha) + (p.alpha_c,) == row
        assert abs(sum(p.alpha) + p.alpha_c - 1.0) < 1e-9


def test_profile_validation():
    with pytest.raises(ProfileError):
        WeightProfile("GSM8K", (0.5, 0.5, 0.5, 0.0, 0.0), 0.0)
    with pytest.raises(ProfileError):
        get_profile("nope")
    assert get_profile("MATH-500").name == "MATH500"


def test_composite_examples():
    assert composite_of((1, 1, 1, 0.5, 1), 0.0, "GSM8K") == pytest.approx(0.95, abs=1e-12)
    assert score("").composite == pytest.approx(0.225, abs=1e-12)
    one = WeightProfile("GSM8K", (0, 0, 1, 0, 0), 0.0)
    assert score(r"6*7=42 \boxed{42}", ScoringContext(profile=one)).composite == pytest.approx(1.0)


def test_report_composite_is_dot_product():
    ctx = ScoringContext(input_text=PROMPT, confidences=(0.3, 0.9), profile="Countdown")
    r = score("(4 + 2) * 3 + 6 = 24 so the answer is 24", ctx)
    want = sum(a * s for a, s in zip(ctx.profile.alpha, r.components())) + ctx.profile.alpha_c * r.s_constraint
    assert abs(r.composite - want) < 1e-9
    assert r.details["answer"]["value"] == "24"


def test_context_has_no_label_field():
    names = {f.name for f in dataclasses.fields(ScoringContext)}
    assert names == {"input_text", "confidences", "profile", "special_tokens", "mask_token"}
    for bad in ("answer", "label", "target", "ground_truth", "reference"):
        assert not any(bad in n for n in names)


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=400), st.sampled_from(sorted(PROFILES)))
def test_components_in_range(raw, profile):
    r = score(raw, ScoringContext(input_text=raw.decode("latin-1"), profile=profile))
    for v in r.components() + (r.s_constraint, r.composite):
        assert 0.0 <= v <= 1.0 and not math.isnan(v)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="0123456789+-*/=x() .,\\{}boxed<answer>#", max_size=300))
def test_arithmetic_soup_in_range(text):
    r = score(text, ScoringContext(profile="Countdown", input_text="Target: 10 Numbers: 1 2 3 4"))
    assert 0.0 <= r.composite <= 1.0


PATHOLOGICAL = {
    "random": lambda n: "".join(random.Random(0).choice("ab1 2+=.\\{}") for _ in range(n)),
    "digits": lambda n: "9" * n,
    "boxed": lambda n: "\\boxed{" * (n // 7),
    "tags": lambda n: "<answer>" * (n // 8),
    "equalities": lambda n: "1 + 1 = 2 " * (n // 10),
}


@pytest.mark.parametrize("kind", sorted(PATHOLOGICAL))
def test_megabyte_is_linear(kind):
    make = PATHOLOGICAL[kind]
    ctx = ScoringContext(profile="Countdown", input_text="Target: 5 Numbers: 1, 2")

    def elapsed(n):
        text = make(n)
        t0 = time.perf_counter()
        score(text, ctx)
        return time.perf_counter() - t0

    small, big = elapsed(250_000), elapsed(1_000_000)
    assert big < 10.0
    # 4x the input should cost well under 16x (quadratic) the time
    assert big < 8 * small + 0.5
