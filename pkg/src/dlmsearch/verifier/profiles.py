"""Per-task weight profiles ``(alpha_1..alpha_5, alpha_c)``."""

from dataclasses import dataclass

COMPONENTS = ("struct", "consist", "reach", "conf", "ndegen")
CONSTRAINTS = ("none", "countdown", "sudoku", "mc", "aime")
TASK_KINDS = ("math", "mc", "sudoku")


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class WeightProfile:
    name: str
    alpha: tuple
    alpha_c: float
    constraint: str = "none"
    task_kind: str = "math"

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_c", float(self.alpha_c))
        if len(alpha) != 5:
            raise ProfileError("a profile needs exactly five component weights")
        if min(alpha) < 0 or self.alpha_c < 0:
            raise ProfileError("weights must be non-negative")
        if abs(sum(alpha) + self.alpha_c - 1.0) > 1e-9:
            raise ProfileError(f"profile {self.name!r} weights sum to {sum(alpha) + self.alpha_c}, not 1")
        if self.constraint not in CONSTRAINTS:
            raise ProfileError(f"unknown constraint {self.constraint!r}")
        if self.task_kind not in TASK_KINDS:
            raise ProfileError(f"unknown task kind {self.task_kind!r}")

    def weights(self):
        return dict(zip(COMPONENTS, self.alpha), constraint=self.alpha_c)


PROFILES = {
    p.name: p
    for p in (
        WeightProfile("GSM8K", (0.20, 0.25, 0.25, 0.10, 0.20), 0.00),
        WeightProfile("MATH500", (0.25, 0.20, 0.25, 0.10, 0.20), 0.00),
        WeightProfile("ARC", (0.20, 0.00, 0.00, 0.15, 0.20), 0.45, "mc", "mc"),
        WeightProfile("TruthfulQA", (0.20, 0.00, 0.00, 0.15, 0.20), 0.45, "mc", "mc"),
        WeightProfile("Countdown", (0.15, 0.10, 0.10, 0.10, 0.15), 0.40, "countdown"),
        WeightProfile("Sudoku", (0.05, 0.00, 0.00, 0.05, 0.10), 0.80, "sudoku", "sudoku"),
        # integer-answer competition row with the [0, 999] bonus
        WeightProfile("Custom", (0.20, 0.25, 0.25, 0.10, 0.15), 0.05, "aime"),
    )
}

_ALIASES = {"MATH-500": "MATH500", "ARC-C": "ARC", "ARC-CHALLENGE": "ARC", "AIME": "Custom", "AIME24": "Custom"}


def get_profile(name):
    if isinstance(name, WeightProfile):
        return name
    key = _ALIASES.get(str(name).upper(), name)
    for k, p in PROFILES.items():
        if k.lower() == str(key).lower():
            return p
    raise ProfileError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
