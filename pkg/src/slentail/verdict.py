"""Decision outcomes shared by the SLA and SLAL procedures."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Outcome(enum.Enum):
    VALID = "valid"
    INVALID = "invalid"
    CONDITION_VIOLATED = "condition-violated"
    RESOURCE_EXCEEDED = "resource-exceeded"


EXIT_CODES = {
    Outcome.VALID: 0,
    Outcome.INVALID: 1,
    Outcome.CONDITION_VIOLATED: 2,
    Outcome.RESOURCE_EXCEEDED: 4,
}


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.outcome is Outcome.VALID

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]

    def __str__(self) -> str:
        if self.outcome is Outcome.CONDITION_VIOLATED and self.reason:
            return f"{self.outcome.value}: {self.reason}"
        return self.outcome.value


VALID = Verdict(Outcome.VALID)
INVALID = Verdict(Outcome.INVALID)


def condition_violated(reason: str) -> Verdict:
    return Verdict(Outcome.CONDITION_VIOLATED, reason)


def resource_exceeded(reason: str = "") -> Verdict:
    return Verdict(Outcome.RESOURCE_EXCEEDED, reason)
