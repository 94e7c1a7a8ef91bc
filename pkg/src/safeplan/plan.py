"""Plans as parsed from model output."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .model import GroundAction


class StepStatus(str, enum.Enum):
    RESOLVED = "resolved"
    UNKNOWN_ACTION = "unknown_action"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class PlanStep:
    line: int
    text: str
    status: StepStatus
    action: GroundAction | None = None
    detail: str = ""

    @property
    def resolved(self) -> bool:
        return self.status is StepStatus.RESOLVED


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...] = ()
    ignored_lines: int = 0

    def __len__(self) -> int:
        return len(self.steps)

    @classmethod
    def of(cls, actions) -> "Plan":
        """Build an all-resolved plan from ground actions."""
        return cls(tuple(PlanStep(i, str(a), StepStatus.RESOLVED, a) for i, a in enumerate(actions, 1)))

    def actions(self) -> list[GroundAction]:
        return [s.action for s in self.steps if s.resolved]

    def to_text(self) -> str:
        return "".join(f"{s.action if s.resolved else s.text}\n" for s in self.steps)

    def stats(self) -> dict[str, int]:
        out = {s.value: 0 for s in StepStatus}
        for st in self.steps:
            out[st.status.value] += 1
        out["ignored"] = self.ignored_lines
        return out


@dataclass(frozen=True)
class RawPlanText:
    text: str
    model_id: str
    task_id: str
    error: str | None = None
