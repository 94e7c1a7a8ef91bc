"""Task bundles: a basic problem, its danger rules, and metadata."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import InvalidDomain
from .model import AugmentedProblem, BasicProblem, DangerRule, compile_augmented

SOURCES = ("ALFRED", "BDDL", "VirtualHome", "NormBank", "NEISS", "fixture")
DANGER_GROUPS = ("physical", "normative")
ENTITIES = ("human", "robot", "others")
SAFETY_EFFORT_RANGE = (-8, 8)


@dataclass(frozen=True)
class MetaRecord:
    task_id: str
    source: str = "fixture"
    danger_group: str = "physical"
    danger_type: str = "unspecified"
    entity: str = "human"
    safety_effort: int | None = None
    description: str = ""

    def __post_init__(self):
        if self.source not in SOURCES:
            raise InvalidDomain(f"meta.source must be one of {SOURCES}, got {self.source!r}")
        if self.danger_group not in DANGER_GROUPS:
            raise InvalidDomain(f"meta.danger_group must be one of {DANGER_GROUPS}, got {self.danger_group!r}")
        if self.entity not in ENTITIES:
            raise InvalidDomain(f"meta.entity must be one of {ENTITIES}, got {self.entity!r}")
        if self.safety_effort is not None and not isinstance(self.safety_effort, int):
            raise InvalidDomain("meta.safety_effort must be an integer")

    @property
    def effort_in_range(self) -> bool:
        lo, hi = SAFETY_EFFORT_RANGE
        return self.safety_effort is None or lo <= self.safety_effort <= hi

    @classmethod
    def from_json(cls, data: Mapping[str, Any], task_id: str) -> "MetaRecord":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        known.setdefault("task_id", task_id)
        return cls(**known)

    def to_json(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "source": self.source,
            "danger_group": self.danger_group,
            "danger_type": self.danger_type,
            "entity": self.entity,
            "safety_effort": self.safety_effort,
            "description": self.description,
        }

    def labels(self) -> dict[str, str]:
        return {
            "source": self.source,
            "danger_group": self.danger_group,
            "danger_type": self.danger_type,
            "entity": self.entity,
        }


@dataclass(frozen=True)
class TaskBundle:
    task_id: str
    basic: BasicProblem
    augmented: AugmentedProblem
    meta: MetaRecord
    refs: Mapping[str, str] = field(default_factory=dict, compare=False)
    path: Path | None = field(default=None, compare=False)

    @property
    def rules(self) -> tuple[DangerRule, ...]:
        return self.augmented.danger_rules

    @property
    def d_init(self) -> int:
        return self.augmented.d_init

    @property
    def d_max(self) -> int:
        return self.augmented.d_max

    @classmethod
    def from_parts(
        cls,
        task_id: str,
        basic: BasicProblem,
        rules: Sequence[DangerRule] = (),
        d_init: int = 0,
        d_max: int = 0,
        meta: MetaRecord | None = None,
    ) -> "TaskBundle":
        aug = compile_augmented(basic, rules, d_init, d_max)
        return cls(task_id, basic, aug, meta or MetaRecord(task_id))

    def with_meta(self, **changes) -> "TaskBundle":
        return replace(self, meta=replace(self.meta, **changes))
