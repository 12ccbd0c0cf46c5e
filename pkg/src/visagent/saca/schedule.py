"""Stepwise blend schedule for the global-latent weight."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

from ..errors import ConfigError, StepOutOfRange


@dataclass(frozen=True)
class GlobalBlendSchedule:
    """Ordered (from, to, lambda) ranges tiling [1, total_steps].

    Steps are 1-indexed and range bounds are inclusive; lambda values lie
    in [0, 1] and never decrease across ranges.
    """

    entries: tuple[tuple[int, int, float], ...]
    total_steps: int

    def __post_init__(self) -> None:
        if not self.entries:
            raise ConfigError("schedule needs at least one range")
        expected_start = 1
        previous = -1.0
        for start, stop, lam in self.entries:
            if start != expected_start:
                raise ConfigError(
                    f"schedule ranges must tile [1, {self.total_steps}] without "
                    f"gap or overlap; expected a range starting at {expected_start}, got {start}"
                )
            if stop < start:
                raise ConfigError(f"empty schedule range ({start}, {stop})")
            if not 0.0 <= lam <= 1.0:
                raise ConfigError(f"lambda {lam} outside [0, 1]")
            if lam < previous:
                raise ConfigError("lambda values must be non-decreasing across ranges")
            previous = lam
            expected_start = stop + 1
        if expected_start != self.total_steps + 1:
            raise ConfigError(
                f"schedule ranges cover [1, {expected_start - 1}] but "
                f"total_steps is {self.total_steps}"
            )

    @classmethod
    def from_entries(cls, entries: Sequence[dict[str, Any]], total_steps: int | None = None) -> "GlobalBlendSchedule":
        """Build from config-file entries: {"from": int, "to": int, "lambda": float}."""
        parsed = tuple((int(e["from"]), int(e["to"]), float(e["lambda"])) for e in entries)
        if total_steps is None:
            total_steps = max(stop for _, stop, _ in parsed)
        return cls(entries=parsed, total_steps=total_steps)

    def to_entries(self) -> list[dict[str, Any]]:
        return [{"from": s, "to": t, "lambda": lam} for s, t, lam in self.entries]


def default_schedule() -> GlobalBlendSchedule:
    """30 steps with the blend weight stepping 0.1 / 0.3 / 0.5 every ten."""
    return GlobalBlendSchedule(
        entries=((1, 10, 0.1), (11, 20, 0.3), (21, 30, 0.5)),
        total_steps=30,
    )


def lambda_at(step: int, schedule: GlobalBlendSchedule) -> float:
    """Blend weight for a 1-indexed step; bounds are inclusive."""
    if step < 1 or step > schedule.total_steps:
        raise StepOutOfRange(
            f"step {step} outside [1, {schedule.total_steps}]"
        )
    for start, stop, lam in schedule.entries:
        if start <= step <= stop:
            return lam
    raise StepOutOfRange(f"step {step} not covered by any schedule range")


__all__ = ["GlobalBlendSchedule", "default_schedule", "lambda_at"]
