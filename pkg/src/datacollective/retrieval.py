"""On-demand scenario retrieval for the privacy-reward dilemma loop.

A participant holds a balance of accumulated rewards and a privacy level over
locked-in choices. Given a goal (improve privacy or improve rewards), the
engine scores every scenario by the best achievable improvement of the goal
metric and retrieves the argmax; options that strictly improve the goal form
the improvement box. Applying a choice overwrites the previous selection for
that scenario and recomputes the balance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InvalidInputError
from .sharing import RewardModel, SelectionVector, privacy_score

IMPROVE_PRIVACY = "improve_privacy"
IMPROVE_REWARDS = "improve_rewards"
GOALS = (IMPROVE_PRIVACY, IMPROVE_REWARDS)


@dataclass(frozen=True)
class BalanceState:
    """Current selections plus the derived privacy-reward balance."""

    selection: SelectionVector
    rmax: np.ndarray
    reward_model: RewardModel
    accumulated_rewards: float
    privacy: float

    @classmethod
    def from_selection(
        cls,
        selection: SelectionVector,
        rmax: np.ndarray,
        reward_model: RewardModel,
    ) -> "BalanceState":
        rmax = np.asarray(rmax, dtype=float)
        if rmax.shape != selection.selections.shape:
            raise InvalidInputError("rmax length does not match selection length")
        return cls(
            selection=selection,
            rmax=rmax,
            reward_model=reward_model,
            accumulated_rewards=reward_model.total_rewards(rmax, selection),
            privacy=privacy_score(selection),
        )


def improvement(state: BalanceState, scenario_id: int, goal: str) -> np.ndarray:
    """Signed change of the goal metric per option, 0 at the current option."""
    _check_goal(goal)
    sel = state.selection
    if not 1 <= scenario_id <= sel.m:
        raise InvalidInputError(f"scenario id {scenario_id} out of range")
    z = sel.z
    current = int(sel.selections[scenario_id - 1])
    options = np.arange(1, z + 1)
    if goal == IMPROVE_PRIVACY:
        return (options - current) / ((z - 1) * sel.m)
    rmax_j = state.rmax[scenario_id - 1]
    rewards = state.reward_model.option_rewards(rmax_j, options)
    return rewards - state.reward_model.option_rewards(rmax_j, current)


def improvement_box(state: BalanceState, scenario_id: int, goal: str) -> set[int]:
    """Options whose goal delta is strictly positive."""
    deltas = improvement(state, scenario_id, goal)
    return {o + 1 for o in np.flatnonzero(deltas > 0)}


def retrieve_next(state: BalanceState, goal: str) -> int | None:
    """Scenario whose best option maximally improves the goal.

    Ties break toward the lowest scenario id. Returns None when no scenario
    has a strictly positive best improvement (saturation), which is a normal
    outcome rather than an error.
    """
    _check_goal(goal)
    best = _best_deltas(state, goal)
    j = int(np.argmax(best))
    if best[j] <= 0:
        return None
    return j + 1


def apply_choice(state: BalanceState, scenario_id: int, option: int) -> BalanceState:
    """Overwrite the choice for one scenario and recompute the balance."""
    if not 1 <= option <= state.selection.z:
        raise InvalidInputError(f"option {option} outside 1..{state.selection.z}")
    return BalanceState.from_selection(
        state.selection.replace(scenario_id, option),
        state.rmax,
        state.reward_model,
    )


def _best_deltas(state: BalanceState, goal: str) -> np.ndarray:
    """Best-option goal delta per scenario, vectorized over all scenarios."""
    sel = state.selection
    z = sel.z
    current = sel.selections
    if goal == IMPROVE_PRIVACY:
        # Privacy deltas are linear in the option, so the best move is to z.
        return (z - current) / ((z - 1) * sel.m)
    options = np.arange(1, z + 1)
    rewards = state.reward_model.option_rewards(
        state.rmax[:, None], options[None, :]
    )
    current_rewards = rewards[np.arange(sel.m), current - 1]
    return rewards.max(axis=1) - current_rewards


def _check_goal(goal: str) -> None:
    if goal not in GOALS:
        raise InvalidInputError(f"unknown goal '{goal}'")


@dataclass(frozen=True)
class Event:
    """One row of the replayable event log."""

    participant_id: str
    step: int
    goal: str
    scenario_id: int
    option: int
    rewards_after: float
    privacy_after: float


EVENT_LOG_HEADER = [
    "participant_id",
    "step",
    "goal",
    "scenario_id",
    "option",
    "rewards_after",
    "privacy_after",
]


def write_event_log(path: str | Path, events: Iterable[Event]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_LOG_HEADER)
        for e in events:
            writer.writerow(
                [
                    e.participant_id,
                    e.step,
                    e.goal,
                    e.scenario_id,
                    e.option,
                    format(e.rewards_after, ".12g"),
                    format(e.privacy_after, ".12g"),
                ]
            )


def read_event_log(path: str | Path) -> list[Event]:
    events = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != EVENT_LOG_HEADER:
            raise InvalidInputError(f"{path}: unexpected event log header")
        for row in reader:
            if not row:
                continue
            events.append(
                Event(
                    participant_id=row[0],
                    step=int(row[1]),
                    goal=row[2],
                    scenario_id=int(row[3]),
                    option=int(row[4]),
                    rewards_after=float(row[5]),
                    privacy_after=float(row[6]),
                )
            )
    return events
