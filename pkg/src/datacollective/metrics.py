"""Condition-level evaluation: privacy, reinforcement, costs and recovery.

A condition snapshot freezes every participant's sharing levels under one
condition (the coordinated condition holds one selection matrix per
repetition). From it: per-scenario and per-element mean privacy, the privacy
expected from an element's constituents (whose relative difference to the
actual value is the privacy reinforcement), total data-collection cost in
CHF, and the share of rewarded privacy loss regained by coordination.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import sharing
from .coordination import CoordinationRun, PlanPortfolio
from .errors import InvalidInputError
from .goals import GoalSignal, mismatch
from .sharing import RewardModel, ScenarioCatalog, SelectionVector, WeightProfile

RECOVERY_EPS = 1e-9


@dataclass(frozen=True)
class ConditionSnapshot:
    """Sharing levels for one condition.

    ``selections`` has shape (repetitions, participants, m); plain conditions
    use a single repetition. ``plan_labels`` (repetitions, participants)
    records which portfolio plan each coordinated choice came from.
    """

    label: str
    participant_ids: tuple[str, ...]
    selections: np.ndarray
    z: int = 5
    plan_labels: np.ndarray | None = None

    def __post_init__(self):
        sel = np.asarray(self.selections, dtype=np.intp)
        if sel.ndim == 2:
            sel = sel[None, :, :]
        object.__setattr__(self, "selections", sel)
        if sel.ndim != 3 or sel.shape[1] == 0:
            raise InvalidInputError("selections must be (repetitions, participants, m)")
        if sel.shape[1] != len(self.participant_ids):
            raise InvalidInputError("participant ids do not match selections")
        if np.any(sel < 1) or np.any(sel > self.z):
            raise InvalidInputError(f"levels must lie in 1..{self.z}")

    @property
    def m(self) -> int:
        return int(self.selections.shape[2])

    @classmethod
    def from_selections(
        cls,
        label: str,
        selections: Mapping[str, SelectionVector] | Sequence[tuple[str, SelectionVector]],
    ) -> "ConditionSnapshot":
        items = list(selections.items()) if isinstance(selections, Mapping) else list(selections)
        if not items:
            raise InvalidInputError("snapshot needs at least one participant")
        z = items[0][1].z
        return cls(
            label=label,
            participant_ids=tuple(pid for pid, _ in items),
            selections=np.stack([sv.selections for _, sv in items])[None, :, :],
            z=z,
        )

    @classmethod
    def from_runs(
        cls,
        label: str,
        runs: Sequence[CoordinationRun],
        portfolios: Sequence[PlanPortfolio],
        z: int = 5,
    ) -> "ConditionSnapshot":
        """Snapshot of coordinated selections, one layer per repetition.

        Plan values are mapped back to levels via s = z - v * (z - 1); plans
        built from selection levels land exactly on that grid.
        """
        if not runs:
            raise InvalidInputError("need at least one coordination run")
        reps = len(runs)
        n = len(portfolios)
        m = portfolios[0].plan_length
        sel = np.zeros((reps, n, m), dtype=np.intp)
        labels = np.empty((reps, n), dtype=object)
        for r, run in enumerate(runs):
            for a, portfolio in enumerate(portfolios):
                plan = portfolio.plans[run.final_selections()[a]]
                levels = np.rint(z - plan.values * (z - 1)).astype(np.intp)
                sel[r, a] = np.clip(levels, 1, z)
                labels[r, a] = plan.label
        return cls(
            label=label,
            participant_ids=tuple(p.agent_id for p in portfolios),
            selections=sel,
            z=z,
            plan_labels=labels,
        )

    def normalized_privacy(self) -> np.ndarray:
        """(repetitions, participants, m) privacy fractions."""
        return (self.selections - 1) / (self.z - 1)

    def mean_privacy(self) -> float:
        return float(self.normalized_privacy().mean())

    def aggregate_sharing(self) -> np.ndarray:
        """Element-wise sum over participants of normalized shared-data
        levels, averaged over repetitions; the signal compared to goals."""
        shared = (self.z - self.selections) / (self.z - 1)
        return shared.sum(axis=1).mean(axis=0)


def scenario_privacy(snapshot: ConditionSnapshot) -> np.ndarray:
    """Mean normalized privacy per scenario across participants (and runs)."""
    return snapshot.normalized_privacy().mean(axis=(0, 1))


def element_privacy(
    snapshot: ConditionSnapshot, catalog: ScenarioCatalog, criterion: int, element: int
) -> float:
    """Mean scenario privacy over the m/q scenarios containing the element."""
    mask = catalog.element_mask(criterion, element)
    return float(scenario_privacy(snapshot)[mask].mean())


def expected_scenario_privacy(
    snapshot: ConditionSnapshot, catalog: ScenarioCatalog
) -> np.ndarray:
    """Expected privacy per scenario: mean of its elements' mean privacies."""
    _check_catalog(snapshot, catalog)
    per_element = {
        (u, o): element_privacy(snapshot, catalog, u, o)
        for u in range(1, catalog.k + 1)
        for o in range(1, catalog.criteria[u - 1].size + 1)
    }
    return np.array(
        [
            np.mean(
                [per_element[(u + 1, o)] for u, o in enumerate(s.element_indices)]
            )
            for s in catalog.scenarios
        ]
    )


def expected_element_privacy(
    snapshot: ConditionSnapshot, catalog: ScenarioCatalog, criterion: int, element: int
) -> float:
    """Mean expected scenario privacy over the scenarios containing the element."""
    mask = catalog.element_mask(criterion, element)
    return float(expected_scenario_privacy(snapshot, catalog)[mask].mean())


@dataclass(frozen=True)
class ReinforcementReport:
    """Actual vs. expected privacy per element and their relative difference.

    Reinforcement is (actual - expected) / expected; entries with an expected
    value of zero are flagged undefined rather than divided.
    """

    element_labels: tuple[str, ...]
    actual: np.ndarray
    expected: np.ndarray
    reinforcement: np.ndarray
    undefined: np.ndarray


def reinforcement_report(
    snapshot: ConditionSnapshot, catalog: ScenarioCatalog
) -> ReinforcementReport:
    _check_catalog(snapshot, catalog)
    expected_per_scenario = expected_scenario_privacy(snapshot, catalog)
    actual_per_scenario = scenario_privacy(snapshot)
    labels, actual, expected = [], [], []
    for u in range(1, catalog.k + 1):
        for o in range(1, catalog.criteria[u - 1].size + 1):
            mask = catalog.element_mask(u, o)
            labels.append(catalog.criteria[u - 1].elements[o - 1])
            actual.append(float(actual_per_scenario[mask].mean()))
            expected.append(float(expected_per_scenario[mask].mean()))
    actual_arr = np.array(actual)
    expected_arr = np.array(expected)
    undefined = expected_arr == 0.0
    reinforcement = np.zeros_like(actual_arr)
    defined = ~undefined
    reinforcement[defined] = (actual_arr[defined] - expected_arr[defined]) / expected_arr[defined]
    reinforcement[undefined] = np.nan
    return ReinforcementReport(
        element_labels=tuple(labels),
        actual=actual_arr,
        expected=expected_arr,
        reinforcement=reinforcement,
        undefined=undefined,
    )


@dataclass(frozen=True)
class CostReport:
    """Data-collection cost in CHF; one entry per repetition."""

    label: str
    per_repetition: np.ndarray
    total: float
    sigma: float


def collection_cost(
    snapshot: ConditionSnapshot,
    profiles: Mapping[str, WeightProfile],
    reward_model: RewardModel,
    catalog: ScenarioCatalog,
    include_intrinsic_value: bool = True,
    intrinsic_label: str = "intrinsic",
    label: str | None = None,
) -> CostReport:
    """Total rewards paid out for the snapshot's selections.

    Coordinated selections priced per repetition; with
    ``include_intrinsic_value`` off, choices of the unrewarded plan cost
    nothing (that data was volunteered).
    """
    _check_catalog(snapshot, catalog)
    if snapshot.z != reward_model.z:
        raise InvalidInputError("snapshot and reward model disagree on levels")
    rmax_rows = []
    for pid in snapshot.participant_ids:
        if pid not in profiles:
            raise InvalidInputError(f"no weight profile for participant '{pid}'")
        rmax_rows.append(reward_model.max_rewards(profiles[pid], catalog))
    rmax = np.stack(rmax_rows)  # (participants, m)

    reps = snapshot.selections.shape[0]
    totals = np.zeros(reps)
    for r in range(reps):
        rewards = reward_model.option_rewards(rmax, snapshot.selections[r])
        per_participant = rewards.sum(axis=1)
        if not include_intrinsic_value and snapshot.plan_labels is not None:
            free = np.array(
                [label == intrinsic_label for label in snapshot.plan_labels[r]]
            )
            per_participant = np.where(free, 0.0, per_participant)
        totals[r] = per_participant.sum()
    return CostReport(
        label=label or snapshot.label,
        per_repetition=totals,
        total=float(totals.mean()),
        sigma=float(totals.std()),
    )


def participant_rewards(
    snapshot: ConditionSnapshot,
    profiles: Mapping[str, WeightProfile],
    reward_model: RewardModel,
    catalog: ScenarioCatalog,
) -> np.ndarray:
    """Gained rewards per participant, averaged over repetitions."""
    _check_catalog(snapshot, catalog)
    rmax = np.stack(
        [reward_model.max_rewards(profiles[pid], catalog) for pid in snapshot.participant_ids]
    )
    rewards = reward_model.option_rewards(rmax[None, :, :], snapshot.selections)
    return rewards.sum(axis=2).mean(axis=0)


def valuation_report(
    snapshot: ConditionSnapshot,
    intrinsic: ConditionSnapshot,
    profiles: Mapping[str, WeightProfile],
    reward_model: RewardModel,
    catalog: ScenarioCatalog,
) -> dict[str, np.ndarray]:
    """Per-participant privacy cost under each of the four valuation schemes.

    Relative schemes take the participant's hypothetical unrewarded rewards
    as the baseline; the sacrifice reference is the reward model's pool.
    """
    if set(snapshot.participant_ids) != set(intrinsic.participant_ids):
        raise InvalidInputError("snapshots cover different participants")
    gained = participant_rewards(snapshot, profiles, reward_model, catalog)
    baseline_by_id = dict(
        zip(
            intrinsic.participant_ids,
            participant_rewards(intrinsic, profiles, reward_model, catalog),
        )
    )
    baseline = np.array([baseline_by_id[pid] for pid in snapshot.participant_ids])
    pool = reward_model.pool
    out: dict[str, np.ndarray] = {}
    for kind in sharing.VALUATION_KINDS:
        costs = [
            sharing.privacy_cost(
                r, sharing.ValuationScheme(kind, intrinsic_rewards=float(b)), pool
            )
            for r, b in zip(gained, baseline)
        ]
        out[kind] = np.array(costs)
    return out


@dataclass(frozen=True)
class RecoveryReport:
    """Share of the rewarded privacy loss regained by coordination."""

    percent: float
    undefined: bool
    intrinsic_mean: float
    rewarded_mean: float
    coordinated_mean: float


def privacy_recovery(
    rewarded: ConditionSnapshot,
    coordinated: ConditionSnapshot,
    intrinsic: ConditionSnapshot,
) -> RecoveryReport:
    """(coordinated - rewarded) / (intrinsic - rewarded) of mean privacy, in
    percent; 0 at the rewarded anchor, 100 at the intrinsic anchor."""
    ids = set(rewarded.participant_ids)
    if set(coordinated.participant_ids) != ids or set(intrinsic.participant_ids) != ids:
        raise InvalidInputError("snapshots cover different participants")
    p_rew = rewarded.mean_privacy()
    p_coord = coordinated.mean_privacy()
    p_intr = intrinsic.mean_privacy()
    denominator = p_intr - p_rew
    if abs(denominator) < RECOVERY_EPS:
        return RecoveryReport(float("nan"), True, p_intr, p_rew, p_coord)
    return RecoveryReport(
        percent=float((p_coord - p_rew) / denominator * 100.0),
        undefined=False,
        intrinsic_mean=p_intr,
        rewarded_mean=p_rew,
        coordinated_mean=p_coord,
    )


def _check_catalog(snapshot: ConditionSnapshot, catalog: ScenarioCatalog) -> None:
    if snapshot.m != catalog.m:
        raise InvalidInputError("snapshot scenario count does not match catalog")


# ---------------------------------------------------------------------------
# Plot-ready CSV writers, one file per figure style.

def write_scenario_privacy_csv(
    path: str | Path, snapshots: Sequence[ConditionSnapshot]
) -> None:
    """Per-scenario privacy per condition (privacy-by-scenario figure)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id"] + [s.label for s in snapshots])
        columns = [scenario_privacy(s) for s in snapshots]
        for j in range(snapshots[0].m):
            writer.writerow(
                [j + 1] + [format(col[j], ".12g") for col in columns]
            )


def write_mismatch_csv(
    path: str | Path,
    snapshots: Sequence[ConditionSnapshot],
    goals: Sequence[GoalSignal],
) -> None:
    """Per-scenario mismatch per condition and goal (mismatch figure)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["goal_level", "condition", "scenario_id", "abs_error"])
        for goal in goals:
            for snapshot in snapshots:
                report = mismatch(snapshot.aggregate_sharing(), goal)
                for j, err in enumerate(report.per_scenario, start=1):
                    writer.writerow(
                        [goal.level, snapshot.label, j, format(err, ".12g")]
                    )


def write_cost_csv(path: str | Path, reports: Sequence[CostReport]) -> None:
    """Cost per condition with the per-repetition scatter (cost figure)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "repetition", "cost_chf", "mean_chf", "sigma_chf"])
        for report in reports:
            for r, value in enumerate(report.per_repetition):
                writer.writerow(
                    [
                        report.label,
                        r,
                        format(value, ".12g"),
                        format(report.total, ".12g"),
                        format(report.sigma, ".12g"),
                    ]
                )
