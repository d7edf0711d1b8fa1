"""Synthetic participant populations exhibiting the five group behaviors.

Each group pairs a sharing-level policy for unrewarded choices with one for
rewarded first-pass choices, plus a drift that biases which goal (privacy or
rewards) a participant pursues during reassessment rounds. Unrewarded
choices additionally polarize on contentious scenarios: each population
draws a latent per-scenario contention trait, and groups with an extreme
level snap toward it there (preservers toward sharing nothing, ignorants and
seekers toward sharing everything). Rewards flatten this scenario structure,
so rewarded first passes ignore contention. The polarization is what gives
unrewarded aggregates their scenario shape; without it, goal signals would
be pure sampling noise.

Populations are generated deterministically from a master seed (numpy PCG64
streams), and each participant's three conditions yield a plan portfolio for
coordination. Group extraction from (intrinsic, rewarded) privacy pairs uses
seeded k-means++ with Lloyd iterations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .coordination import Plan, PlanPortfolio
from .errors import IncompletePortfolioError, InvalidInputError
from .retrieval import (
    IMPROVE_PRIVACY,
    IMPROVE_REWARDS,
    BalanceState,
    Event,
    apply_choice,
    improvement_box,
    retrieve_next,
)
from .sharing import (
    RewardModel,
    ScenarioCatalog,
    SelectionVector,
    WeightProfile,
    default_catalog,
)

RNG_ALGORITHM = "numpy-pcg64"  # recorded in manifests for portability

PRIVACY_IGNORANT = "privacy_ignorant"
PRIVACY_NEUTRAL = "privacy_neutral"
PRIVACY_PRESERVER = "privacy_preserver"
REWARD_SEEKER = "reward_seeker"
REWARD_OPPORTUNIST = "reward_opportunist"

GROUP_ORDER = (
    PRIVACY_IGNORANT,
    PRIVACY_NEUTRAL,
    PRIVACY_PRESERVER,
    REWARD_SEEKER,
    REWARD_OPPORTUNIST,
)

INTRINSIC = "intrinsic"
REWARDED1 = "rewarded1"
REWARDED2 = "rewarded2"
CONDITIONS = (INTRINSIC, REWARDED1, REWARDED2)

POLICY_TOL = 1e-9


@dataclass(frozen=True)
class GroupBehavior:
    """Level policies and reassessment drift for one behavioral group.

    ``drift`` is a signed fraction in [-1, 1]; positive values bias
    reassessment goals toward improving privacy, negative toward rewards.
    ``extreme_level`` is the level the group snaps toward on contentious
    scenarios during unrewarded choices, with strength ``polarization``.
    """

    kind: str
    intrinsic_policy: np.ndarray
    rewarded_policy: np.ndarray
    drift: float
    polarization: float = 0.0
    extreme_level: int | None = None

    def __post_init__(self):
        ip = np.asarray(self.intrinsic_policy, dtype=float)
        rp = np.asarray(self.rewarded_policy, dtype=float)
        object.__setattr__(self, "intrinsic_policy", ip)
        object.__setattr__(self, "rewarded_policy", rp)
        for name, p in (("intrinsic", ip), ("rewarded", rp)):
            if p.ndim != 1 or p.size < 2:
                raise InvalidInputError(f"{name} policy must cover >= 2 levels")
            if np.any(p < 0) or abs(p.sum() - 1.0) > POLICY_TOL:
                raise InvalidInputError(f"{name} policy must be a distribution")
        if not -1.0 <= self.drift <= 1.0:
            raise InvalidInputError("drift must lie in [-1, 1]")
        if not 0.0 <= self.polarization <= 1.0:
            raise InvalidInputError("polarization must lie in [0, 1]")
        if self.extreme_level is not None and not 1 <= self.extreme_level <= self.z:
            raise InvalidInputError("extreme level outside 1..z")

    @property
    def z(self) -> int:
        return int(self.intrinsic_policy.size)


def level_distribution(center: int, z: int = 5, spread: float = 1.0) -> np.ndarray:
    """Discrete distribution over levels 1..z decaying away from ``center``."""
    if not 1 <= center <= z:
        raise InvalidInputError(f"center {center} outside 1..{z}")
    levels = np.arange(1, z + 1)
    weights = np.exp(-np.abs(levels - center) / spread)
    return weights / weights.sum()


def default_behaviors(z: int = 5) -> dict[str, GroupBehavior]:
    """Qualitative defaults: centers at low/moderate/high sharing with unit
    spread, drifts signed to match the observed reassessment trends, and
    polarization strengths calibrated so unrewarded aggregates track the
    goal-signal shapes better than rewarded ones."""
    low_sharing = level_distribution(z, z)       # mass near "share nothing"
    moderate = level_distribution((z + 1) // 2, z)
    high_sharing = level_distribution(1, z)      # mass near "share all"
    return {
        PRIVACY_IGNORANT: GroupBehavior(
            PRIVACY_IGNORANT, high_sharing, high_sharing, drift=-0.6,
            polarization=0.9, extreme_level=1,
        ),
        PRIVACY_NEUTRAL: GroupBehavior(
            PRIVACY_NEUTRAL, moderate, moderate, drift=0.1,
        ),
        PRIVACY_PRESERVER: GroupBehavior(
            PRIVACY_PRESERVER, low_sharing, low_sharing, drift=0.3,
            polarization=1.0, extreme_level=z,
        ),
        REWARD_SEEKER: GroupBehavior(
            REWARD_SEEKER, moderate, high_sharing, drift=-0.5,
            polarization=0.8, extreme_level=1,
        ),
        REWARD_OPPORTUNIST: GroupBehavior(
            REWARD_OPPORTUNIST, low_sharing, high_sharing, drift=-0.3,
            polarization=1.0, extreme_level=z,
        ),
    }


# Group split matching the observed population: the preserver/opportunist
# pair totals 26.2%, the neutral/seeker pair 57.14%, ignorants the rest;
# pairs are split evenly between their two members.
DEFAULT_GROUP_MIX = {
    PRIVACY_IGNORANT: 0.1666,
    PRIVACY_NEUTRAL: 0.28570,
    PRIVACY_PRESERVER: 0.1310,
    REWARD_SEEKER: 0.28570,
    REWARD_OPPORTUNIST: 0.1310,
}


@dataclass(frozen=True)
class Participant:
    profile: WeightProfile
    behavior: GroupBehavior
    seed: int

    @property
    def participant_id(self) -> str:
        return self.profile.participant_id


@dataclass(frozen=True)
class SyntheticPopulation:
    """Participants plus the population-level contention trait per scenario
    (1 marks contentious scenarios where choices polarize)."""

    participants: tuple[Participant, ...]
    group_mix: Mapping[str, float]
    master_seed: int
    contention: np.ndarray | None = None

    def group_counts(self) -> dict[str, int]:
        counts = {kind: 0 for kind in GROUP_ORDER}
        for p in self.participants:
            counts[p.behavior.kind] += 1
        return counts


def largest_remainder_counts(n: int, fractions: Sequence[float]) -> list[int]:
    """Integer counts summing to n, faithful to fractions via largest remainder.

    Remainder ties resolve toward earlier positions, so the split is
    deterministic for a fixed fraction order.
    """
    if n < 0:
        raise InvalidInputError("count must be non-negative")
    fr = np.asarray(fractions, dtype=float)
    if np.any(fr < 0):
        raise InvalidInputError("fractions must be non-negative")
    if abs(fr.sum() - 1.0) > 1e-9:
        raise InvalidInputError("fractions must sum to 1")
    raw = n * fr
    counts = np.floor(raw).astype(int)
    remainders = raw - counts
    leftover = n - int(counts.sum())
    # argsort is stable, so equal remainders keep their original order
    order = np.argsort(-remainders, kind="stable")
    for idx in order[:leftover]:
        counts[idx] += 1
    return counts.tolist()


def generate_population(
    n: int,
    mix: Mapping[str, float] | None = None,
    master_seed: int = 0,
    catalog: ScenarioCatalog | None = None,
    behaviors: Mapping[str, GroupBehavior] | None = None,
) -> SyntheticPopulation:
    """Deterministically generate n participants with group-faithful counts.

    Weight profiles are drawn as random 5-point intrusion answers and
    normalized, so reward allocations vary across participants.
    """
    if n < 1:
        raise InvalidInputError("population size must be >= 1")
    catalog = catalog or default_catalog()
    behaviors = dict(behaviors or default_behaviors())
    mix = dict(mix or DEFAULT_GROUP_MIX)
    for kind in mix:
        if kind not in behaviors:
            raise InvalidInputError(f"no behavior defined for group '{kind}'")
    kinds = [k for k in GROUP_ORDER if k in mix] + [
        k for k in mix if k not in GROUP_ORDER
    ]
    counts = largest_remainder_counts(n, [mix[k] for k in kinds])

    root = np.random.SeedSequence(master_seed)
    streams = root.spawn(n + 1)
    participant_seeds, contention_seed = streams[:n], streams[n]
    # Half the scenarios are contentious; which half is a population trait.
    contention_rng = np.random.default_rng(contention_seed)
    contention = (contention_rng.permutation(catalog.m) >= catalog.m // 2).astype(float)
    participants = []
    idx = 0
    for kind, count in zip(kinds, counts):
        for _ in range(count):
            seq = participant_seeds[idx]
            rng = np.random.default_rng(seq)
            profile = _random_profile(f"p{idx:04d}", catalog, rng)
            participants.append(
                Participant(
                    profile=profile,
                    behavior=behaviors[kind],
                    seed=int(seq.generate_state(1, np.uint64)[0]),
                )
            )
            idx += 1
    return SyntheticPopulation(
        participants=tuple(participants),
        group_mix=mix,
        master_seed=master_seed,
        contention=contention,
    )


def _random_profile(
    participant_id: str, catalog: ScenarioCatalog, rng: np.random.Generator
) -> WeightProfile:
    crit = rng.integers(1, 6, size=catalog.k).astype(float)
    elems = tuple(rng.integers(1, 6, size=q).astype(float) for q in catalog.sizes)
    return WeightProfile(
        participant_id=participant_id,
        criterion_weights=crit / crit.sum(),
        element_weights=tuple(e / e.sum() for e in elems),
    )


def _condition_rng(participant: Participant, condition: str) -> np.random.Generator:
    key = CONDITIONS.index(condition)
    return np.random.default_rng(
        np.random.SeedSequence(participant.seed, spawn_key=(key,))
    )


def simulate_condition(
    participant: Participant,
    condition: str,
    steps: int,
    catalog: ScenarioCatalog | None = None,
    reward_model: RewardModel | None = None,
    contention: np.ndarray | None = None,
) -> tuple[SelectionVector, list[Event]]:
    """Simulate one condition for one participant.

    Unrewarded: each scenario is answered once from the intrinsic policy,
    polarized toward the group's extreme level on contentious scenarios.
    Rewarded: the first pass answers all scenarios from the rewarded policy,
    then the remaining steps are reassessment rounds driven through the
    retrieval engine; the group drift biases the chosen goal, and the applied
    option is drawn uniformly from the improvement box.
    """
    if condition not in CONDITIONS:
        raise InvalidInputError(f"unknown condition '{condition}'")
    catalog = catalog or default_catalog()
    reward_model = reward_model or RewardModel()
    z = reward_model.z
    m = catalog.m
    behavior = participant.behavior
    if behavior.z != z:
        raise InvalidInputError("behavior policies do not cover the level count")
    rng = _condition_rng(participant, condition)
    rmax = reward_model.max_rewards(participant.profile, catalog)
    pid = participant.participant_id

    if condition == INTRINSIC:
        first_pass = _draw_intrinsic(behavior, m, rng, contention)
    else:
        first_pass = rng.choice(np.arange(1, z + 1), size=m, p=behavior.rewarded_policy)
    events = []
    # Unanswered scenarios count as share-nothing, so the balance builds up
    # question by question exactly as the log replays it.
    running = SelectionVector(np.full(m, z, dtype=np.intp), z)
    running_state = BalanceState.from_selection(running, rmax, reward_model)
    for j in range(1, m + 1):
        running_state = apply_choice(running_state, j, int(first_pass[j - 1]))
        events.append(
            Event(pid, j, "first_pass", j, int(first_pass[j - 1]),
                  running_state.accumulated_rewards, running_state.privacy)
        )
    state = running_state

    if condition == INTRINSIC:
        return state.selection, events

    if steps < m:
        raise InvalidInputError("rewarded conditions need steps >= scenario count")
    p_privacy = min(1.0, max(0.0, 0.5 + behavior.drift))
    for step in range(m + 1, steps + 1):
        goal = IMPROVE_PRIVACY if rng.random() < p_privacy else IMPROVE_REWARDS
        scenario_id = retrieve_next(state, goal)
        if scenario_id is None:
            goal = IMPROVE_REWARDS if goal == IMPROVE_PRIVACY else IMPROVE_PRIVACY
            scenario_id = retrieve_next(state, goal)
            if scenario_id is None:
                break  # both directions saturated, nothing left to serve
        box = sorted(improvement_box(state, scenario_id, goal))
        option = int(rng.choice(box))
        state = apply_choice(state, scenario_id, option)
        events.append(
            Event(pid, step, goal, scenario_id, option,
                  state.accumulated_rewards, state.privacy)
        )
    return state.selection, events


def _draw_intrinsic(
    behavior: GroupBehavior,
    m: int,
    rng: np.random.Generator,
    contention: np.ndarray | None,
) -> np.ndarray:
    """Draw unrewarded levels, mixing each scenario's policy toward the
    group's extreme level in proportion to polarization * contention."""
    z = behavior.z
    base = behavior.intrinsic_policy
    if (
        contention is None
        or behavior.extreme_level is None
        or behavior.polarization == 0.0
    ):
        return rng.choice(np.arange(1, z + 1), size=m, p=base)
    contention = np.asarray(contention, dtype=float)
    if contention.shape != (m,):
        raise InvalidInputError("contention length does not match scenario count")
    extreme = np.zeros(z)
    extreme[behavior.extreme_level - 1] = 1.0
    mix = behavior.polarization * contention[:, None]
    policies = (1.0 - mix) * base[None, :] + mix * extreme[None, :]
    cumulative = np.cumsum(policies, axis=1)
    draws = rng.random((m, 1))
    # cumulative sums can land a hair below 1; a draw in that sliver must
    # still map to the last level
    levels = np.minimum((draws > cumulative).sum(axis=1), z - 1)
    return levels.astype(np.intp) + 1


def simulate_population(
    population: SyntheticPopulation,
    steps: int = 192,
    catalog: ScenarioCatalog | None = None,
    reward_model: RewardModel | None = None,
    conditions: Sequence[str] = CONDITIONS,
) -> dict[str, dict[str, SelectionVector]]:
    """Run the requested conditions for every participant.

    Returns {participant_id: {condition: SelectionVector}}. Event logs are
    dropped here; use simulate_condition directly when the log matters.
    """
    results: dict[str, dict[str, SelectionVector]] = {}
    for participant in population.participants:
        per_condition = {}
        for condition in conditions:
            selection, _ = simulate_condition(
                participant, condition, steps, catalog, reward_model,
                contention=population.contention,
            )
            per_condition[condition] = selection
        results[participant.participant_id] = per_condition
    return results


def build_portfolio(
    participant_id: str,
    conditions: Mapping[str, SelectionVector],
    required: Sequence[str] = CONDITIONS,
) -> PlanPortfolio:
    """Turn a participant's per-condition selections into candidate plans.

    Plan values are normalized shared-data levels (z - s)/(z - 1); the local
    privacy cost of a plan is the mean of its values.
    """
    missing = [c for c in required if c not in conditions]
    if missing:
        raise IncompletePortfolioError(
            f"participant '{participant_id}' lacks conditions: {missing}"
        )
    plans = []
    for condition in required:
        sv = conditions[condition]
        values = (sv.z - sv.selections) / (sv.z - 1)
        plans.append(Plan(values=values, local_cost=float(values.mean()), label=condition))
    return PlanPortfolio(agent_id=participant_id, plans=tuple(plans))


def build_portfolios(
    simulations: Mapping[str, Mapping[str, SelectionVector]],
    required: Sequence[str] = CONDITIONS,
) -> list[PlanPortfolio]:
    return [
        build_portfolio(pid, conditions, required)
        for pid, conditions in simulations.items()
    ]


# ---------------------------------------------------------------------------
# Population spec files: JSON with n, mix, z, seed and policy overrides.

def load_population_spec(path) -> dict:
    spec = json.loads(Path(path).read_text())
    known = {"n", "mix", "z", "seed", "steps", "drift_overrides", "policy_overrides"}
    unknown = set(spec) - known
    if unknown:
        raise InvalidInputError(f"unknown population spec keys: {sorted(unknown)}")
    if "n" not in spec:
        raise InvalidInputError("population spec needs 'n'")
    return spec


_OVERRIDABLE_FIELDS = {
    "intrinsic_policy",
    "rewarded_policy",
    "drift",
    "polarization",
    "extreme_level",
}


def population_from_spec(
    spec: Mapping, catalog: ScenarioCatalog | None = None
) -> SyntheticPopulation:
    z = int(spec.get("z", 5))
    behaviors = default_behaviors(z)
    for kind, drift in (spec.get("drift_overrides") or {}).items():
        if kind not in behaviors:
            raise InvalidInputError(f"unknown group '{kind}' in drift_overrides")
        behaviors[kind] = replace(behaviors[kind], drift=float(drift))
    for kind, fields in (spec.get("policy_overrides") or {}).items():
        if kind not in behaviors:
            raise InvalidInputError(f"unknown group '{kind}' in policy_overrides")
        unknown = set(fields) - _OVERRIDABLE_FIELDS
        if unknown:
            raise InvalidInputError(
                f"unknown policy override fields for '{kind}': {sorted(unknown)}"
            )
        updates = {
            key: np.asarray(value, dtype=float) if key.endswith("_policy") else value
            for key, value in fields.items()
        }
        behaviors[kind] = replace(behaviors[kind], **updates)
    return generate_population(
        int(spec["n"]),
        mix=spec.get("mix"),
        master_seed=int(spec.get("seed", 0)),
        catalog=catalog,
        behaviors=behaviors,
    )


# ---------------------------------------------------------------------------
# Group extraction: seeded k-means++ with Lloyd iterations.

@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...] = field(default=())


def extract_groups(
    points: np.ndarray | Sequence[Sequence[float]],
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-9,
) -> KMeansResult:
    """Cluster behavior points (typically intrinsic vs. rewarded privacy).

    k-means++ initialization and Lloyd updates, deterministic for a given
    seed. An emptied cluster is re-seeded from the point farthest from its
    assigned centroid.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if k < 1:
        raise InvalidInputError("cluster count must be >= 1")
    if n < k:
        raise InvalidInputError(f"need at least {k} points, got {n}")
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(pts, k, rng)

    history = []
    labels = np.zeros(n, dtype=np.intp)
    for iteration in range(1, max_iter + 1):
        d2 = _sq_distances(pts, centroids)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), labels].sum()))
        new_centroids = centroids.copy()
        for c in range(k):
            members = pts[labels == c]
            if members.shape[0] == 0:
                # re-seed from the point farthest from its current centroid
                farthest = int(np.argmax(d2[np.arange(n), labels]))
                new_centroids[c] = pts[farthest]
                labels[farthest] = c
            else:
                new_centroids[c] = members.mean(axis=0)
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < tol:
            break
    d2 = _sq_distances(pts, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return KMeansResult(
        labels=labels,
        centroids=centroids,
        inertia=inertia,
        n_iter=iteration,
        inertia_history=tuple(history),
    )


def _kmeans_pp_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centroids = np.empty((k, pts.shape[1]), dtype=float)
    centroids[0] = pts[rng.integers(n)]
    d2 = np.sum((pts - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = pts[rng.integers(n)]
            continue
        probs = d2 / total
        centroids[c] = pts[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((pts - centroids[c]) ** 2, axis=1))
    return centroids


def _sq_distances(pts: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
