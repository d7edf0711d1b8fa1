"""Experiment configuration and the reproducible end-to-end pipeline.

A pipeline run goes simulate (or ingest) -> goal signals -> portfolios ->
coordination -> metrics -> conjoint, writing plot-ready CSV/JSON artifacts
plus a manifest recording the config hash, all seeds, library versions and a
content hash per output file. Outputs are fully determined by the config, so
re-running with the same config reproduces every numeric file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .conjoint import (
    encode,
    fit,
    partworths,
    write_coefficients_csv,
    write_partworths_json,
    write_response_csv,
)
from .coordination import (
    CostWeights,
    coordinate,
    selection_summary,
    write_cost_trace_csv,
    write_portfolio_dir,
    write_runs_json,
)
from .errors import DataCollectiveError, InvalidInputError, PipelineError
from .goals import build_goal_signals, level_name, mismatch, write_goal_signal
from .ingest import export_responses, ingest, load_mapping
from .metrics import (
    ConditionSnapshot,
    collection_cost,
    privacy_recovery,
    reinforcement_report,
    scenario_privacy,
    write_cost_csv,
    write_mismatch_csv,
    write_scenario_privacy_csv,
)
from .population import (
    CONDITIONS,
    INTRINSIC,
    REWARDED1,
    REWARDED2,
    RNG_ALGORITHM,
    build_portfolios,
    default_behaviors,
    generate_population,
    simulate_condition,
)
from .retrieval import write_event_log
from .sharing import (
    Budget,
    RewardModel,
    default_catalog,
    read_catalog,
    write_weight_profiles,
)

OUTPUT_ENV_VAR = "DATACOLLECTIVE_OUTPUT"


@dataclass
class ExperimentConfig:
    """Everything a pipeline run depends on; JSON-serializable."""

    # scenario space and budget
    catalog_path: str | None = None
    budget_total: float = 17.5
    budget_participation: float = 2.5
    budget_sharing: float = 15.0
    reward_mode: str = "linear"
    z: int = 5
    # synthetic population (ignored when dataset paths are given)
    n: int = 84
    master_seed: int = 0
    steps: int = 192
    group_mix: dict[str, float] | None = None
    drift_overrides: dict[str, float] | None = None
    # dataset ingestion
    responses_path: str | None = None
    profiles_path: str | None = None
    mapping_path: str | None = None
    # coordination
    goal_level: int = 5
    alpha: float = 0.0
    beta: float = 0.0
    iterations: int = 50
    repetitions: int = 10
    children_per_node: int = 2
    coordination_seed: int = 0
    # output
    output_dir: str = field(
        default_factory=lambda: os.environ.get(OUTPUT_ENV_VAR, "out")
    )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    def experiment_dict(self) -> dict:
        """Config fields that define the experiment; where the artifacts land
        is not part of the experiment identity."""
        data = asdict(self)
        data.pop("output_dir")
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.experiment_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()

    def validate(self) -> None:
        """Fail fast: every referenced file must exist and parse before any
        computation starts."""
        if self.reward_mode not in ("linear", "geometric"):
            raise InvalidInputError(f"unknown reward mode '{self.reward_mode}'")
        Budget(self.budget_total, self.budget_participation, self.budget_sharing)
        CostWeights(self.alpha, self.beta)
        if not 1 <= self.goal_level <= self.z:
            raise InvalidInputError("goal level outside 1..z")
        if self.n < 1 or self.steps < 1 or self.iterations < 1 or self.repetitions < 1:
            raise InvalidInputError("counts must be positive")
        for label, path in (
            ("catalog_path", self.catalog_path),
            ("responses_path", self.responses_path),
            ("profiles_path", self.profiles_path),
            ("mapping_path", self.mapping_path),
        ):
            if path is not None and not Path(path).is_file():
                raise InvalidInputError(f"{label} '{path}' does not exist")
        if self.catalog_path is not None:
            read_catalog(self.catalog_path)
        if self.mapping_path is not None:
            load_mapping(self.mapping_path)

    def catalog(self):
        return read_catalog(self.catalog_path) if self.catalog_path else default_catalog()

    def reward_model(self) -> RewardModel:
        return RewardModel(
            budget=Budget(self.budget_total, self.budget_participation, self.budget_sharing),
            mode=self.reward_mode,
            z=self.z,
        )

    def behaviors(self):
        behaviors = default_behaviors(self.z)
        for kind, drift in (self.drift_overrides or {}).items():
            if kind not in behaviors:
                raise InvalidInputError(f"unknown group '{kind}' in drift_overrides")
            behaviors[kind] = replace(behaviors[kind], drift=drift)
        return behaviors


def run_pipeline(config: ExperimentConfig) -> Path:
    """Execute all stages; returns the artifact directory.

    Any stage failure aborts with the stage name and cause.
    """
    _stage("validate", config.validate)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    catalog = config.catalog()
    reward_model = config.reward_model()

    simulations, profiles = _stage(
        "ingest" if config.responses_path else "simulate",
        lambda: _collect_selections(config, catalog, reward_model, out),
    )
    goal_signals = _stage("goals", lambda: _goals_stage(simulations, out, config.z, catalog.m))
    portfolios = _stage("portfolios", lambda: _portfolio_stage(simulations, out))
    runs = _stage(
        "coordinate",
        lambda: _coordinate_stage(config, portfolios, goal_signals, out),
    )
    snapshots = _stage(
        "metrics",
        lambda: _metrics_stage(
            config, simulations, profiles, portfolios, runs, goal_signals, catalog,
            reward_model, out,
        ),
    )
    _stage("conjoint", lambda: _conjoint_stage(snapshots[INTRINSIC], catalog, out))
    _stage("manifest", lambda: _write_manifest(config, out))
    return out


def _stage(name: str, thunk):
    try:
        return thunk()
    except PipelineError:
        raise
    except (DataCollectiveError, OSError, ValueError) as exc:
        raise PipelineError(name, str(exc)) from exc


def _collect_selections(config, catalog, reward_model, out: Path):
    """Simulate a synthetic population, or ingest the configured dataset."""
    if config.responses_path:
        mapping = load_mapping(config.mapping_path)
        bundle, report = ingest(
            config.responses_path,
            config.profiles_path,
            mapping,
            catalog,
            z=config.z,
            provenance=str(config.responses_path),
        )
        (out / "ingest_report.json").write_text(
            json.dumps(
                {
                    "total_rows": report.total_rows,
                    "accepted": report.accepted,
                    "duplicates": report.duplicates,
                    "rejected": report.rejected,
                    "row_errors": report.row_errors[:100],
                    "warnings": report.warnings,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
        simulations = {}
        for condition in CONDITIONS:
            for pid, sv in bundle.selection_vectors(condition, catalog.m, config.z).items():
                simulations.setdefault(pid, {})[condition] = sv
        simulations = {
            pid: conds for pid, conds in simulations.items() if len(conds) == len(CONDITIONS)
        }
        if not simulations:
            raise InvalidInputError("no participant has all conditions in the dataset")
        profiles = bundle.profiles
        missing = [pid for pid in simulations if pid not in profiles]
        if missing:
            raise InvalidInputError(f"missing weight profiles for {missing[:5]}")
        return simulations, profiles

    population = generate_population(
        config.n,
        mix=config.group_mix,
        master_seed=config.master_seed,
        catalog=catalog,
        behaviors=config.behaviors(),
    )
    simulations = {}
    events_by_condition = {c: [] for c in CONDITIONS}
    for participant in population.participants:
        simulations[participant.participant_id] = {}
        for condition in CONDITIONS:
            selection, events = simulate_condition(
                participant, condition, config.steps, catalog, reward_model,
                contention=population.contention,
            )
            simulations[participant.participant_id][condition] = selection
            events_by_condition[condition].extend(events)
    profiles = {p.participant_id: p.profile for p in population.participants}

    export_responses(out / "selections.csv", simulations)
    write_weight_profiles(out / "profiles.csv", profiles.values(), catalog)
    for condition, events in events_by_condition.items():
        write_event_log(out / f"events_{condition}.csv", events)
    groups = {
        p.participant_id: p.behavior.kind for p in population.participants
    }
    (out / "groups.json").write_text(json.dumps(groups, indent=2, sort_keys=True) + "\n")
    return simulations, profiles


def _goals_stage(simulations, out: Path, z: int, m: int):
    intrinsic = [conds[INTRINSIC] for conds in simulations.values()]
    signals = build_goal_signals(intrinsic)
    for signal in signals:
        write_goal_signal(out / f"goal_{level_name(signal.level, z)}.csv", signal)
    return signals


def _portfolio_stage(simulations, out: Path):
    portfolios = build_portfolios(simulations)
    write_portfolio_dir(out / "portfolios", portfolios)
    return portfolios


def _coordinate_stage(config, portfolios, goal_signals, out: Path):
    goal = goal_signals[config.goal_level - 1]
    runs = coordinate(
        portfolios,
        goal,
        CostWeights(config.alpha, config.beta),
        iterations=config.iterations,
        repetitions=config.repetitions,
        seed=config.coordination_seed,
        children_per_node=config.children_per_node,
    )
    write_runs_json(out / "coordination_runs.json", runs)
    write_cost_trace_csv(out / "cost_trace.csv", runs)
    summary = selection_summary(runs, portfolios)
    (out / "coordination_summary.json").write_text(
        json.dumps(
            {
                "mean_cost": summary.mean_cost,
                "cost_std": summary.cost_std,
                "final_costs": [float(c) for c in summary.final_costs],
                "alpha": config.alpha,
                "beta": config.beta,
                "goal_level": config.goal_level,
                "selected_labels": {
                    agent: list(labels)
                    for agent, labels in zip(summary.agent_ids, summary.selected_labels)
                },
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return runs


def _metrics_stage(
    config, simulations, profiles, portfolios, runs, goal_signals, catalog,
    reward_model, out: Path,
):
    snapshots = {
        condition: ConditionSnapshot.from_selections(
            condition, {pid: conds[condition] for pid, conds in simulations.items()}
        )
        for condition in CONDITIONS
    }
    snapshots["coordinated"] = ConditionSnapshot.from_runs(
        "coordinated", runs, portfolios, z=config.z
    )
    ordered = [snapshots[c] for c in CONDITIONS] + [snapshots["coordinated"]]

    write_scenario_privacy_csv(out / "privacy_by_scenario.csv", ordered)
    lowest, highest = goal_signals[0], goal_signals[-1]
    write_mismatch_csv(out / "mismatch_by_scenario.csv", ordered, [lowest, highest])

    cost_reports = [
        collection_cost(snapshots[c], profiles, reward_model, catalog)
        for c in CONDITIONS
    ]
    cost_reports.append(
        collection_cost(snapshots["coordinated"], profiles, reward_model, catalog)
    )
    cost_reports.append(
        collection_cost(
            snapshots["coordinated"], profiles, reward_model, catalog,
            include_intrinsic_value=False, label="coordinated_no_intrinsic",
        )
    )
    write_cost_csv(out / "costs.csv", cost_reports)

    rewarded_both = ConditionSnapshot(
        label="rewarded",
        participant_ids=snapshots[REWARDED1].participant_ids,
        selections=np.concatenate(
            [snapshots[REWARDED1].selections, snapshots[REWARDED2].selections]
        ),
        z=config.z,
    )
    recovery = privacy_recovery(rewarded_both, snapshots["coordinated"], snapshots[INTRINSIC])
    reinforcement = reinforcement_report(snapshots[INTRINSIC], catalog)
    summary = {
        "privacy_recovery_percent": None if recovery.undefined else recovery.percent,
        "mean_privacy": {s.label: s.mean_privacy() for s in ordered},
        "mean_mismatch": {
            f"{s.label}/goal_{level_name(g.level, config.z)}": mismatch(
                s.aggregate_sharing(), g
            ).mean_abs
            for s in ordered
            for g in (lowest, highest)
        },
        "costs_chf": {r.label: r.total for r in cost_reports},
        "cost_sigma_chf": {r.label: r.sigma for r in cost_reports},
        "reinforcement_intrinsic": {
            label: None if np.isnan(value) else float(value)
            for label, value in zip(
                reinforcement.element_labels, reinforcement.reinforcement
            )
        },
    }
    (out / "evaluation.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    if config.responses_path:
        # Comparison report for externally collected archives.
        (out / "comparison_report.json").write_text(
            json.dumps(
                {
                    "costs_chf": summary["costs_chf"],
                    "privacy_recovery_percent": summary["privacy_recovery_percent"],
                    "mean_mismatch": summary["mean_mismatch"],
                    "provenance": str(config.responses_path),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
    return snapshots


def _conjoint_stage(intrinsic_snapshot, catalog, out: Path):
    response = scenario_privacy(intrinsic_snapshot)
    write_response_csv(out / "response_intrinsic_privacy.csv", response)
    design = encode(catalog)
    fit_result = fit(design, response)
    write_coefficients_csv(out / "conjoint_coefficients.csv", fit_result)
    write_partworths_json(out / "partworths.json", partworths(fit_result))


def _write_manifest(config: ExperimentConfig, out: Path) -> None:
    files = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[str(path.relative_to(out))] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    manifest = {
        "config": config.experiment_dict(),
        "config_hash": config.config_hash(),
        "seeds": {
            "master_seed": config.master_seed,
            "coordination_seed": config.coordination_seed,
        },
        "rng_algorithm": RNG_ALGORITHM,
        "versions": {
            "datacollective": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "files": files,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
