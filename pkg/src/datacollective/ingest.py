"""Dataset ingestion into a canonical bundle.

External archives rarely match our column names, so ingestion is driven by a
mapping config: which source column holds the participant id, condition,
scenario id, selection and (optionally) timestamp, plus how condition values
translate to the canonical labels. Rows that fail validation are reported
with their line numbers and counted, never silently dropped; duplicate
(participant, condition, scenario) rows resolve to the latest timestamp.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import IngestError
from .sharing import ScenarioCatalog, SelectionVector, WeightProfile, read_weight_profiles

REQUIRED_COLUMNS = ("participant_id", "condition", "scenario_id", "selection")

DEFAULT_MAPPING = {
    "participant_id": "participant_id",
    "condition": "condition",
    "scenario_id": "scenario_id",
    "selection": "selection",
    "timestamp": "timestamp",
    "condition_values": {},
}


@dataclass(frozen=True)
class ResponseRow:
    participant_id: str
    condition: str
    scenario_id: int
    selection: int
    timestamp: float = 0.0


@dataclass
class IngestReport:
    total_rows: int = 0
    accepted: int = 0
    duplicates: int = 0
    row_errors: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def rejected(self) -> int:
        return len(self.row_errors)


@dataclass(frozen=True)
class DatasetBundle:
    """Canonical view of an ingested archive."""

    responses: tuple[ResponseRow, ...]
    profiles: dict[str, WeightProfile]
    provenance: str = ""

    def conditions(self) -> set[str]:
        return {r.condition for r in self.responses}

    def participants(self) -> set[str]:
        return {r.participant_id for r in self.responses}

    def selection_vectors(
        self, condition: str, m: int, z: int = 5
    ) -> dict[str, SelectionVector]:
        """Per-participant vectors for one condition; participants with an
        incomplete set of scenarios are skipped."""
        per_participant: dict[str, dict[int, int]] = {}
        for row in self.responses:
            if row.condition != condition:
                continue
            per_participant.setdefault(row.participant_id, {})[row.scenario_id] = row.selection
        vectors = {}
        for pid in sorted(per_participant):
            answers = per_participant[pid]
            if len(answers) != m:
                continue
            vectors[pid] = SelectionVector(
                np.array([answers[j] for j in range(1, m + 1)]), z
            )
        return vectors


def load_mapping(path: str | Path | None) -> dict:
    mapping = dict(DEFAULT_MAPPING)
    if path is not None:
        loaded = json.loads(Path(path).read_text())
        mapping.update(loaded)
    return mapping


def ingest(
    responses_path: str | Path,
    profiles_path: str | Path | None = None,
    mapping: Mapping | None = None,
    catalog: ScenarioCatalog | None = None,
    z: int = 5,
    provenance: str = "",
) -> tuple[DatasetBundle, IngestReport]:
    """Read an archive into the canonical bundle, validating every row."""
    mapping = {**DEFAULT_MAPPING, **(mapping or {})}
    condition_values = mapping.get("condition_values") or {}
    report = IngestReport()
    m_limit = catalog.m if catalog is not None else None

    rows: dict[tuple[str, str, int], ResponseRow] = {}
    with open(responses_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{responses_path}: empty file, header required")
        positions = {}
        for key in REQUIRED_COLUMNS:
            column = mapping[key]
            if column not in header:
                raise IngestError(
                    f"{responses_path}: required column '{column}' (for {key}) not found"
                )
            positions[key] = header.index(column)
        ts_column = mapping.get("timestamp")
        ts_pos = header.index(ts_column) if ts_column in header else None

        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            report.total_rows += 1
            try:
                parsed = _parse_row(row, positions, ts_pos, condition_values, z, m_limit)
            except ValueError as exc:
                report.row_errors.append((lineno, str(exc)))
                continue
            key = (parsed.participant_id, parsed.condition, parsed.scenario_id)
            if key in rows:
                report.duplicates += 1
                if parsed.timestamp >= rows[key].timestamp:
                    rows[key] = parsed
            else:
                rows[key] = parsed
            report.accepted += 1

    if report.total_rows == 0:
        report.warnings.append(f"{responses_path}: no data rows")

    profiles: dict[str, WeightProfile] = {}
    if profiles_path is not None:
        if catalog is None:
            raise IngestError("profiles ingestion requires a catalog")
        profiles = {
            p.participant_id: p for p in read_weight_profiles(profiles_path, catalog)
        }

    ordered = tuple(rows[key] for key in sorted(rows))
    return DatasetBundle(responses=ordered, profiles=profiles, provenance=provenance), report


def _parse_row(
    row: Sequence[str],
    positions: Mapping[str, int],
    ts_pos: int | None,
    condition_values: Mapping[str, str],
    z: int,
    m_limit: int | None,
) -> ResponseRow:
    try:
        pid = row[positions["participant_id"]].strip()
        raw_condition = row[positions["condition"]].strip()
        scenario_id = int(row[positions["scenario_id"]])
        selection = int(row[positions["selection"]])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"unparseable row: {exc}")
    if not pid:
        raise ValueError("empty participant id")
    condition = condition_values.get(raw_condition, raw_condition)
    if scenario_id < 1 or (m_limit is not None and scenario_id > m_limit):
        raise ValueError(f"scenario id {scenario_id} out of range")
    if not 1 <= selection <= z:
        raise ValueError(f"selection {selection} outside 1..{z}")
    timestamp = 0.0
    if ts_pos is not None and ts_pos < len(row) and row[ts_pos].strip():
        try:
            timestamp = float(row[ts_pos])
        except ValueError:
            raise ValueError(f"unparseable timestamp '{row[ts_pos]}'")
    return ResponseRow(pid, condition, scenario_id, selection, timestamp)


def export_responses(
    path: str | Path,
    simulations: Mapping[str, Mapping[str, SelectionVector]],
) -> None:
    """Write simulated selections in the canonical response schema, so a
    round trip through ingest reproduces them exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["participant_id", "condition", "scenario_id", "selection", "timestamp"])
        for pid in sorted(simulations):
            for condition in sorted(simulations[pid]):
                sv = simulations[pid][condition]
                for j, s in enumerate(sv.selections, start=1):
                    writer.writerow([pid, condition, j, int(s), 0])
