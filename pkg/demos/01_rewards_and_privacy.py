"""Personalized rewards and privacy over the factorial scenario space.

Walks through the core model: enumerate the 4x4x4 catalog, weight it with a
participant's privacy sensitivities, allocate a monetary pool across the 64
scenarios, and trade rewards against privacy through the five sharing
levels. Ends with the four privacy valuation schemes.

Run with: python demos/01_rewards_and_privacy.py
"""

import numpy as np

from datacollective import (
    Budget,
    RewardModel,
    SelectionVector,
    ValuationScheme,
    WeightProfile,
    default_catalog,
    geometric_rewards,
    linear_rewards,
    max_rewards,
    privacy_cost,
    privacy_score,
)
from datacollective.sharing import (
    ABSOLUTE_SACRIFICED_REWARDS,
    ABSOLUTE_SHARED_DATA,
    RELATIVE_SACRIFICED_REWARDS,
    RELATIVE_SHARED_DATA,
)

catalog = default_catalog()
print(f"catalog: {catalog.k} criteria, {catalog.m} scenarios")
print("first scenarios:", ", ".join(catalog.scenario_labels()[:4]), "...")

# A participant who cares most about who collects the data.
profile = WeightProfile.from_likert(
    "demo",
    criterion_answers=["medium", "very high", "low"],
    element_answers=[
        ["low", "low", "medium", "very high"],      # acc lig noi gps
        ["very high", "medium", "high", "low"],     # cor ngo gov edu
        ["high", "low", "medium", "medium"],        # soc env tra hea
    ],
)
print("\ncriterion weights:", np.round(profile.criterion_weights, 3))

pool = Budget().sharing
rmax = max_rewards(profile, catalog, pool)
print(f"rewards pool {pool} CHF allocated over scenarios;",
      f"sum = {rmax.sum():.6f} CHF (conserved)")
top = np.argsort(rmax)[::-1][:3]
labels = catalog.scenario_labels()
print("most rewarded scenarios:",
      ", ".join(f"{labels[j]} ({rmax[j]:.3f} CHF)" for j in top))

print("\nreward progressions for one scenario (rmax = 1 CHF):")
budget = Budget()
print("level  linear  geometric")
for level in range(1, 6):
    lin = linear_rewards(1.0, level, 5)
    geo = geometric_rewards(1.0, level, 5, budget)
    print(f"  {level}    {lin:.4f}  {geo:.4f}")

rng = np.random.default_rng(0)
selection = SelectionVector(rng.integers(1, 6, size=64))
model = RewardModel()
gained = model.total_rewards(rmax, selection)
print(f"\nrandom selections: privacy {privacy_score(selection):.3f}, "
      f"rewards {gained:.2f} of {pool} CHF")

print("\nprivacy cost of those rewards under the four valuations:")
baseline = 4.0  # hypothetical rewards of the same person without incentives
for kind in (ABSOLUTE_SHARED_DATA, ABSOLUTE_SACRIFICED_REWARDS,
             RELATIVE_SHARED_DATA, RELATIVE_SACRIFICED_REWARDS):
    scheme = ValuationScheme(kind, intrinsic_rewards=baseline)
    print(f"  {kind:28s} {privacy_cost(gained, scheme, pool):+.2f} CHF")
