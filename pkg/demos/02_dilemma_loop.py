"""One participant working the privacy-reward dilemma loop.

The engine retrieves, on demand, the scenario whose best option most
improves the chosen goal. We start from moderate choices, chase rewards for
a while, then switch to recovering privacy, and watch the balance move.

Run with: python demos/02_dilemma_loop.py
"""

import numpy as np

from datacollective import (
    IMPROVE_PRIVACY,
    IMPROVE_REWARDS,
    BalanceState,
    RewardModel,
    SelectionVector,
    WeightProfile,
    apply_choice,
    default_catalog,
    improvement,
    improvement_box,
    retrieve_next,
)

catalog = default_catalog()
profile = WeightProfile.uniform(catalog, "demo")
model = RewardModel()
rmax = model.max_rewards(profile, catalog)

state = BalanceState.from_selection(
    SelectionVector(np.full(64, 3)), rmax, model
)
print(f"start: privacy {state.privacy:.3f}, rewards {state.accumulated_rewards:.2f} CHF")

print("\nchasing rewards for 10 dilemmas:")
for step in range(10):
    scenario = retrieve_next(state, IMPROVE_REWARDS)
    if scenario is None:
        print("  saturated, nothing left to improve")
        break
    box = improvement_box(state, scenario, IMPROVE_REWARDS)
    deltas = improvement(state, scenario, IMPROVE_REWARDS)
    best = int(np.argmax(deltas)) + 1
    state = apply_choice(state, scenario, best)
    print(f"  scenario {scenario:2d}: box {sorted(box)} -> chose {best}; "
          f"privacy {state.privacy:.3f}, rewards {state.accumulated_rewards:.2f}")

print("\nnow recovering privacy for 10 dilemmas:")
for step in range(10):
    scenario = retrieve_next(state, IMPROVE_PRIVACY)
    if scenario is None:
        print("  saturated")
        break
    best = int(np.argmax(improvement(state, scenario, IMPROVE_PRIVACY))) + 1
    state = apply_choice(state, scenario, best)
    print(f"  scenario {scenario:2d}: chose {best}; "
          f"privacy {state.privacy:.3f}, rewards {state.accumulated_rewards:.2f}")

print(f"\nfinal: privacy {state.privacy:.3f}, rewards {state.accumulated_rewards:.2f} CHF")
