"""Scenario replay and event-sourced determinism.

Scenario scripts drive the engine through timed events with inline
expectations; the engine logs every mutation as an event, and folding
the log back rebuilds byte-identical state.
"""

from pathlib import Path

from homegate.engine import Engine
from homegate.simulator import ScenarioScript, format_report, generate_load, run
from homegate.store import canonical_json

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Replay a bundled scenario: the temporary-guest story.
script = ScenarioScript.load(FIXTURES / "golden_temporary.scn")
report = run(script)
print(format_report(report))

# The run's engine logged everything it did; replaying that log yields a
# snapshot that matches the live state byte for byte.
live = report.engine
replayed = Engine.replay(live.store.events())
assert canonical_json(replayed.snapshot_doc()) == canonical_json(live.snapshot_doc())
print(f"\nreplayed {len(live.store.events())} events -> identical snapshot  ok")

# Synthetic load scripts are seeded and deterministic: same seed, same
# script, same conflicts - only wall-clock latency varies.
small = run(generate_load(n_policies=5, n_users=4, n_devices=8, seed=42))
large = run(generate_load(n_policies=60, n_users=6, n_devices=16, seed=42))
print(f"\n 5 policies: decision latency {small.decision_latency.to_doc()}")
print(f"60 policies: decision latency {large.decision_latency.to_doc()}")
print(f"conflicts found at 60 policies: {large.conflict_counts}")
