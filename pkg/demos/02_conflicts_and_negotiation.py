"""Walk through the five conflict classes and how each one resolves.

Two clauses interfere when they target the same device and their subject
sets intersect. Interference classifies as a restriction conflict (RC),
hard or soft, and priority (different classes) or competition (equal
classes): and each class has its own resolution.
"""

from homegate import DevicePolicy, Engine, UserRecord


def fresh_household(alice_class, bob_class):
    engine = Engine()
    engine.bootstrap("owner")
    engine.add_user(UserRecord(commander="owner", user="alice", priority=alice_class))
    engine.add_user(UserRecord(commander="owner", user="bob", priority=bob_class))
    return engine


def thermostat_demand(owner, lo, hi):
    return f"@{owner}\ndemand :: ~ : thermostat_1 : temperature in [{lo}-{hi}] ;"


def enforced_ranges(engine):
    out = []
    for cid in engine.state.enforced:
        cond = engine.state.clauses[cid].condition_for("temperature")
        if cond:
            out.append((cond.low, cond.high))
    return out


# --- hard priority conflict: disjoint ranges, different classes -------------
engine = fresh_household(1, 2)
engine.submit_policy_text(thermostat_demand("alice", 60, 70))
result = engine.submit_policy_text(thermostat_demand("bob", 75, 80))
print("HPC:", [r.conflict_class.value for r in result.reports],
      "-> enforced", enforced_ranges(engine))   # alice's 60-70 stands

# --- soft priority conflict: overlap, different classes ---------------------
engine = fresh_household(1, 2)
engine.submit_policy_text(thermostat_demand("alice", 60, 70))
result = engine.submit_policy_text(thermostat_demand("bob", 65, 75))
(sid,) = result.sessions
print("SPC:", [r.conflict_class.value for r in result.reports],
      "-> enforced now", enforced_ranges(engine),
      "| offer", [(c.low, c.high) for c in engine.state.sessions[sid].proposal])
engine.respond(sid, "alice", "accept")
print("     alice accepts -> enforced", enforced_ranges(engine))

# --- hard competition conflict: disjoint ranges, equal classes ---------------
engine = fresh_household(2, 2)
engine.submit_policy_text(thermostat_demand("alice", 60, 70))
result = engine.submit_policy_text(thermostat_demand("bob", 75, 80))
(sid,) = result.sessions
proposal = engine.state.sessions[sid].proposal
print("HCC:", [r.conflict_class.value for r in result.reports],
      "-> averaged offer", [(c.low, c.high) for c in proposal])
engine.respond(sid, "alice", "accept")
engine.respond(sid, "bob", "accept")
print("     both accept -> enforced", enforced_ranges(engine))

# --- soft competition conflict: overlap, equal classes -----------------------
engine = fresh_household(2, 2)
engine.submit_policy_text(thermostat_demand("alice", 60, 70))
result = engine.submit_policy_text(thermostat_demand("bob", 65, 75))
print("SCC:", [r.conflict_class.value for r in result.reports],
      "-> merged immediately", enforced_ranges(engine))

# --- restriction conflict: an outranking restriction is disputed -------------
engine = fresh_household(1, 2)
engine.submit_device_policy(DevicePolicy(
    user="alice", device="thermostat_1", value_range=(60, 70), restricted="bob"))
result = engine.submit_device_policy(DevicePolicy(
    user="bob", device="thermostat_1", value_range=(75, 80), restricted="0"))
print("RC: ", [r.conflict_class.value for r in result.reports],
      "-> restriction stands; bob notified:",
      [n["message"] for n in engine.notifications() if n["recipient"] == "bob"][-1])
