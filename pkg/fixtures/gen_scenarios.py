"""Regenerate the bundled scenario scripts (committed alongside this file).

Run from the repository root:  python fixtures/gen_scenarios.py
"""

from __future__ import annotations

import json
from pathlib import Path

HERE = Path(__file__).parent


def set_temp(actor, value, at=0, origin="home_network"):
    return {"at": at, "type": "command", "command": {
        "actor": actor, "device": "thermostat_1", "verb": "set_value",
        "attribute": "temperature", "value": value, "origin": origin}}


def demand_text(owner, lo, hi, at=0):
    return {"at": at, "type": "submit_policy",
            "text": f"@{owner}\ndemand :: ~ : thermostat_1 : temperature in [{lo}-{hi}] ;"}


HOUSE_12 = [{"user": "owner", "class": 0, "role": "owner"},
            {"user": "alice", "class": 1, "role": "adult"},
            {"user": "bob", "class": 2, "role": "guest"}]
HOUSE_22 = [{"user": "owner", "class": 0, "role": "owner"},
            {"user": "alice", "class": 2, "role": "guest"},
            {"user": "bob", "class": 2, "role": "guest"}]

SCRIPTS = {}

SCRIPTS["golden_hpc"] = {
    "name": "golden-hpc",
    "description": "different classes, disjoint ranges: the outranking clause stands",
    "users": HOUSE_12,
    "events": [
        demand_text("alice", 60, 70),
        demand_text("bob", 75, 80),
        set_temp("bob", 78),
        set_temp("bob", 65),
    ],
    "expect": [
        {"event": 1, "conflicts": ["HPC"], "notified": ["alice", "bob"]},
        {"event": 1, "enforced": {"device": "thermostat_1", "spans": [[60, 70]]}},
        {"event": 2, "verdict": "deny"},
        {"event": 3, "verdict": "allow"},
    ],
}

SCRIPTS["golden_spc"] = {
    "name": "golden-spc",
    "description": "different classes, overlapping ranges: enforce now, offer the merge",
    "users": HOUSE_12,
    "events": [
        demand_text("alice", 60, 70),
        demand_text("bob", 65, 75),
        set_temp("bob", 62),
        {"at": 0, "type": "respond", "session": "latest", "party": "alice",
         "verdict": "accept"},
        set_temp("bob", 62),
        set_temp("bob", 67),
    ],
    "expect": [
        {"event": 1, "conflicts": ["SPC"], "notified": ["alice"]},
        {"event": 1, "enforced": {"device": "thermostat_1", "spans": [[60, 70]]}},
        {"event": 2, "verdict": "allow"},
        {"event": 3, "session_state": "agreed"},
        {"event": 3, "enforced": {"device": "thermostat_1", "spans": [[65, 70]]}},
        {"event": 3, "not_enforced": {"device": "thermostat_1", "spans": [[60, 70]]}},
        {"event": 4, "verdict": "deny"},
        {"event": 5, "verdict": "allow"},
    ],
}

SCRIPTS["golden_hcc_agree"] = {
    "name": "golden-hcc-agree",
    "description": "equal classes, disjoint ranges: averaged offer, installed on agreement",
    "users": HOUSE_22,
    "events": [
        demand_text("alice", 60, 70),
        demand_text("bob", 75, 80),
        {"at": 0, "type": "respond", "session": "latest", "party": "alice",
         "verdict": "accept"},
        {"at": 0, "type": "respond", "session": "latest", "party": "bob",
         "verdict": "accept"},
        set_temp("alice", 70),
        set_temp("alice", 60),
    ],
    "expect": [
        {"event": 1, "conflicts": ["HCC"], "proposal_spans": [[67, 75]]},
        {"event": 1, "enforced_count": 0},
        {"event": 3, "session_state": "agreed"},
        {"event": 3, "enforced": {"device": "thermostat_1", "spans": [[67, 75]]}},
        {"event": 4, "verdict": "allow"},
        {"event": 5, "verdict": "deny"},
    ],
}

SCRIPTS["golden_hcc_reject"] = {
    "name": "golden-hcc-reject",
    "description": "equal classes, disjoint ranges: rejection escalates to the admin",
    "users": HOUSE_22,
    "events": [
        demand_text("alice", 60, 70),
        demand_text("bob", 75, 80),
        {"at": 0, "type": "respond", "session": "latest", "party": "alice",
         "verdict": "accept"},
        {"at": 0, "type": "respond", "session": "latest", "party": "bob",
         "verdict": "reject"},
    ],
    "expect": [
        {"event": 1, "conflicts": ["HCC"], "proposal_spans": [[67, 75]]},
        {"event": 3, "session_state": "escalated", "notified": ["owner"]},
        {"event": 3, "enforced_count": 0},
    ],
}

SCRIPTS["golden_scc"] = {
    "name": "golden-scc",
    "description": "equal classes, overlapping ranges: merged to the common range",
    "users": HOUSE_22,
    "events": [
        demand_text("alice", 60, 70),
        demand_text("bob", 65, 75),
        set_temp("bob", 67),
        set_temp("bob", 63),
    ],
    "expect": [
        {"event": 1, "conflicts": ["SCC"]},
        {"event": 1, "enforced": {"device": "thermostat_1", "spans": [[65, 70]]}},
        {"event": 2, "verdict": "allow"},
        {"event": 3, "verdict": "deny"},
    ],
}

SCRIPTS["golden_rc"] = {
    "name": "golden-rc",
    "description": "outranking restriction disputed by the restricted user",
    "users": HOUSE_12,
    "events": [
        {"at": 0, "type": "submit_policy", "device_policy": {
            "user": "alice", "device": "thermostat_1",
            "value_range": [60, 70], "restricted": "bob"}},
        {"at": 0, "type": "submit_policy", "device_policy": {
            "user": "bob", "device": "thermostat_1",
            "value_range": [75, 80], "restricted": "0"}},
        set_temp("bob", 78),
        set_temp("bob", 65),
    ],
    "expect": [
        {"event": 1, "conflicts": ["RC"], "notified": ["bob"]},
        {"event": 2, "verdict": "deny", "tag": "T1", "notified": ["alice", "bob"]},
        {"event": 3, "verdict": "allow"},
    ],
}

SCRIPTS["golden_temporary"] = {
    "name": "golden-temporary",
    "description": "expired temporary user is removed and denied",
    "users": [{"user": "owner", "class": 0, "role": "owner"},
              {"user": "alice", "class": 1, "role": "adult"}],
    "events": [
        {"at": 0, "type": "add_user", "record": {
            "commander": "alice", "user": "gary", "priority": 4,
            "validity": 172800}},
        {"at": 0, "type": "command", "command": {
            "actor": "gary", "device": "lock_1", "verb": "switch", "state": "on"}},
        {"at": 172801, "type": "advance_clock"},
        {"at": 172801, "type": "command", "command": {
            "actor": "gary", "device": "lock_1", "verb": "switch", "state": "off"}},
    ],
    "expect": [
        {"event": 0, "user_present": "gary"},
        {"event": 1, "verdict": "allow"},
        {"event": 3, "verdict": "deny", "tag": "T4"},
        {"event": 3, "user_absent": "gary"},
    ],
}

SCRIPTS["golden_location"] = {
    "name": "golden-location",
    "description": "presence-scoped range plus a remote-use restriction",
    "users": [{"user": "owner", "class": 0, "role": "owner"},
              {"user": "alice", "class": 1, "role": "adult"},
              {"user": "kyle", "class": 3, "role": "child"}],
    "events": [
        {"at": 0, "type": "submit_policy", "text":
            "@alice\n"
            "demand :: ~ : thermostat_1 : temperature in [70-72], location in [Home] ;\n"
            "restrict :: kyle : thermostat_1 : location in [Away] ;"},
        demand_text("kyle", 74, 76),
        {"at": 0, "type": "set_presence", "user": "alice", "state": "Away"},
        {"at": 0, "type": "set_presence", "user": "kyle", "state": "Home"},
        set_temp("kyle", 75),
        {"at": 0, "type": "set_presence", "user": "alice", "state": "Home"},
        set_temp("kyle", 75),
        set_temp("kyle", 71),
        {"at": 0, "type": "set_presence", "user": "kyle", "state": "Away"},
        set_temp("kyle", 75, origin="remote"),
    ],
    "expect": [
        {"event": 0, "conflicts": []},
        {"event": 1, "conflicts": ["HPC", "RC"]},
        {"event": 4, "verdict": "allow"},
        {"event": 6, "verdict": "deny"},
        {"event": 7, "verdict": "allow"},
        {"event": 9, "verdict": "deny"},
    ],
}

SCRIPTS["scenario1_same_device"] = {
    "name": "scenario1-same-device",
    "description": "several users pile policies onto one thermostat",
    "declared_counts": {"SPC": 2},
    "users": [{"user": "owner", "class": 0, "role": "owner"},
              {"user": "alice", "class": 1, "role": "adult"},
              {"user": "bob", "class": 2, "role": "guest"},
              {"user": "carol", "class": 2, "role": "guest"}],
    "events": [
        demand_text("alice", 60, 70),
        demand_text("bob", 65, 75),
        {"at": 0, "type": "respond", "session": "latest", "party": "alice",
         "verdict": "accept"},
        demand_text("carol", 66, 69),
        {"at": 0, "type": "respond", "session": "latest", "party": "alice",
         "verdict": "accept"},
        {"at": 0, "type": "respond", "session": "latest", "party": "bob",
         "verdict": "accept"},
        set_temp("carol", 67),
        set_temp("carol", 65),
    ],
    "expect": [
        {"event": 1, "conflicts": ["SPC"]},
        {"event": 2, "enforced": {"device": "thermostat_1", "spans": [[65, 70]]}},
        {"event": 3, "conflicts": ["SPC"]},
        {"event": 5, "session_state": "agreed"},
        {"event": 5, "enforced": {"device": "thermostat_1", "spans": [[66, 69]]}},
        {"event": 6, "verdict": "allow"},
        {"event": 7, "verdict": "deny"},
    ],
}


def threat_script(n, name, description, users, make_events, expects_per_event):
    events, expects = [], []
    for i in range(n):
        idx = len(events)
        events.extend(make_events(i))
        for offset, expect in expects_per_event:
            expects.append({"event": idx + offset, **expect})
    return {"name": name, "description": description, "users": users,
            "events": events, "expect": expects}


SCRIPTS["threat1"] = threat_script(
    10, "threat1-over-privileged-control",
    "restricted users keep trying to change the thermostat",
    HOUSE_12 + [{"user": "carol", "class": 3, "by": "owner", "role": "child"}],
    lambda i: [set_temp("bob" if i % 2 == 0 else "carol", 75 + (i % 10))],
    [(0, {"verdict": "deny", "tag": "T1", "notified": ["alice"]})],
)
SCRIPTS["threat1"]["events"].insert(0, {
    "at": 0, "type": "submit_policy", "text":
        "@alice\n"
        "restrict :: bob : thermostat_1 : temperature notin [60-70] ;\n"
        "restrict :: carol : thermostat_1 : temperature notin [60-70] ;"})
SCRIPTS["threat1"]["expect"] = [
    {**e, "event": e["event"] + 1} for e in SCRIPTS["threat1"]["expect"]]

SCRIPTS["threat2"] = threat_script(
    10, "threat2-privilege-abuse",
    "newly added low-priority users try to install apps",
    HOUSE_12 + [{"user": "carol", "class": 3, "by": "owner", "role": "child"}],
    lambda i: [{"at": 0, "type": "command", "command": {
        "actor": "bob" if i % 2 == 0 else "carol", "device": "camera_1",
        "verb": "install_app", "app_id": f"app_{i}"}}],
    [(0, {"verdict": "deny", "tag": "T2", "notified": ["owner"]})],
)

SCRIPTS["threat3"] = threat_script(
    10, "threat3-privilege-escalation",
    "new users without the device permission reconfigure and remove devices",
    HOUSE_12,
    lambda i: [{"at": 0, "type": "command", "command": {
        "actor": "bob", "device": "lock_1",
        "verb": "set_code" if i % 2 == 0 else "remove_device"}}],
    [(0, {"verdict": "deny", "tag": "T3", "notified": ["owner"]})],
)

SCRIPTS["threat4"] = {
    "name": "threat4-unauthorized-access",
    "description": "temporary user drives the thermostat outside the granted window",
    "users": [{"user": "owner", "class": 0, "role": "owner"},
              {"user": "alice", "class": 1, "role": "adult"}],
    "events": [
        {"at": 0, "type": "add_user", "record": {
            "commander": "alice", "user": "gary", "priority": 4,
            "validity": 10 * 86400}},
        {"at": 0, "type": "submit_policy",
         "text": "@alice\ndemand :: gary : thermostat_1 : time in [8:00am-6:00pm] ;"},
    ] + [set_temp("gary", 70, at=72000 + 60 * i) for i in range(10)],
    "expect": [
        {"event": 2 + i, "verdict": "deny", "tag": "T4", "notified": ["alice"]}
        for i in range(10)
    ],
}

SCRIPTS["threat5"] = threat_script(
    10, "threat5-transitive-privilege",
    "a low-priority user keeps trying to add outranking users",
    HOUSE_12,
    lambda i: [{"at": 0, "type": "add_user", "record": {
        "commander": "bob", "user": f"mallory_{i}", "priority": i % 2}}],
    [(0, {"verdict": "deny", "tag": "T5", "notified": ["owner"]})],
)


def main() -> None:
    for stem, doc in SCRIPTS.items():
        path = HERE / f"{stem}.scn"
        path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n",
                        encoding="utf-8")
        print(f"wrote {path.name}")


if __name__ == "__main__":
    main()
