"""Drive the HTTP facade end to end, in process.

The same flow a browser UI performs: bootstrap users, submit the two
clashing thermostat ranges, watch the averaged offer appear, respond
from both sides, and read the notification feed with a cursor.

(For a live server: ``homegate serve --addr 127.0.0.1:8008 --store-dir /tmp/hg``.)
"""

from fastapi.testclient import TestClient

from homegate.engine import Engine
from homegate.service import create_app

client = TestClient(create_app(Engine()))

# Bootstrap the owner, then two equal-priority residents.
client.post("/users", json={"user": "owner", "role": "owner"})
for name in ("alice", "bob"):
    client.post("/users", json={"commander": "owner", "user": name, "priority": 2})
print("users:", list(client.get("/users").json()["users"]))

# Both submit thermostat ranges; the second submission reports the
# conflict and opens a negotiation session.
client.post("/policies", json={
    "text": "@alice\ndemand :: ~ : thermostat_1 : temperature in [60-70] ;"})
body = client.post("/policies", json={
    "text": "@bob\ndemand :: ~ : thermostat_1 : temperature in [75-80] ;"}).json()
print("conflicts:", [c["class"] for c in body["conflicts"]])

(session,) = client.get("/negotiations").json()["sessions"]
offer = session["proposal"][0]
print(f"offer on {session['proposed_clause']['device']}: "
      f"[{offer['low']}-{offer['high']}] to {session['parties']}")

# Both parties accept; the averaged clause is installed.
for party in ("alice", "bob"):
    client.post(f"/negotiations/{session['id']}/respond",
                json={"party": party, "verdict": "accept"})
rules = client.get("/policies").json()["rules"]["rules"]
print("installed rules:", [(r["effect"], r["subject"], r["resource"]) for r in rules])

# Commands evaluate against the installed rule: 70 is inside, 60 is not.
ok = client.post("/commands", json={
    "actor": "bob", "device": "thermostat_1", "verb": "set_value",
    "attribute": "temperature", "value": 70})
denied = client.post("/commands", json={
    "actor": "bob", "device": "thermostat_1", "verb": "set_value",
    "attribute": "temperature", "value": 60})
print(f"set 70 -> {ok.status_code}, set 60 -> {denied.status_code} "
      f"({denied.json()['reason']})")

# The notification feed paginates by cursor, so clients never re-read.
feed = client.get("/notifications").json()
print(f"{len(feed['notifications'])} notifications; cursor={feed['cursor']}")
assert client.get("/notifications", params={"since": feed["cursor"]}).json()[
    "notifications"] == []
print("cursor drained  ok")
