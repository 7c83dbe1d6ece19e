"""Enforcement in action: the decision point and the five threat shapes.

Every command flows through one decision point: expired actors first,
then structural permissions, then deny-shaped rules, then the regions of
active permit-shaped rules. Tagged denials always notify the policy
assigner.
"""

from homegate import DeviceCommand, DevicePolicy, Engine, Origin, UserRecord, Verb
from homegate.engine import PermissionDenied

engine = Engine()
engine.bootstrap("owner")
engine.add_user(UserRecord(commander="owner", user="alice", priority=1))
engine.add_user(UserRecord(commander="owner", user="bob", priority=2))
engine.add_user(UserRecord(commander="alice", user="gary", priority=4,
                           validity=2 * 86400))


def show(label, decision):
    tag = decision.threat_tag.value if decision.threat_tag else "-"
    print(f"{label:34} -> {decision.verdict.value:5} tag={tag}")


# T1 over-privileged control: a restricted user pushes the thermostat out
# of the range the restriction grants.
engine.submit_device_policy(DevicePolicy(
    user="alice", device="thermostat_1", value_range=(60, 70), restricted="bob"))
show("bob sets thermostat to 78", engine.command(DeviceCommand(
    actor="bob", device="thermostat_1", verb=Verb.SET_VALUE,
    attribute="temperature", value=78)))
show("bob sets thermostat to 65", engine.command(DeviceCommand(
    actor="bob", device="thermostat_1", verb=Verb.SET_VALUE,
    attribute="temperature", value=65)))

# T2 privilege abuse: a low-priority user installs an app.
show("bob installs a camera app", engine.command(DeviceCommand(
    actor="bob", device="camera_1", verb=Verb.INSTALL_APP, app_id="cam_app")))

# T3 privilege escalation: reconfiguration without the device permission.
show("bob changes the lock code", engine.command(DeviceCommand(
    actor="bob", device="lock_1", verb=Verb.SET_CODE)))

# T4 unauthorized access: the guest's validity lapses and the next command
# is refused (and the guest is dropped from the user list).
engine.advance_clock(by=2 * 86400 + 1)
show("expired gary opens the lock", engine.command(DeviceCommand(
    actor="gary", device="lock_1", verb=Verb.SWITCH, state="on")))
print(f"{'gary still an authorized user?':34} -> {engine.state.users.has('gary')}")

# T5 transitive privilege: granting authority above one's own is refused
# at the user-management surface.
try:
    engine.add_user(UserRecord(commander="bob", user="mallory", priority=0))
except PermissionDenied as err:
    print(f"{'bob adds a class-0 user':34} -> deny  tag={err.tag.value}")

# Location gating: a presence-scoped range only binds while its owner is
# home, and remote commands count as away for the actor's own gates.
engine.submit_policy_text(
    "@alice\n"
    "demand :: ~ : bulb_1 : level in [10-40], location in [Home] ;\n"
    "restrict :: bob : bulb_1 : location in [Away] ;")
engine.set_presence("alice", "Away")
engine.set_presence("bob", "Home")
show("bob sets bulb to 80, alice away", engine.command(DeviceCommand(
    actor="bob", device="bulb_1", verb=Verb.SET_VALUE, attribute="level", value=80)))
engine.set_presence("alice", "Home")
show("bob sets bulb to 80, alice home", engine.command(DeviceCommand(
    actor="bob", device="bulb_1", verb=Verb.SET_VALUE, attribute="level", value=80)))
show("bob commands remotely", engine.command(DeviceCommand(
    actor="bob", device="bulb_1", verb=Verb.SET_VALUE, attribute="level", value=20,
    origin=Origin.REMOTE)))

print("\nnotifications emitted:")
for note in engine.notifications():
    tag = f" [{note['tag']}]" if note["tag"] else ""
    print(f"  #{note['seq']} -> {note['recipient']}{tag}: {note['message']}")
