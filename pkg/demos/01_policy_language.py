"""Tour of the policy language: parsing, diagnostics, canonical rendering.

A policy document groups clauses under ``@user`` headers. Each clause
names an action (demand / restrict / location), the users it targets
(``~`` meaning everyone), the devices, and a condition list.
"""

from homegate import parse_policy_set, parse_condition, render_clause

DOCUMENT = """\
# A four-person household.
@alice
restrict :: ~ : thermostat_1 : temperature notin [60-70] ;
location :: kyle : bulb_3 : location in [Home] ;
restrict :: gary : lock_1 : time notin [6:00am-9:00pm] ;

@bob
demand :: kyle : bulb_3 : time in [7:00pm-7:00am] ;
demand :: gary : lock_1, lock_4 : ~ ;
"""

clauses, diagnostics = parse_policy_set(DOCUMENT)
print(f"parsed {len(clauses)} clauses, {len(diagnostics)} diagnostics\n")

for clause in clauses:
    print(f"  @{clause.owner}: {render_clause(clause)}")

# The renderer emits a canonical single-line form; re-parsing it gives
# back a structurally identical clause, so files can be round-tripped.
reparsed, _ = parse_policy_set(f"@{clauses[0].owner}\n{render_clause(clauses[0])}")
assert reparsed == [clauses[0]]
print("\nround-trip: parse(render(x)) == x  ok")

# Rejected clauses become diagnostics with line/column positions and the
# parser carries on with the rest of the document.
broken = "@alice\ndemand :: ~ : bulb_1 : temperature in [70-60] ;\ndemand :: ~ : bulb_2 : ~ ;"
kept, problems = parse_policy_set(broken)
print(f"\nbroken document: kept {len(kept)} clause(s)")
for d in problems:
    print(f"  {d}")

# Conditions parse standalone too: numeric intervals, midnight-wrapping
# 12-hour time windows, and token membership.
for text in ("temperature notin [60-70]", "time in [9:00pm-6:00am]", "location in [Home]"):
    cond = parse_condition(text)
    print(f"\n{text!r} -> {cond}")
