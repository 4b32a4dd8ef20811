"""
Steering a session by hand
==========================

Drives the session layer directly, the same object the HTTP service
wraps: train, inspect a unit, override the automatic growth decisions,
and undo.  Every mutation lands in the event feed and the command log,
and replaying that log reproduces the final model exactly.
"""

from ghsom.model_io import model_bytes
from ghsom.service import Session

DATASET = {"iris": True}
PARAMS = {"tau1": 0.1, "tau2": 0.03}


def show(event):
    body = event["body"]
    keys = ", ".join(k for k in body if k != "tree")
    print(f"  rev {event['revision']:3d}  {event['kind']:18s}  ({keys})")


session = Session("demo", DATASET, PARAMS, seed=3)

print("training:")
out = session.apply({"kind": "start_train"})
for event in out["events"][:3] + out["events"][-1:]:
    show(event)
print(f"  ... {len(out['events'])} events total, "
      f"depth {out['result']['depth']}, {out['result']['n_maps']} maps")

# pick a leaf unit big enough to split by hand
tree = session.tree_doc()
target = None
for m in tree["maps"]:
    for row in m["units"]:
        for cell in row:
            if cell and cell["child"] is None and cell["n_samples"] >= 4:
                target = (m["map_id"], cell["row"], cell["col"])
if target is None:
    raise SystemExit("no splittable unit at these thresholds")
mid, row, col = target

table = session.unit_samples(mid, row, col)
print(f"\nunit ({row},{col}) of map {mid} holds "
      f"{table['n_samples']} samples, for example:")
for entry in table["samples"][:3]:
    feats = " ".join(f"{v:.1f}" for v in entry["features"])
    print(f"  sample {entry['id']:3d}: [{feats}]  label {entry['label']}")

print("\nexpanding that unit by hand (the policy gets no say):")
out = session.apply({"kind": "expand_unit",
                     "target": {"map": mid, "unit": [row, col]}})
print(f"  new child map {out['result']['child']}")

print("rebuilding the child from a pinned nonce:")
out = session.apply({"kind": "recluster_map",
                     "target": {"map": out["result"]["child"]},
                     "payload": {"seed": 5}})
show(out["events"][-2])

# the manual overrides sit in the audit log next to the automatic rules
manual = [e for e in session.hierarchy.audit if e.manual]
print(f"manual audit entries now in the model: {len(manual)}")
print(f"  last: {manual[-1].as_line()}")

print("\nchanged our mind, twice:")
session.apply({"kind": "undo"})
out = session.apply({"kind": "undo"})
print(f"  snapshots left on the ring: {out['result']['remaining']}")

# replay: a fresh session fed the same command log ends byte-identical
fresh = Session("replay", DATASET, PARAMS, seed=3)
for command in session.log:
    fresh.apply(command)
same = model_bytes(fresh.hierarchy) == model_bytes(session.hierarchy)
print(f"replayed command log gives the same model bytes: {same}")
