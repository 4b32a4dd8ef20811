"""
Model files that prove themselves
=================================

Saves a trained hierarchy, loads it back, and shows that every reported
figure survives the trip exactly.  Then corrupts a single byte and shows
the loader refusing the file.
"""

import json
import tempfile
from pathlib import Path

from ghsom.data import load_iris
from ghsom.errors import ModelFormatError
from ghsom.evaluate import hierarchy_qe
from ghsom.growth import GhsomParams, train_hierarchy
from ghsom.model_io import load_model, save_model

iris = load_iris()
h = train_hierarchy(iris, GhsomParams(), seed=2)

workdir = Path(tempfile.mkdtemp(prefix="ghsom-demo-"))
path = workdir / "iris.ghsom"
save_model(h, str(path))
size = path.stat().st_size
print(f"wrote {path} ({size} bytes)")

# the file is a JSON envelope: format name, version, content digest, and
# the payload with every float stored as a hexfloat string
doc = json.loads(path.read_text())
print(f"format {doc['format']} v{doc['format_version']}, "
      f"digest {doc['digest'][:16]}...")

# reload and compare the headline figures bit for bit
back = load_model(str(path))
a = hierarchy_qe(h, iris)
b = hierarchy_qe(back, iris)
print(f"total QE before save: {a.total_qe!r}")
print(f"total QE after load:  {b.total_qe!r}")
print(f"exactly equal: {a.total_qe == b.total_qe}")

# saving the reloaded model reproduces the file byte for byte
twice = workdir / "again.ghsom"
save_model(back, str(twice))
print(f"resaved file identical: {path.read_bytes() == twice.read_bytes()}")

# now flip one character inside the payload; the digest no longer
# matches and the loader refuses to guess
raw = bytearray(path.read_bytes())
k = raw.find(b'"qe0"') + 10
raw[k] ^= 1
bad = workdir / "tampered.ghsom"
bad.write_bytes(bytes(raw))
try:
    load_model(str(bad))
    print("tampered file loaded (this should not happen)")
except ModelFormatError as exc:
    print(f"tampered file rejected: {exc}")
