"""Canonical JSON encoding, hashing, and run manifests.

Canonical form: sorted keys, compact separators, no floats anywhere
(rationals travel as "p/q" strings).  Byte-identical re-encoding of equal
data is what certificate hashing and the --strict manifest check rely on.
"""

import hashlib
import json
import time


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def canonical_hash(obj) -> str:
    return hashlib.sha256(canonical_dumps(obj).encode()).hexdigest()


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(canonical_dumps(obj))
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class RunManifest:
    """Record of one CLI invocation, written alongside primary outputs."""

    def __init__(self, version, command, parameters):
        self.version = version
        self.command = command
        self.parameters = parameters
        self.input_hashes = {}
        self.started = time.time()
        self.outcome = None

    def add_input(self, name, path):
        self.input_hashes[name] = file_hash(path)

    def finish(self, outcome):
        self.outcome = outcome
        return self

    def to_json(self):
        return {
            "tool_version": self.version,
            "command": self.command,
            "parameters": self.parameters,
            "input_hashes": self.input_hashes,
            "wall_time_s": round(time.time() - self.started, 3),
            "outcome": self.outcome,
        }
