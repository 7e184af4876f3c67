"""Versioned model snapshots: full network + trainer state, lossless floats.

The payload is JSON (Python's repr-based float serialization round-trips
every finite double exactly), gzip-compressed, with a format version and a
SHA-256 checksum so truncation or corruption is detected at load.  Writes
are atomic: the file appears only after a successful full write.
"""

import gzip
import hashlib
import json
import os
import tempfile

from .config import Config
from .network import Concept, ConceptNetwork, CooccurMap
from .weights import WeightMap

FORMAT_VERSION = 1


class SnapshotError(Exception):
    pass


def _concept_state(c):
    return {
        "id": c.id, "level": c.level, "surface": c.surface,
        "is_clone": c.is_clone, "clone_of": c.clone_of, "clone_in": c.clone_in,
        "part_pairs": [list(p) for p in c.part_pairs],
        "holonyms": list(c.holonyms),
        "freq": c.freq, "hpp": c.hpp,
        "first_seen": c.first_seen, "last_seen": c.last_seen,
        "occurrences": c.occurrences, "prior": c.prior,
        "weights": [[off, wm.to_state()] for off, wm in c.weights.items()],
        "right_cooccur": c.right_cooccur.to_state(),
    }


def _restore_concept(state, cooccur_budget):
    c = Concept(state["id"], state["level"], state["surface"],
                is_clone=state["is_clone"], clone_of=state["clone_of"],
                first_seen=state["first_seen"], cooccur_budget=cooccur_budget)
    c.clone_in = state["clone_in"]
    c.part_pairs = [tuple(p) for p in state["part_pairs"]]
    c.holonyms = list(state["holonyms"])
    c.freq = state["freq"]
    c.hpp = state["hpp"]
    c.last_seen = state["last_seen"]
    c.occurrences = state["occurrences"]
    c.prior = state["prior"]
    c.weights = {int(off): WeightMap.from_state(s) for off, s in state["weights"]}
    c.right_cooccur = CooccurMap.from_state(state["right_cooccur"])
    return c


def network_state(network):
    return {
        "config": network.config.to_dict(),
        "l_max": network.l_max,
        "episode_idx": network.episode_idx,
        "priors_version": network.priors_version,
        "mutation_count": network.mutation_count,
        "char_to_primitive": list(network.char_to_primitive.items()),
        "levels": [list(index.items()) for index in network.levels],
        "concepts": [_concept_state(c) for c in network.concepts],
        "specials": [[[kind, sp.wmap.to_state()] for kind, sp in per_level.items()]
                     for per_level in network.specials],
    }


def restore_network(state):
    config = Config.from_dict(state["config"])
    net = ConceptNetwork(config)
    net.l_max = state["l_max"]
    net.episode_idx = state["episode_idx"]
    net.priors_version = state["priors_version"]
    net.mutation_count = state["mutation_count"]
    net.char_to_primitive = dict(state["char_to_primitive"])
    net.levels = [{s: cid for s, cid in index} for index in state["levels"]]
    net.concepts = [_restore_concept(s, config.cooccur_budget) for s in state["concepts"]]
    net.specials = []
    for level, per_level in enumerate(state["specials"]):
        specials = net._new_specials(level)
        for kind, wm_state in per_level:
            specials[kind].wmap = WeightMap.from_state(wm_state)
        net.specials.append(specials)
    return net


def save_snapshot(network, path, trainer_state=None):
    """Atomically write a self-describing snapshot of the model."""
    payload = json.dumps({
        "network": network_state(network),
        "trainer": trainer_state,
    }, ensure_ascii=False).encode("utf-8")
    envelope = {
        "format": "lexstrata-snapshot",
        "version": FORMAT_VERSION,
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    blob = json.dumps(envelope).encode("utf-8") + b"\n" + payload
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".snapshot-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(gzip.compress(blob))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_snapshot(path):
    """Load a snapshot; returns (network, trainer_state)."""
    try:
        with open(path, "rb") as fh:
            blob = gzip.decompress(fh.read())
    except (OSError, gzip.BadGzipFile, EOFError) as exc:
        raise SnapshotError(f"cannot read snapshot {path!r}: {exc}") from exc
    try:
        header, payload = blob.split(b"\n", 1)
        envelope = json.loads(header)
    except (ValueError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"malformed snapshot {path!r}") from exc
    if envelope.get("format") != "lexstrata-snapshot":
        raise SnapshotError(f"{path!r} is not a model snapshot")
    if envelope.get("version") != FORMAT_VERSION:
        raise SnapshotError(
            f"snapshot version {envelope.get('version')} not supported "
            f"(this build reads version {FORMAT_VERSION})")
    if hashlib.sha256(payload).hexdigest() != envelope.get("sha256"):
        raise SnapshotError(f"checksum mismatch: snapshot {path!r} is corrupt")
    data = json.loads(payload)
    return restore_network(data["network"]), data["trainer"]
