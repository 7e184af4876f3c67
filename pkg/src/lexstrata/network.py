"""The layered concept graph.

Layer 0 holds one primitive per distinct character.  Every higher layer
holds a clone of each concept below it plus the composites (holonyms) built
from adjacent pairs.  A clone shares its origin's surface but keeps entirely
separate prediction edges; clones are not linked to their origin's parts, so
a surface can legitimately be represented at one level by both a clone and a
later-composed non-clone.  The per-level surface index therefore tracks
non-clones only (duplicate non-clones per level are impossible).
"""

import math

from .config import Config
from .weights import WeightMap


class NetworkError(Exception):
    pass


class CooccurMap:
    """Budgeted map concept-id -> count of immediate right co-occurrences."""

    __slots__ = ("budget", "counts", "seq", "_tick")

    def __init__(self, budget=200):
        self.budget = budget
        self.counts = {}
        self.seq = {}
        self._tick = 0

    def __len__(self):
        return len(self.counts)

    def increment(self, cid):
        self._tick += 1
        self.counts[cid] = self.counts.get(cid, 0) + 1
        self.seq[cid] = self._tick
        if len(self.counts) > self.budget:
            victim = min(self.counts, key=lambda c: (self.counts[c], self.seq[c]))
            del self.counts[victim]
            del self.seq[victim]

    def remove(self, cid):
        self.counts.pop(cid, None)
        self.seq.pop(cid, None)

    def to_state(self):
        return {"budget": self.budget, "tick": self._tick,
                "entries": [(c, k, self.seq[c]) for c, k in self.counts.items()]}

    @classmethod
    def from_state(cls, state):
        m = cls(budget=state["budget"])
        m._tick = state["tick"]
        for c, k, s in state["entries"]:
            m.counts[int(c)] = k
            m.seq[int(c)] = s
        return m


class Concept:
    __slots__ = ("id", "level", "surface", "is_clone", "clone_of", "clone_in",
                 "part_pairs", "holonyms", "freq", "hpp", "first_seen",
                 "last_seen", "occurrences", "prior", "weights",
                 "right_cooccur", "_match", "_match_ver", "_shist", "_shist_ver")

    def __init__(self, cid, level, surface, is_clone=False, clone_of=None,
                 first_seen=0, cooccur_budget=200):
        self.id = cid
        self.level = level
        self.surface = surface
        self.is_clone = is_clone
        self.clone_of = clone_of
        self.clone_in = None
        self.part_pairs = []         # list of (left_id, right_id) at level-1
        self.holonyms = []           # non-clone concepts at level+1 having self as a part
        self.freq = 0                # episodes in which self was active
        self.hpp = 1.0               # historical predicted probability, optimistic start
        self.first_seen = first_seen
        self.last_seen = first_seen
        self.occurrences = 0         # per-position occurrence count (feeds priors)
        self.prior = 1.0
        self.weights = {}            # offset -> WeightMap
        self.right_cooccur = CooccurMap(budget=cooccur_budget)
        self._match = None
        self._match_ver = -1
        self._shist = None
        self._shist_ver = -1

    def invalidate_score_cache(self):
        self._shist = None

    def __repr__(self):
        kind = "clone" if self.is_clone else "concept"
        return f"<{kind} {self.surface!r}@{self.level} id={self.id}>"


class SpecialPredictor:
    """Pseudo-concept predicting fixed buffer positions of one level.

    kind is "begin" (first 3 positions), "end" (last 3) or "always" (every
    position).  Owns a single pooled weight map and update counter.
    """

    __slots__ = ("kind", "level", "wmap")

    def __init__(self, kind, level, budget=200):
        self.kind = kind
        self.level = level
        self.wmap = WeightMap(budget=budget)


class ConceptNetwork:
    def __init__(self, config=None):
        self.config = config or Config()
        self.concepts = []           # id -> Concept
        self.levels = [{}]           # per level: surface -> non-clone id
        self.l_max = 0
        self.char_to_primitive = {}
        self.specials = [self._new_specials(0)]
        self.priors_version = 0
        self.mutation_count = 0
        self.episode_idx = 0         # maintained by the trainer, used for first/last seen

    # -- construction ------------------------------------------------------

    def _new_specials(self, level):
        b = self.config.edge_budget
        return {kind: SpecialPredictor(kind, level, budget=b)
                for kind in ("begin", "end", "always")}

    def _alloc(self, level, surface, is_clone=False, clone_of=None):
        c = Concept(len(self.concepts), level, surface, is_clone=is_clone,
                    clone_of=clone_of, first_seen=self.episode_idx,
                    cooccur_budget=self.config.cooccur_budget)
        self.concepts.append(c)
        if not is_clone:
            self.levels[level][surface] = c.id
        self.mutation_count += 1
        return c

    def new_primitive(self, ch):
        """Allocate a level-0 concept for a first-seen character.

        Clones are created at every existing higher layer so segmentation
        always has a clone move available.
        """
        if ch in self.char_to_primitive:
            raise NetworkError(f"primitive for {ch!r} already exists")
        base = self._alloc(0, ch)
        self.char_to_primitive[ch] = base.id
        below = base
        for level in range(1, self.l_max + 1):
            clone = self._alloc(level, ch, is_clone=True, clone_of=below.id)
            below.clone_in = clone.id
            below = clone
        return base.id

    def primitive_for(self, ch):
        cid = self.char_to_primitive.get(ch)
        if cid is None:
            cid = self.new_primitive(ch)
        return cid

    def add_holonym(self, left_id, right_id):
        """Register the composite of two adjacent same-level concepts.

        Returns the concept at level+1 whose surface is the concatenation,
        creating it (non-clone) or appending the part pair to an existing
        non-clone.  A same-surface clone at the target level is a distinct
        concept and does not absorb the pair.
        """
        left = self.concepts[left_id]
        right = self.concepts[right_id]
        if left.level != right.level:
            raise NetworkError(f"part levels differ: {left.level} vs {right.level}")
        target_level = left.level + 1
        if target_level > self.l_max:
            raise NetworkError(f"no layer {target_level} yet (l_max={self.l_max})")
        surface = left.surface + right.surface
        existing = self.levels[target_level].get(surface)
        if existing is not None:
            holo = self.concepts[existing]
            if (left_id, right_id) not in holo.part_pairs:
                holo.part_pairs.append((left_id, right_id))
                self._link_part(left, holo.id)
                self._link_part(right, holo.id)
                self.mutation_count += 1
            return holo.id
        holo = self._alloc(target_level, surface)
        holo.part_pairs.append((left_id, right_id))
        self._link_part(left, holo.id)
        self._link_part(right, holo.id)
        # keep clone chains complete so the clone move always exists
        below = holo
        for level in range(target_level + 1, self.l_max + 1):
            clone = self._alloc(level, holo.surface, is_clone=True, clone_of=below.id)
            below.clone_in = clone.id
            below = clone
        return holo.id

    @staticmethod
    def _link_part(part, holo_id):
        if holo_id not in part.holonyms:
            part.holonyms.append(holo_id)

    def add_layer(self):
        """Open layer l_max+1, cloning every concept at the current top.

        Clones start blank: freq 0, hpp 1, no edges, no parts, no holonyms.
        Fresh special predictors are created for the new layer.
        """
        old_top = self.l_max
        self.l_max += 1
        self.levels.append({})
        self.specials.append(self._new_specials(self.l_max))
        for c in [c for c in self.concepts if c.level == old_top]:
            clone = self._alloc(self.l_max, c.surface, is_clone=True, clone_of=c.id)
            c.clone_in = clone.id

    # -- navigation --------------------------------------------------------

    def clone_above(self, cid):
        clone_id = self.concepts[cid].clone_in
        if clone_id is None:
            raise NetworkError(f"concept {cid} has no clone at the next layer")
        return clone_id

    def expand_to_primitives(self, cid):
        """Layer-0 primitive sequence spelling the concept's surface."""
        c = self.concepts[cid]
        if c.level == 0:
            return [cid]
        if c.is_clone:
            return self.expand_to_primitives(c.clone_of)
        left, right = c.part_pairs[0]
        return self.expand_to_primitives(left) + self.expand_to_primitives(right)

    # -- priors ------------------------------------------------------------

    def update_priors(self):
        """Add-one smoothed per-level occurrence priors (always positive)."""
        per_level = [[] for _ in range(self.l_max + 1)]
        for c in self.concepts:
            per_level[c.level].append(c)
        for members in per_level:
            if not members:
                continue
            denom = sum(c.occurrences for c in members) + len(members)
            for c in members:
                c.prior = (c.occurrences + 1) / denom
        self.priors_version += 1

    # -- integrity ---------------------------------------------------------

    def check_invariants(self, t_opt=None):
        """Raise NetworkError on any structural violation."""
        t_opt = self.config.t_opt if t_opt is None else t_opt
        for c in self.concepts:
            if not 0.0 <= c.hpp <= 1.0:
                raise NetworkError(f"{c!r}: hpp {c.hpp} out of range")
            if c.freq <= t_opt and c.hpp != 1.0:
                raise NetworkError(f"{c!r}: hpp {c.hpp} with freq {c.freq} <= t_opt")
            if len(c.surface) > 1 and c.level < math.ceil(math.log2(len(c.surface))):
                raise NetworkError(f"{c!r}: surface too long for its level")
            if c.level == 0:
                if len(c.surface) != 1 or c.is_clone or c.part_pairs:
                    raise NetworkError(f"{c!r}: malformed primitive")
            if c.is_clone:
                if c.part_pairs:
                    raise NetworkError(f"{c!r}: clone with part pairs")
                origin = self.concepts[c.clone_of]
                if origin.surface != c.surface or origin.level != c.level - 1:
                    raise NetworkError(f"{c!r}: bad clone link")
                if origin.clone_in != c.id:
                    raise NetworkError(f"{c!r}: clone link not mutual")
            elif c.level >= 1:
                if not c.part_pairs:
                    raise NetworkError(f"{c!r}: composite without parts")
                for left_id, right_id in c.part_pairs:
                    left, right = self.concepts[left_id], self.concepts[right_id]
                    if left.level != c.level - 1 or right.level != c.level - 1:
                        raise NetworkError(f"{c!r}: part pair at wrong level")
                    if left.surface + right.surface != c.surface:
                        raise NetworkError(f"{c!r}: part surfaces do not spell surface")
                    if c.id not in left.holonyms or c.id not in right.holonyms:
                        raise NetworkError(f"{c!r}: part/holonym links not mutual")
            if c.level < self.l_max and c.clone_in is None:
                raise NetworkError(f"{c!r}: missing clone at level {c.level + 1}")
            for h in c.holonyms:
                holo = self.concepts[h]
                if all(c.id not in pair for pair in holo.part_pairs):
                    raise NetworkError(f"{c!r}: holonym {holo!r} lacks a pair with it")
            for offset, wmap in c.weights.items():
                if len(wmap) > wmap.budget:
                    raise NetworkError(f"{c!r}: weight map over budget at {offset}")
                total = sum(w for _, w in wmap.items())
                if total > 1.0 + 1e-9 or any(w < 0 for _, w in wmap.items()):
                    raise NetworkError(f"{c!r}: weights not a sub-distribution at {offset}")
            if "".join(self.concepts[p].surface for p in self.expand_to_primitives(c.id)) != c.surface:
                raise NetworkError(f"{c!r}: primitive expansion does not spell surface")
        for ch, cid in self.char_to_primitive.items():
            if self.concepts[cid].surface != ch or self.concepts[cid].level != 0:
                raise NetworkError(f"primitive index broken for {ch!r}")
        for level, index in enumerate(self.levels):
            for surface, cid in index.items():
                c = self.concepts[cid]
                if c.level != level or c.surface != surface or c.is_clone:
                    raise NetworkError(f"surface index broken at {level}:{surface!r}")
