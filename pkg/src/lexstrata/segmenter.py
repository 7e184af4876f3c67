"""Layer-by-layer beam-search segmentation.

A segmentation at level i+1 covers the level-i sequence with clone moves
(span 1) and registered part-pair moves (span 2), exhaustively and without
overlap.  From each kept candidate at a level, `tries` randomized covers are
generated; candidates with identical fast score collapse to the first
generated; the best `keep` survive.  At the top layer the final winner is
picked by the configured selector (optimistic coherence+match, or the fast
historical score), ties broken at random.
"""

from dataclasses import dataclass

from . import scoring


class SegmentationError(Exception):
    pass


@dataclass
class SearchParams:
    tries: int = 10
    keep: int = 3
    top_selector: str = "optimistic_coma"

    def __post_init__(self):
        if self.tries < 1 or self.keep < 1:
            raise ValueError("tries and keep must be >= 1")
        if self.top_selector not in ("optimistic_coma", "fast"):
            raise ValueError(f"unknown top selector {self.top_selector!r}")

    @classmethod
    def from_config(cls, config):
        return cls(config.beam_tries, config.beam_keep, config.top_selector)


class Segmentation:
    __slots__ = ("level", "items", "parent", "concept_ids")

    def __init__(self, level, items, parent=None):
        self.level = level
        self.items = items             # list of (concept_id, start, span)
        self.parent = parent
        self.concept_ids = [cid for cid, _, _ in items]

    def __len__(self):
        return len(self.items)

    def __repr__(self):
        return f"<Segmentation level={self.level} n={len(self.items)}>"


class Chain:
    """Linked segmentations from the primitive layer to the top."""

    __slots__ = ("levels", "net_version")

    def __init__(self, levels, net_version):
        self.levels = levels
        self.net_version = net_version

    @property
    def top(self):
        return self.levels[-1]

    def surfaces(self, network, level):
        return [network.concepts[cid].surface for cid in self.levels[level].concept_ids]

    def reconstructs(self, network, stripped):
        return all("".join(self.surfaces(network, lv)) == stripped
                   for lv in range(len(self.levels)))


def primitive_segmentation(episode):
    items = [(pid, i, 1) for i, pid in enumerate(episode.primitive_ids)]
    return Segmentation(0, items)


def find_matching_holonym(network, c1_id, c2_id, pos):
    """First holonym of c1 with registered pair (c1,c2) (pos=+1) or (c2,c1) (pos=-1)."""
    want = (c1_id, c2_id) if pos == 1 else (c2_id, c1_id)
    for hid in network.concepts[c1_id].holonyms:
        if want in network.concepts[hid].part_pairs:
            return hid
    return None


def segmentation_move(network, j, seg, covered, out_items, rng):
    """Cover position j (and maybe a free neighbor) with the best-scoring match.

    Candidates: the clone of seg[j], plus at most one right- and one
    left-matching holonym over a not-yet-covered neighbor.  Highest
    historical score wins, ties at random.
    """
    ids = seg.concept_ids
    n = len(ids)
    candidates = [(network.clone_above(ids[j]), j, 1)]
    if j + 1 < n and not covered[j + 1]:
        hid = find_matching_holonym(network, ids[j], ids[j + 1], +1)
        if hid is not None:
            candidates.append((hid, j, 2))
    if j - 1 >= 0 and not covered[j - 1]:
        hid = find_matching_holonym(network, ids[j], ids[j - 1], -1)
        if hid is not None:
            candidates.append((hid, j - 1, 2))
    if len(candidates) == 1:
        best = candidates[0]
    else:
        scored = [(scoring.score_hist(network, cid), idx)
                  for idx, (cid, _, _) in enumerate(candidates)]
        top = max(s for s, _ in scored)
        ties = [idx for s, idx in scored if s == top]
        best = candidates[ties[0] if len(ties) == 1 else rng.choice(ties)]
    _, start, span = best
    for k in range(start, start + span):
        covered[k] = True
    out_items.append(best)


def generate_a_segmentation(network, seg, rng):
    """One randomized cover of `seg` at the next level.

    Repeatedly picks a uniformly random uncovered position and applies a
    segmentation move; items come back sorted by start position.
    """
    n = len(seg)
    covered = [False] * n
    remaining = list(range(n))
    out_items = []
    while remaining:
        pick = rng.randrange(len(remaining))
        j = remaining[pick]
        if covered[j]:
            remaining[pick] = remaining[-1]
            remaining.pop()
            continue
        segmentation_move(network, j, seg, covered, out_items, rng)
        remaining[pick] = remaining[-1]
        remaining.pop()
    out_items.sort(key=lambda item: item[1])
    return Segmentation(seg.level + 1, out_items, parent=seg)


def segment(episode, network, params, rng):
    """Beam-search a chain of segmentations from primitives to the top layer."""
    if not episode.primitive_ids:
        raise SegmentationError("empty episode")
    base = primitive_segmentation(episode)
    kept = [(base, None)]  # (segmentation, fast score)
    for _ in range(network.l_max):
        candidates = []
        seen_scores = {}
        for parent, _ in kept:
            for _ in range(params.tries):
                cand = generate_a_segmentation(network, parent, rng)
                score = scoring.fast_coma(network, cand)
                if score not in seen_scores:
                    seen_scores[score] = True
                    candidates.append((cand, score))
        candidates.sort(key=lambda cs: -cs[1])
        kept = candidates[:params.keep]
    winner = _select_top(network, kept, params.top_selector, rng)
    levels = []
    seg = winner
    while seg is not None:
        levels.append(seg)
        seg = seg.parent
    levels.reverse()
    return Chain(levels, network.mutation_count)


def _select_top(network, kept, selector, rng):
    if len(kept) == 1:
        return kept[0][0]
    if selector == "fast":
        scored = [(score, idx) for idx, (_, score) in enumerate(kept)]
    else:
        scored = [(scoring.coma(network, seg, optimistic=True), idx)
                  for idx, (seg, _) in enumerate(kept)]
    top = max(s for s, _ in scored)
    ties = [idx for s, idx in scored if s == top]
    return kept[ties[0] if len(ties) == 1 else rng.choice(ties)][0]


def validate_covering(network, child):
    """True iff `child` partitionally and exhaustively covers its parent
    with legal clone/part-pair matches."""
    parent = child.parent
    if parent is None:
        return False
    expected_start = 0
    for cid, start, span in child.items:
        if start != expected_start or span not in (1, 2):
            return False
        expected_start += span
        c = network.concepts[cid]
        if span == 1:
            if not c.is_clone or c.clone_of != parent.concept_ids[start]:
                return False
        else:
            pair = (parent.concept_ids[start], parent.concept_ids[start + 1])
            if pair not in c.part_pairs:
                return False
    return expected_start == len(parent)


def validate_chain(network, chain, stripped):
    """Covering validity at every level plus text reconstruction."""
    if not chain.reconstructs(network, stripped):
        return False
    for seg in chain.levels[1:]:
        if not validate_covering(network, seg):
            return False
    return True
