"""Prediction and scoring: context prediction, match reward, segmentation scores.

A concept's score balances how large/rare its surface is (match reward,
computed against character-level priors) with the probability its context
assigns to it (coherence).  All logs are natural.  Probabilities come from
take-each-out prediction: position i is predicted by the concepts within the
offset window plus the special begin/end/always predictors of the level; the
target's own weights never contribute.
"""

import math
from dataclasses import dataclass, field

EPSILON = 1e-10
SPECIAL_SPAN = 3  # positions served by the begin-(and end-)buffer predictors


@dataclass
class PredictionMap:
    entries: dict = field(default_factory=dict)
    normalized: bool = False

    def get(self, cid, default=0.0):
        return self.entries.get(cid, default)

    def __len__(self):
        return len(self.entries)


def _context_maps(network, seg, i):
    """Weight maps predicting position i, in a fixed deterministic order."""
    ids = seg.concept_ids
    n = len(ids)
    maps = []
    for j in network.config.offsets:
        k = i + j
        if 0 <= k < n:
            wmap = network.concepts[ids[k]].weights.get(-j)
            if wmap is not None and wmap:
                maps.append(wmap)
    specials = network.specials[seg.level]
    if i < SPECIAL_SPAN and specials["begin"].wmap:
        maps.append(specials["begin"].wmap)
    if i >= n - SPECIAL_SPAN and specials["end"].wmap:
        maps.append(specials["end"].wmap)
    if specials["always"].wmap:
        maps.append(specials["always"].wmap)
    return maps


def predict(network, seg, i):
    """Normalized prediction map for position i of a segmentation."""
    merged = {}
    for wmap in _context_maps(network, seg, i):
        for cid, w in wmap.items():
            merged[cid] = merged.get(cid, 0.0) + w
    return to_probabilities(PredictionMap(merged))


def to_probabilities(pmap):
    """Normalize weights by their sum; empty in, empty out."""
    if not pmap.entries:
        return PredictionMap({}, normalized=True)
    total = sum(pmap.entries.values())
    return PredictionMap({c: w / total for c, w in pmap.entries.items()}, normalized=True)


def get_prob(network, seg, i, optimistic, eps=None):
    """Probability assigned to seg[i] by its context.

    Under-explored concepts (freq <= t_opt) get the optimistic 1.0.  A
    target absent from the prediction (or an empty prediction) gets eps.
    Computed from per-map sums rather than by materializing the merged map;
    agrees with predict() up to float accumulation order.
    """
    if eps is None:
        eps = network.config.epsilon
    target = seg.concept_ids[i]
    if optimistic and network.concepts[target].freq <= network.config.t_opt:
        return 1.0
    num = 0.0
    den = 0.0
    for wmap in _context_maps(network, seg, i):
        den += wmap.mass()
        num += wmap.weight(target)
    if num == 0.0 or den == 0.0:
        return eps
    return num / den


def match_reward(network, cid):
    """-sum(log prior) over the concept's primitive expansion."""
    c = network.concepts[cid]
    if c._match is not None and c._match_ver == network.priors_version:
        return c._match
    total = 0.0
    for pid in network.expand_to_primitives(cid):
        total -= math.log(network.concepts[pid].prior)
    c._match = total
    c._match_ver = network.priors_version
    return total


def concept_score(network, cid, p):
    """Coherence+match score: match reward plus log of the given probability."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"probability {p} out of (0, 1]")
    return match_reward(network, cid) + math.log(p)


def score_hist(network, cid, eps=EPSILON):
    """Historical concept score: match reward plus log of the hpp."""
    c = network.concepts[cid]
    if c._shist is not None and c._shist_ver == network.priors_version:
        return c._shist
    s = match_reward(network, cid) + math.log(max(c.hpp, eps))
    c._shist = s
    c._shist_ver = network.priors_version
    return s


def fast_coma(network, seg, eps=EPSILON):
    """Mean historical concept score over the segmentation."""
    ids = seg.concept_ids
    if not ids:
        raise ValueError("empty segmentation")
    return sum(score_hist(network, cid, eps) for cid in ids) / len(ids)


def coma(network, seg, optimistic, eps=EPSILON):
    """Mean of match reward + log take-each-out probability per position."""
    ids = seg.concept_ids
    if not ids:
        raise ValueError("empty segmentation")
    total = 0.0
    for i, cid in enumerate(ids):
        p = get_prob(network, seg, i, optimistic, eps)
        total += match_reward(network, cid) + math.log(p)
    return total / len(ids)
