"""Independent brute-force oracles used by unit and acceptance tests.

These deliberately re-derive results by exhaustive enumeration or direct
summation, sharing no search code with the implementation they check.
"""

from lexstrata import scoring
from lexstrata.segmenter import Segmentation

import mpmath


def enumerate_coverings(network, seg):
    """All valid next-level segmentations of `seg`, by exhaustive tiling."""
    ids = seg.concept_ids
    n = len(ids)

    def tilings(i):
        if i == n:
            yield []
            return
        clone = network.concepts[ids[i]].clone_in
        for rest in tilings(i + 1):
            yield [(clone, i, 1)] + rest
        if i + 1 < n:
            pair = (ids[i], ids[i + 1])
            for hid in network.concepts[ids[i]].holonyms:
                if pair in network.concepts[hid].part_pairs:
                    for rest in tilings(i + 2):
                        yield [(hid, i, 2)] + rest
    for items in tilings(0):
        yield Segmentation(seg.level + 1, items, parent=seg)


def enumerate_chains(network, base_seg):
    """All valid chains from the level-0 segmentation to the top layer."""
    def extend(seg, level):
        if level == network.l_max:
            yield [seg]
            return
        for child in enumerate_coverings(network, seg):
            for chain in extend(child, level + 1):
                yield [seg] + chain
    yield from extend(base_seg, 0)


def oracle_best_top_score(network, base_seg, selector):
    """Max selector score of the top segmentation over all valid chains."""
    best = None
    for chain in enumerate_chains(network, base_seg):
        top = chain[-1]
        if selector == "fast":
            score = scoring.fast_coma(network, top)
        else:
            score = scoring.coma(network, top, optimistic=True)
        if best is None or score > best:
            best = score
    return best


def exact_binomial_tail(k, n, p0):
    """P(X >= k) for X ~ Binomial(n, p0), by direct high-precision summation."""
    with mpmath.workdps(60):
        p = mpmath.mpf(p0)
        total = mpmath.mpf(0)
        for i in range(k, n + 1):
            total += mpmath.binomial(n, i) * p**i * (1 - p)**(n - i)
        return total


def _randomize_scores(network, rng):
    """Distinct generic historical scores and solidly positive match rewards.

    Occurrence counts in [20, 50] keep every primitive prior well below 1,
    so a holonym's match gain always exceeds the small hpp perturbations and
    any two structurally different segmentations get different fast scores.
    """
    for ch, cid in network.char_to_primitive.items():
        network.concepts[cid].occurrences = rng.randrange(20, 51)
    network.update_priors()
    for c in network.concepts:
        if c.level >= 1:
            c.freq = 60
            c.hpp = 1.0 - rng.random() * 0.03
            c.invalidate_score_cache()


def _two_layer_instance(rng):
    """l_max = 1, arbitrary random level-1 composites over 2-3 primitives."""
    from lexstrata.config import Config
    from lexstrata.network import ConceptNetwork
    alphabet = "ab" if rng.random() < 0.5 else "abc"
    net = ConceptNetwork(Config())
    ids = [net.primitive_for(ch) for ch in alphabet]
    net.add_layer()
    for _ in range(rng.randrange(0, 4)):
        if len(net.concepts) >= 12:
            break
        net.add_holonym(rng.choice(ids), rng.choice(ids))
    text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 7)))
    return net, text


def _parse_instance(rng):
    """l_max = 2 with holonyms drawn from one binary bracketing of the text.

    Keeping all composites consistent with a single parse means no greedy
    merge at a lower layer can destroy an adjacency needed higher up, so
    exhaustive-width beam search provably reaches the enumeration optimum.
    """
    from lexstrata.config import Config
    from lexstrata.network import ConceptNetwork
    alphabet = "ab"
    net = ConceptNetwork(Config())
    for ch in alphabet:
        net.primitive_for(ch)
    net.add_layer()
    net.add_layer()
    while True:
        text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(2, 5)))
        # a run of 3+ lets one holonym overlap itself: two covers with equal
        # score multisets but different continuations, which the
        # identical-score dedup may then collapse the wrong way
        if not any(text[i] == text[i + 1] == text[i + 2] for i in range(len(text) - 2)):
            break

    def lift(cid, level):
        while net.concepts[cid].level < level:
            cid = net.clone_above(cid)
        return cid

    def parse(lo, hi):
        # returns the concept id covering text[lo:hi], creating parse nodes
        if hi - lo == 1:
            return net.char_to_primitive[text[lo]]
        # a 4-char span only fits 3 layers when split evenly
        cut = lo + 2 if hi - lo == 4 else rng.randrange(lo + 1, hi)
        left = parse(lo, cut)
        right = parse(cut, hi)
        if left is None or right is None:
            return None
        level = max(net.concepts[left].level, net.concepts[right].level) + 1
        if level > net.l_max or len(net.concepts) >= 11:
            return None
        return net.add_holonym(lift(left, level - 1), lift(right, level - 1))

    parse(0, len(text))
    return net, text


def random_tiny_instance(rng):
    """A tiny network/text pair on which beam completeness is provable."""
    net, text = (_two_layer_instance(rng) if rng.random() < 0.7
                 else _parse_instance(rng))
    _randomize_scores(net, rng)
    return net, text
