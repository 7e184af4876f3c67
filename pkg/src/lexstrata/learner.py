"""Learning: per-episode updates, composition, periodic tasks, training loop.

After each episode's chain is selected, every level's segmentation updates
its concepts: frequency (once per episode), historical predicted
probability, prediction edges of all context positions, special predictors,
and right co-occurrence counts per the composition policy.  Periodically,
priors are refreshed, co-occurring pairs that pass the count and
binomial-tail gates compose into holonyms, and a new layer is added when the
active concepts have become frequent enough.
"""

import math
import random
from dataclasses import dataclass, field

from . import corpus as corpus_mod
from . import scoring
from .config import Config
from .evaluation import MovingAverage, episode_metrics
from .network import ConceptNetwork
from .segmenter import SearchParams, segment, validate_chain
from .weights import RateSchedule, update_for_position, update_hpp


class LearnerError(Exception):
    pass


class StaleChainError(LearnerError):
    """The network changed between segmentation and update."""


@dataclass
class CompositionPolicy:
    mode: str = "model3"
    min_cooccur: int = 10
    min_tail_score: float = 5.0

    def __post_init__(self):
        if self.mode not in ("model3", "model4"):
            raise ValueError(f"unknown composition mode {self.mode!r}")
        if self.min_cooccur < 1 or self.min_tail_score <= 0:
            raise ValueError("composition thresholds must be positive")

    @classmethod
    def from_config(cls, config):
        return cls(config.composition_mode, config.min_cooccur, config.min_tail_score)


@dataclass
class LayerPolicy:
    threshold: float = 500.0
    trigger: MovingAverage = field(default_factory=lambda: MovingAverage(rate=0.01))
    manual_episodes: tuple = ()
    manual_done: int = 0

    def wants_layer(self, episode_idx):
        """True when a manual add is due or the min-frequency trigger fires.

        Manual adds take effect at the first periodic phase at or after
        their episode index, one layer per phase.
        """
        pending = [e for e in self.manual_episodes[self.manual_done:]
                   if e <= episode_idx]
        if pending:
            self.manual_done += 1
            return True
        return self.trigger.initialized and self.trigger.value > self.threshold

    @classmethod
    def from_config(cls, config):
        return cls(threshold=config.layer_threshold,
                   trigger=MovingAverage(rate=config.ma_rate),
                   manual_episodes=tuple(sorted(config.layer_add_episodes)))


def binomial_tail_score(k, n, p0):
    """Negative log of the Chernoff-KL upper bound on P(X >= k), X~Bin(n, p0).

    0 when the observed proportion q = k/n does not exceed p0 (nothing to
    reject).  Co-occurrences are counted per adjacency while n counts
    episodes, so q is clamped at 1.
    """
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    if not 0.0 < p0 < 1.0:
        return 0.0
    q = min(k / n, 1.0)
    if q <= p0:
        return 0.0
    if q >= 1.0:
        return n * math.log(1.0 / p0)
    return n * (q * math.log(q / p0) + (1.0 - q) * math.log((1.0 - q) / (1.0 - p0)))


def record_cooccurrence(left_id, right_id, network, policy):
    """Count one adjacency of (left, right) for later composition.

    Skipped when the pair is already registered on a holonym (the composite
    exists; nothing left to learn), and in model4 when both are clones
    (their composite would duplicate a lower-level one).
    """
    left = network.concepts[left_id]
    right = network.concepts[right_id]
    if policy.mode == "model4" and left.is_clone and right.is_clone:
        return
    want = (left_id, right_id)
    for hid in left.holonyms:
        if want in network.concepts[hid].part_pairs:
            return
    left.right_cooccur.increment(right_id)


def _eligible_cooccur_levels(network, policy):
    # model3: only adjacencies in the top-layer segmentation are counted
    if policy.mode == "model3":
        return (network.l_max,)
    return tuple(range(network.l_max + 1))


def compose_candidates(network, policy):
    """Create holonyms for co-occurring pairs passing both gates.

    The count gate needs min_cooccur adjacencies; the significance gate
    needs binomial_tail_score(k, freq(A), prior(B)) at least min_tail_score.
    model3 composes only into the top layer, i.e. pairs now sitting one
    level below it (counted while their level was the top); model4 composes
    at any level with room above.  Entries that composed are cleared;
    entries that cannot ever compose any more are dropped.
    """
    created = []
    for predictor in list(network.concepts):
        if not predictor.right_cooccur.counts:
            continue
        target_level = predictor.level + 1
        if policy.mode == "model3":
            if target_level < network.l_max:
                # stale: recording moved to a higher layer for good
                predictor.right_cooccur.counts.clear()
                predictor.right_cooccur.seq.clear()
                continue
            if target_level > network.l_max:
                continue  # waits for the next layer
        elif target_level > network.l_max:
            continue
        for right_id, k in list(predictor.right_cooccur.counts.items()):
            if k < policy.min_cooccur:
                continue
            right = network.concepts[right_id]
            if policy.mode == "model4" and predictor.is_clone and right.is_clone:
                predictor.right_cooccur.remove(right_id)
                continue
            surface = predictor.surface + right.surface
            existing = network.levels[target_level].get(surface)
            if existing is None and _clone_with_surface(network, target_level, surface):
                # the composite exists as a clone; composing would duplicate it
                predictor.right_cooccur.remove(right_id)
                continue
            score = binomial_tail_score(k, max(predictor.freq, 1), right.prior)
            if score < policy.min_tail_score:
                continue
            created.append(network.add_holonym(predictor.id, right_id))
            predictor.right_cooccur.remove(right_id)
    return created


def _clone_with_surface(network, level, surface):
    # clone chains are complete up to l_max, so a same-surface clone exists
    # at `level` iff the surface is represented anywhere below
    for lv in range(level - 1, 0, -1):
        if surface in network.levels[lv]:
            return True
    return len(surface) == 1 and surface in network.char_to_primitive


def update_active_concepts(chain, network, config, episode_idx, policy):
    """Apply all per-episode learning for the selected chain.

    For every level: distinct concepts gain one episode of frequency, every
    position updates the concept's hpp from its optimistic take-each-out
    probability, context concepts and the special predictors strengthen
    their edges toward it, and eligible adjacencies are counted for
    composition.  Returns the per-level MetricsRecord inputs via
    episode_metrics (computed on the post-update weights).
    """
    if chain.net_version != network.mutation_count:
        raise StaleChainError("network changed since this chain was produced")
    schedule = RateSchedule(config.rate_schedule, config.r_min)
    budget = config.edge_budget
    cooccur_levels = _eligible_cooccur_levels(network, policy)
    for seg in chain.levels:
        ids = seg.concept_ids
        n = len(ids)
        seen = set()
        concepts = network.concepts
        specials = network.specials[seg.level]
        for i, cid in enumerate(ids):
            c = concepts[cid]
            if cid not in seen:
                seen.add(cid)
                c.freq += 1
            c.occurrences += 1
            c.last_seen = episode_idx
            p = scoring.get_prob(network, seg, i, optimistic=True)
            update_hpp(c, p, config.t_opt, config.r_mix)
            for j in config.offsets:
                k = i + j
                if 0 <= k < n:
                    update_for_position(concepts[ids[k]], cid, -j, schedule, budget)
            if i < scoring.SPECIAL_SPAN:
                specials["begin"].wmap.update_toward(cid, schedule)
            if i >= n - scoring.SPECIAL_SPAN:
                specials["end"].wmap.update_toward(cid, schedule)
            specials["always"].wmap.update_toward(cid, schedule)
        if seg.level in cooccur_levels:
            for i in range(n - 1):
                record_cooccurrence(ids[i], ids[i + 1], network, policy)


@dataclass
class PeriodicReport:
    episode: int
    created: list          # holonym concept ids created or re-paired
    layer_added: bool
    l_max: int


def run_periodic_tasks(network, comp_policy, layer_policy, episode_idx=None):
    """Refresh priors, compose gated pairs, maybe open a new layer."""
    episode_idx = network.episode_idx if episode_idx is None else episode_idx
    network.update_priors()
    created = compose_candidates(network, comp_policy)
    layer_added = False
    if layer_policy.wants_layer(episode_idx):
        network.add_layer()
        layer_policy.trigger = MovingAverage(rate=layer_policy.trigger.rate)
        layer_added = True
    return PeriodicReport(episode=episode_idx, created=created,
                          layer_added=layer_added, l_max=network.l_max)


class Trainer:
    """The main learning loop: sample, segment, update, periodic tasks.

    Owns the single RNG that drives line sampling and search randomness, so
    a run is reproducible from (corpus, config, seed) and resumable from a
    snapshot.
    """

    def __init__(self, network=None, config=None, rng_state=None):
        self.config = config or (network.config if network else Config())
        self.network = network or ConceptNetwork(self.config)
        self.rng = random.Random(self.config.seed)
        if rng_state is not None:
            self.rng.setstate(rng_state)
        self.comp_policy = CompositionPolicy.from_config(self.config)
        self.layer_policy = LayerPolicy.from_config(self.config)
        self.codebook = corpus_mod.BinaryCodebook() if self.config.binary_mode else None
        self.params = SearchParams.from_config(self.config)
        self.coma_mas = {}       # (level, kind) -> MovingAverage
        self.periodic_log = []
        self.validate_chains = False

    # one moving average per (level, metric); created on first observation
    def _ma(self, level, kind):
        key = (level, kind)
        ma = self.coma_mas.get(key)
        if ma is None:
            ma = MovingAverage(rate=self.config.ma_rate)
            self.coma_mas[key] = ma
        return ma

    def make_episode(self, line):
        if self.config.binary_mode:
            return corpus_mod.make_binary_episode(line, self.codebook, self.network, self.rng)
        return corpus_mod.make_episode(line, self.network)

    def step(self, line):
        """Train on one line; returns the MetricsRecord for the episode."""
        net = self.network
        net.episode_idx += 1
        idx = net.episode_idx
        episode = self.make_episode(line)
        chain = segment(episode, net, self.params, self.rng)
        if self.validate_chains and not validate_chain(net, chain, episode.stripped):
            raise LearnerError(f"invalid chain at episode {idx}")
        update_active_concepts(chain, net, self.config, idx, self.comp_policy)
        min_active_freq = min(net.concepts[cid].freq
                              for seg in chain.levels for cid in seg.concept_ids)
        self.layer_policy.trigger.update(min_active_freq)
        record = episode_metrics(chain, episode, net, idx)
        for level, stats in enumerate(record.per_level):
            for kind in ("fast_coma", "coma_opt", "coma_actual", "qloss", "n_active"):
                self._ma(level, kind).update(stats[kind])
        self._ma(len(chain.levels) - 1, "bad_ratio").update(record.split.bad_ratio)
        if idx % self.config.period == 0:
            report = run_periodic_tasks(net, self.comp_policy, self.layer_policy, idx)
            self.periodic_log.append(report)
        return record

    def train(self, handle, episodes, writer=None, progress=None):
        """Run `episodes` steps sampling lines from the corpus handle."""
        for _ in range(episodes):
            record = self.step(handle.sample(self.rng))
            if writer is not None:
                writer.write(record)
            if progress is not None:
                progress(record)

    def ma_value(self, level, kind):
        ma = self.coma_mas.get((level, kind))
        return ma.value if ma is not None and ma.initialized else None

    # -- persistence -------------------------------------------------------

    def to_state(self):
        return {
            "rng_state": _encode_rng_state(self.rng.getstate()),
            "coma_mas": [[list(k), ma.to_state()] for k, ma in self.coma_mas.items()],
            "layer_trigger": self.layer_policy.trigger.to_state(),
            "manual_layers_done": self.layer_policy.manual_done,
            "codebook": self.codebook.to_state() if self.codebook else None,
        }

    def restore_state(self, state):
        self.rng.setstate(_decode_rng_state(state["rng_state"]))
        self.coma_mas = {tuple(k): MovingAverage.from_state(s)
                         for k, s in state["coma_mas"]}
        self.layer_policy.trigger = MovingAverage.from_state(state["layer_trigger"])
        self.layer_policy.manual_done = state.get("manual_layers_done", 0)
        if state["codebook"] is not None:
            self.codebook = corpus_mod.BinaryCodebook.from_state(state["codebook"])


def _encode_rng_state(state):
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _decode_rng_state(enc):
    version, internal, gauss = enc
    return (version, tuple(internal), gauss)
