"""Measurement: split diagnostics, losses, network statistics, metric sinks.

A split is a boundary between adjacent top-layer concepts (line start/end
excluded).  It is good when it lands on a recorded word boundary of the
episode; bad1 counts the bad ones, bad2 the bad ones whose successor split
(scanning left to right) is also bad — equivalently, concepts both of whose
ends fall inside words.  The last split has no successor and is never bad2.
"""

import csv
import math
import statistics
from dataclasses import dataclass

from . import scoring


class EvaluationError(Exception):
    pass


@dataclass
class SplitReport:
    total_splits: int
    bad1: int
    bad2: int

    @property
    def bad_ratio(self):
        return self.bad1 / self.total_splits if self.total_splits else 0.0


class MovingAverage:
    """EMA tracker that adopts the first observation wholly."""

    __slots__ = ("value", "rate", "initialized")

    def __init__(self, rate=0.01):
        self.value = 0.0
        self.rate = rate
        self.initialized = False

    def update(self, x):
        if not self.initialized:
            self.value = float(x)
            self.initialized = True
        else:
            self.value = (1.0 - self.rate) * self.value + self.rate * x
        return self.value

    def to_state(self):
        return [self.value, self.rate, self.initialized]

    @classmethod
    def from_state(cls, state):
        ma = cls(rate=state[1])
        ma.value = state[0]
        ma.initialized = state[2]
        return ma


def split_positions(surface_lengths):
    """Interior cumulative-length split positions of a segmentation."""
    positions = []
    acc = 0
    for length in surface_lengths[:-1]:
        acc += length
        positions.append(acc)
    return positions


def bad_splits(split_pos, boundaries):
    """SplitReport for split positions against ground-truth boundaries."""
    bad_flags = [pos not in boundaries for pos in split_pos]
    bad1 = sum(bad_flags)
    bad2 = sum(1 for i in range(len(bad_flags) - 1) if bad_flags[i] and bad_flags[i + 1])
    return SplitReport(total_splits=len(split_pos), bad1=bad1, bad2=bad2)


def count_bad_splits(chain, episode, network):
    """Split report of the chain's top layer against the episode's boundaries."""
    surfaces = chain.surfaces(network, len(chain.levels) - 1)
    if "".join(surfaces) != episode.stripped:
        raise EvaluationError("top segmentation does not spell the episode text")
    return bad_splits(split_positions([len(s) for s in surfaces]), episode.boundaries)


def quadratic_loss(chain, network):
    """Per-level mean (1-p)^2 on the actual probability of each position."""
    losses = []
    for seg in chain.levels:
        total = 0.0
        for i in range(len(seg)):
            p = scoring.get_prob(network, seg, i, optimistic=False)
            total += (1.0 - p) ** 2
        losses.append(total / len(seg))
    return losses


def _entropy(wmap):
    h = 0.0
    for _, w in wmap.items():
        if w > 0.0:
            h -= w * math.log(w)
    return h


def _aggregate(values):
    return {
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "max": max(values),
        "min": min(values),
    }


def entropy_stats(network, level, min_freq=0):
    """Per-offset entropy statistics of prediction edges at one level.

    Concepts below the frequency threshold are excluded; concepts with no
    edges at an offset contribute entropy 0.
    """
    if level > network.l_max:
        raise EvaluationError(f"no level {level}")
    members = [c for c in network.concepts if c.level == level and c.freq >= min_freq]
    stats = {"n": len(members)}
    for offset in network.config.offsets:
        values = []
        for c in members:
            wmap = c.weights.get(offset)
            values.append(_entropy(wmap) if wmap is not None else 0.0)
        stats[offset] = _aggregate(values) if values else None
    return stats


def mass_stats(network, level, min_freq=0, weight_thresholds=(0.01, 0.1)):
    """Mean retained probability mass and edge count above each threshold."""
    if level > network.l_max:
        raise EvaluationError(f"no level {level}")
    members = [c for c in network.concepts if c.level == level and c.freq >= min_freq]
    table = {"n": len(members)}
    for offset in network.config.offsets:
        per_threshold = {}
        for thresh in weight_thresholds:
            masses = []
            counts = []
            for c in members:
                wmap = c.weights.get(offset)
                if wmap is None:
                    masses.append(0.0)
                    counts.append(0)
                    continue
                kept = [w for _, w in wmap.items() if w >= thresh]
                masses.append(sum(kept))
                counts.append(len(kept))
            per_threshold[thresh] = {
                "mass": statistics.fmean(masses) if masses else 0.0,
                "count": statistics.fmean(counts) if counts else 0.0,
            }
        table[offset] = per_threshold
    return table


def concept_counts(network, level, min_freq=0, non_clone_only=False):
    if level > network.l_max:
        raise EvaluationError(f"no level {level}")
    return sum(1 for c in network.concepts
               if c.level == level and c.freq >= min_freq
               and (not non_clone_only or not c.is_clone))


METRICS_HEADER = ["episode", "level", "fast_coma", "coma_opt", "coma_actual",
                  "n_active", "min_freq", "median_freq", "qloss",
                  "splits", "bad1", "bad2", "bad_ratio"]


@dataclass
class MetricsRecord:
    episode: int
    per_level: list   # one dict per level with the score/frequency columns
    split: SplitReport

    def rows(self):
        for level, stats in enumerate(self.per_level):
            yield [self.episode, level,
                   repr(stats["fast_coma"]), repr(stats["coma_opt"]),
                   repr(stats["coma_actual"]), stats["n_active"],
                   stats["min_freq"], stats["median_freq"], repr(stats["qloss"]),
                   self.split.total_splits, self.split.bad1, self.split.bad2,
                   repr(self.split.bad_ratio)]


def episode_metrics(chain, episode, network, episode_idx):
    """Per-episode, per-level measurements of the selected chain."""
    split = count_bad_splits(chain, episode, network)
    qlosses = quadratic_loss(chain, network)
    per_level = []
    for level, seg in enumerate(chain.levels):
        freqs = sorted(network.concepts[cid].freq for cid in set(seg.concept_ids))
        per_level.append({
            "fast_coma": scoring.fast_coma(network, seg),
            "coma_opt": scoring.coma(network, seg, optimistic=True),
            "coma_actual": scoring.coma(network, seg, optimistic=False),
            "n_active": len(seg),
            "min_freq": freqs[0],
            "median_freq": statistics.median(freqs),
            "qloss": qlosses[level],
        })
    return MetricsRecord(episode=episode_idx, per_level=per_level, split=split)


class MetricsWriter:
    """Append-only CSV sink, one row per (episode, level)."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(METRICS_HEADER)

    def write(self, record):
        for row in record.rows():
            self._writer.writerow(row)

    def flush(self):
        self._fh.flush()

    def close(self):
        self._fh.close()


def smooth_series(values, median_window=3, mean_window=5):
    """Median-of-k then trailing mean-of-m smoothing for plotting CSV columns."""
    if median_window < 1 or mean_window < 1:
        raise ValueError("windows must be >= 1")
    medians = []
    for i in range(len(values)):
        lo = max(0, i - median_window + 1)
        medians.append(statistics.median(values[lo:i + 1]))
    out = []
    for i in range(len(medians)):
        lo = max(0, i - mean_window + 1)
        out.append(statistics.fmean(medians[lo:i + 1]))
    return out
