"""EMA weight updating with frequency-based rate decay.

Every learned statistic in the system goes through the same update rule:
``ema(x_new, x_avg, r) = (1 - r) * x_avg + r * x_new``.  Prediction-edge maps
additionally use a rate schedule that starts at 1 and decays as 1/t down to a
floor ``r_min``.  While the rate is exactly 1/t the EMA is, algebraically, a
plain average of the observation stream; WeightMap exploits that by keeping
integer counts during that phase, so the average identity holds to the last
bit.  Once the floor engages, entries switch to floats with a shared decay
scale so that weakening all entries stays O(1) per update.
"""

from dataclasses import dataclass

DROP_THRESHOLD = 1e-12
_SWEEP_EVERY = 64
_RESCALE_FLOOR = 1e-150


@dataclass(frozen=True)
class RateSchedule:
    kind: str  # "static" or "frequency_decay"
    r_min: float = 0.0001

    def __post_init__(self):
        if self.kind not in ("static", "frequency_decay"):
            raise ValueError(f"unknown rate schedule kind {self.kind!r}")
        if not 0.0 < self.r_min < 1.0:
            raise ValueError("r_min must be in (0, 1)")


def ema(x_new, x_avg, r):
    """One exponentiated-moving-average step, rate r in [0, 1]."""
    return (1.0 - r) * x_avg + r * x_new


def get_rate(update_count, schedule):
    """Learning rate for the update numbered `update_count` (1-based)."""
    if schedule.kind == "static":
        return schedule.r_min
    return max(1.0 / update_count, schedule.r_min)


class WeightMap:
    """Budgeted sparse map target-id -> weight in [0, 1].

    Weights form a sub-distribution (sum <= 1).  Two internal phases:

    * count phase (frequency decay, rate still 1/t): weights are k/t with
      integer k, which is exactly what the EMA recursion produces in real
      arithmetic.
    * float phase (rate floored at r_min, or static schedule): entries hold
      raw values and `scale` carries the accumulated (1-r) weakening, so the
      effective weight is raw * scale.

    When an insert pushes the size past the budget, the minimum-weight entry
    is evicted (ties: least recently boosted).  Entries whose effective
    weight decays below DROP_THRESHOLD are swept out periodically.
    """

    __slots__ = ("budget", "update_count", "counts", "count_total",
                 "raw", "scale", "raw_total", "boost_seq")

    def __init__(self, budget=200):
        self.budget = budget
        self.update_count = 0
        self.counts = {}       # count phase: target -> int
        self.count_total = 0
        self.raw = None        # float phase: target -> raw weight
        self.scale = 1.0
        self.raw_total = 0.0
        self.boost_seq = {}    # target -> update_count of last boost

    def __len__(self):
        return len(self.raw) if self.raw is not None else len(self.counts)

    def __bool__(self):
        return len(self) > 0

    def weight(self, target):
        if self.raw is not None:
            return self.raw.get(target, 0.0) * self.scale
        if self.update_count == 0:
            return 0.0
        return self.counts.get(target, 0) / self.update_count

    def items(self):
        """Effective (target, weight) pairs, insertion-ordered."""
        if self.raw is not None:
            s = self.scale
            return [(c, v * s) for c, v in self.raw.items()]
        t = self.update_count
        return [(c, k / t) for c, k in self.counts.items()]

    def mass(self):
        """Total effective weight (sum of entries)."""
        if self.raw is not None:
            return self.raw_total * self.scale
        if self.update_count == 0:
            return 0.0
        return self.count_total / self.update_count

    def update_toward(self, target, schedule):
        """Strengthen the edge to `target` and weaken all others.

        Equivalent to: every entry c != target gets (1-r)*w, the target gets
        (1-r)*w + r, with r from the schedule at the incremented counter.
        """
        self.update_count += 1
        t = self.update_count
        r = get_rate(t, schedule)
        if self.raw is None and schedule.kind == "frequency_decay" and 1.0 / t >= schedule.r_min:
            self.counts[target] = self.counts.get(target, 0) + 1
            self.count_total += 1
        else:
            if self.raw is None:
                self._to_float_phase(t - 1)
            # raw_total tracks sum(raw); weakening is carried by scale alone
            self.scale *= 1.0 - r
            add = r / self.scale
            raw = self.raw
            raw[target] = raw.get(target, 0.0) + add
            self.raw_total += add
            if self.scale < _RESCALE_FLOOR:
                self._rescale()
        self.boost_seq[target] = t
        if len(self) > self.budget:
            self._evict_min()
        if t % _SWEEP_EVERY == 0 and self.raw is not None:
            self._sweep()

    def _to_float_phase(self, t_prev):
        raw = {}
        total = 0.0
        if t_prev > 0:
            for c, k in self.counts.items():
                w = k / t_prev
                raw[c] = w
                total += w
        self.raw = raw
        self.scale = 1.0
        self.raw_total = total
        self.counts = {}
        self.count_total = 0

    def _rescale(self):
        s = self.scale
        self.raw = {c: v * s for c, v in self.raw.items()}
        self.raw_total *= s
        self.scale = 1.0

    def _evict_min(self):
        if self.raw is not None:
            victim = min(self.raw, key=lambda c: (self.raw[c], self.boost_seq.get(c, 0)))
            self.raw_total -= self.raw.pop(victim)
        else:
            victim = min(self.counts, key=lambda c: (self.counts[c], self.boost_seq.get(c, 0)))
            self.count_total -= self.counts.pop(victim)
        self.boost_seq.pop(victim, None)

    def _sweep(self):
        thresh = DROP_THRESHOLD / self.scale
        dead = [c for c, v in self.raw.items() if v < thresh]
        for c in dead:
            self.raw_total -= self.raw.pop(c)
            self.boost_seq.pop(c, None)

    # -- persistence ------------------------------------------------------

    def to_state(self):
        return {
            "budget": self.budget,
            "update_count": self.update_count,
            "counts": list(self.counts.items()),
            "count_total": self.count_total,
            "raw": None if self.raw is None else list(self.raw.items()),
            "scale": self.scale,
            "raw_total": self.raw_total,
            "boost_seq": list(self.boost_seq.items()),
        }

    @classmethod
    def from_state(cls, state):
        m = cls(budget=state["budget"])
        m.update_count = state["update_count"]
        m.counts = {int(c): k for c, k in state["counts"]}
        m.count_total = state["count_total"]
        m.raw = None if state["raw"] is None else {int(c): v for c, v in state["raw"]}
        m.scale = state["scale"]
        m.raw_total = state["raw_total"]
        m.boost_seq = {int(c): s for c, s in state["boost_seq"]}
        return m


def update_for_position(predictor, target, offset, schedule, budget=200):
    """Update `predictor`'s weight map at `offset` toward `target`.

    Creates the per-offset map on first use.  The per-(predictor, offset)
    update counter lives inside the map and drives the rate decay.
    """
    wmap = predictor.weights.get(offset)
    if wmap is None:
        wmap = WeightMap(budget=budget)
        predictor.weights[offset] = wmap
    wmap.update_toward(target, schedule)


def update_hpp(concept, p, t_opt, r_mix=0.01):
    """Fold the probability the concept just received into its history.

    Concepts still in the exploration window (freq <= t_opt) keep the
    optimistic value 1.0.
    """
    if concept.freq <= t_opt:
        concept.hpp = 1.0
        return
    concept.hpp = ema(p, concept.hpp, r_mix)
    concept.invalidate_score_cache()
