"""Bernoulli-stream simulator for learning-rate schedules.

Estimates a target probability p with EMA under either a static rate or
frequency-based decay (rate 1/t until the floor r_min engages), and counts
relative-error tolerance violations over the horizon.  While the rate is
exactly 1/t the estimate is maintained as an integer count over t, which is
what the EMA recursion equals in real arithmetic, so the decay phase matches
a plain running mean to the last bit.
"""

import random
import statistics
from dataclasses import dataclass

from .weights import RateSchedule, ema


@dataclass
class TrialResult:
    two_sided_violations: int
    over_violations: int
    first_in_tolerance: int       # T+1 when the estimate never enters tolerance
    trajectory: list = None


def run_trial(p, T, schedule, eps, rng, keep_trajectory=False):
    """One stream of T Bernoulli(p) draws under the given schedule.

    A step t violates when |a_t - p| / p > eps; an over-violation when
    (a_t - p) / p > eps.  first_in_tolerance is the first non-violating step.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if T < 1 or eps <= 0.0:
        raise ValueError("need T >= 1 and eps > 0")
    decay = schedule.kind == "frequency_decay"
    r_min = schedule.r_min
    a = 0.0
    ones = 0
    violations = 0
    overs = 0
    first_ok = T + 1
    trajectory = [] if keep_trajectory else None
    for t in range(1, T + 1):
        o = 1 if rng.random() < p else 0
        if decay and 1.0 / t >= r_min:
            ones += o
            a = ones / t
        else:
            a = ema(o, a, r_min)
        if trajectory is not None:
            trajectory.append(a)
        err = (a - p) / p
        if err > eps or err < -eps:
            violations += 1
            if err > eps:
                overs += 1
        elif first_ok == T + 1:
            first_ok = t
    return TrialResult(two_sided_violations=violations, over_violations=overs,
                       first_in_tolerance=first_ok, trajectory=trajectory)


@dataclass
class ExperimentResult:
    p: float
    T: int
    schedule: RateSchedule
    eps: float
    trials: int
    mean_violations: float
    sd_violations: float
    mean_overs: float
    sd_overs: float
    mean_first: float
    sd_first: float


def run_experiment(p, T, schedule, eps, trials, seed):
    """Means and standard deviations over independent trials.

    Each trial gets its own deterministic RNG derived from the seed, so
    results are reproducible and trial-order independent.
    """
    if trials < 1:
        raise ValueError("need trials >= 1")
    results = [run_trial(p, T, schedule, eps, random.Random(seed * 1_000_003 + i))
               for i in range(trials)]
    def agg(values):
        mean = statistics.fmean(values)
        sd = statistics.pstdev(values) if len(values) > 1 else 0.0
        return mean, sd
    mv, sv = agg([r.two_sided_violations for r in results])
    mo, so = agg([r.over_violations for r in results])
    mf, sf = agg([r.first_in_tolerance for r in results])
    return ExperimentResult(p=p, T=T, schedule=schedule, eps=eps, trials=trials,
                            mean_violations=mv, sd_violations=sv,
                            mean_overs=mo, sd_overs=so,
                            mean_first=mf, sd_first=sf)
