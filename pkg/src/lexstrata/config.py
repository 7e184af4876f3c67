"""Run configuration shared by training, segmentation and evaluation."""

from dataclasses import dataclass, field, fields


@dataclass
class Config:
    """All tunables of the system, with their standard defaults.

    window=3 means prediction offsets {-3,-2,-1,+1,+2,+3}.  top_selector is
    the score used to pick the final top-layer segmentation ("optimistic_coma"
    or "fast").  composition_mode is "model3" (compose only into the top
    layer, clone pairs allowed) or "model4" (compose at any layer, at least
    one non-clone).  layer_add_episodes forces layer additions at the given
    episode indices, on top of the automatic min-frequency trigger.
    """

    window: int = 3
    edge_budget: int = 200
    cooccur_budget: int = 200
    t_opt: int = 50
    rate_schedule: str = "frequency_decay"  # or "static"
    r_min: float = 0.0001
    r_mix: float = 0.01
    epsilon: float = 1e-10
    beam_tries: int = 10
    beam_keep: int = 3
    top_selector: str = "optimistic_coma"
    composition_mode: str = "model3"
    min_cooccur: int = 10
    min_tail_score: float = 5.0
    period: int = 1000
    layer_threshold: float = 500.0
    ma_rate: float = 0.01
    seed: int = 0
    binary_mode: bool = False
    layer_add_episodes: tuple = ()

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not 0.0 < self.r_min < 1.0:
            raise ValueError("r_min must be in (0, 1)")
        if self.rate_schedule not in ("frequency_decay", "static"):
            raise ValueError(f"unknown rate schedule {self.rate_schedule!r}")
        if self.top_selector not in ("optimistic_coma", "fast"):
            raise ValueError(f"unknown top selector {self.top_selector!r}")
        if self.composition_mode not in ("model3", "model4"):
            raise ValueError(f"unknown composition mode {self.composition_mode!r}")
        if self.beam_tries < 1 or self.beam_keep < 1:
            raise ValueError("beam tries/keep must be >= 1")
        if self.min_cooccur < 1 or self.min_tail_score <= 0:
            raise ValueError("composition thresholds must be positive")
        if self.layer_threshold <= self.t_opt:
            raise ValueError("layer_threshold must exceed t_opt")
        self.layer_add_episodes = tuple(int(e) for e in self.layer_add_episodes)

    @property
    def offsets(self):
        """Relative prediction positions, symmetric around 0 (0 excluded)."""
        w = self.window
        return tuple(range(-w, 0)) + tuple(range(1, w + 1))

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)
