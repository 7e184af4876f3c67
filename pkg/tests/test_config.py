import pytest

from lexstrata.config import Config


def test_defaults():
    cfg = Config()
    assert cfg.window == 3
    assert cfg.offsets == (-3, -2, -1, 1, 2, 3)
    assert cfg.edge_budget == 200 and cfg.cooccur_budget == 200
    assert cfg.t_opt == 50
    assert cfg.rate_schedule == "frequency_decay" and cfg.r_min == 0.0001
    assert cfg.beam_tries == 10 and cfg.beam_keep == 3
    assert cfg.top_selector == "optimistic_coma"
    assert cfg.composition_mode == "model3"
    assert cfg.min_cooccur == 10 and cfg.min_tail_score == 5.0
    assert cfg.period == 1000 and cfg.layer_threshold == 500.0


def test_round_trip():
    cfg = Config(seed=7, layer_add_episodes=[10, 20])
    back = Config.from_dict(cfg.to_dict())
    assert back == cfg
    assert back.layer_add_episodes == (10, 20)


def test_validation():
    with pytest.raises(ValueError):
        Config(rate_schedule="nope")
    with pytest.raises(ValueError):
        Config(r_min=0.0)
    with pytest.raises(ValueError):
        Config(beam_keep=0)
    with pytest.raises(ValueError):
        Config(layer_threshold=10)  # must exceed t_opt
    with pytest.raises(ValueError):
        Config.from_dict({"no_such_field": 1})
