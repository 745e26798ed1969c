"""Smoke test for the `gongzhu` extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/python

then run `python python/smoke_test.py` or `pytest python/smoke_test.py`.
"""

import gongzhu
import pytest

HEARTS = ["H" + r for r in "23456789TJQKA"]


def play_out(game, agents):
    while not game.is_terminal():
        seat = game.to_play()
        card = agents[seat].choose(game)
        assert card in game.legal_moves()
        game.play(card)
    return game


def test_full_game_scores_and_round_trips():
    agents = [gongzhu.Agent(n, seed=i) for i, n in enumerate(["greed", "random", "if", "random"])]
    game = play_out(gongzhu.Game(11), agents)
    assert len(game.history()) == 52
    scores = game.scores()
    assert game.team_differential() == scores[0] + scores[2] - scores[1] - scores[3]
    line = game.record()
    assert gongzhu.rescore(line) == scores
    again = gongzhu.Game.from_record(line)
    assert again.record() == line
    assert again.history() == game.history()


def test_illegal_play_raises():
    game = gongzhu.Game(3)
    legal = set(game.legal_moves())
    hand = set(game.hand(game.to_play()))
    assert legal <= hand and len(hand) == 13
    foreign = next(c for c in HEARTS + ["SQ", "DJ", "CT"] if c not in hand)
    with pytest.raises(ValueError):
        game.play(foreign)
    with pytest.raises(ValueError):
        game.scores()


def test_view_hides_other_hands():
    game = gongzhu.Game(5)
    view = game.view(1)
    assert view["seat"] == 1
    assert "hands" not in view


def test_pile_points():
    assert gongzhu.pile_points(HEARTS) == 200
    assert gongzhu.pile_points(["SQ"]) == -100
    assert gongzhu.pile_points(["DJ"]) == 100
    assert gongzhu.pile_points(["CT"]) == 50
    assert gongzhu.pile_points(["CT", "SQ"]) == -200
    assert gongzhu.pile_points([]) == 0


def test_epsilon():
    rps = [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]
    assert gongzhu.epsilon(rps) == pytest.approx(1.0)
    r = [3.0, 1.0, -2.0, 0.5]
    rated = [[a - b for b in r] for a in r]
    assert gongzhu.epsilon(rated) == pytest.approx(0.0, abs=1e-12)


def test_match_report():
    report = gongzhu.play_match("greed", "random", deals=8, seed=2)
    assert report["schema_version"] == gongzhu.REPORT_SCHEMA_VERSION
    assert report["games"] == 16
    assert report == gongzhu.play_match("greed", "random", deals=8, seed=2)


def test_agent_registry():
    assert {"random", "if", "greed", "scrofa"} <= set(gongzhu.agent_names())
    with pytest.raises(ValueError):
        gongzhu.Agent("scrofa")
    with pytest.raises(ValueError):
        gongzhu.Agent("nobody")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
