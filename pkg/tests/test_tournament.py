from collections import Counter

import chess
import chess.pgn
import numpy as np
import pytest

from phoenix.chess_core import Outcome, Position, game_status, make_move, parse_fen, position_hash
from phoenix.genome import Chromosome, PvtSet, random_chromosome
from phoenix.mnc import Individual
from phoenix.search import SearchLimits
from phoenix.tournament import (
    DRAW,
    OPENINGS,
    ScoreTable,
    TournamentFitness,
    play_game,
    random_pairings,
    read_pgn_games,
    round_robin_pairings,
    run_fitness_tournament,
    run_match,
)

D1 = SearchLimits.depth(1)
D2 = SearchLimits.depth(2)


def test_openings_are_legal_and_distinct():
    assert len(OPENINGS) == 10
    assert len(set(OPENINGS)) == 10
    for fen in OPENINGS:
        pos = parse_fen(fen)
        assert not game_status(pos).is_over


def test_play_game_deterministic():
    c = random_chromosome(3)
    a = play_game(c, c, D2, OPENINGS[0], max_plies=40, seed=9)
    b = play_game(c, c, D2, OPENINGS[0], max_plies=40, seed=9)
    assert a == b


def test_max_plies_one_adjudicates():
    rec = play_game(None, None, D1, max_plies=1)
    assert len(rec.moves) == 1
    assert rec.result == DRAW
    assert rec.termination.outcome is Outcome.ADJUDICATED


@pytest.mark.parametrize(
    "opening",
    [
        "4k3/8/8/8/8/8/8/3QK3 w - - 0 1",
        "7k/8/8/8/8/8/5PPP/3R2K1 w - - 0 1",
        OPENINGS[3],
    ],
)
def test_replay_reproduces_result(opening):
    rec = play_game(random_chromosome(1), None, D1, opening, max_plies=200)
    pos = parse_fen(rec.opening_fen)
    history = []
    for m in rec.moves:
        history.append(position_hash(pos))
        pos = make_move(pos, m)
    if rec.termination.outcome is Outcome.ADJUDICATED:
        assert len(rec.moves) == 200
    else:
        assert game_status(pos, history) == rec.termination
        if rec.termination.outcome is Outcome.CHECKMATE:
            assert rec.result == ("1-0" if rec.termination.winner == chess.WHITE else "0-1")
        else:
            assert rec.result == DRAW


def test_mate_is_scored():
    rec = play_game(None, None, D2, "6k1/8/6K1/8/8/8/8/R7 w - - 0 1", max_plies=10)
    assert rec.result == "1-0"
    assert rec.score_for("white") == 1.0 and rec.score_for("black") == 0.0


def test_round_robin_schedule():
    pairings = round_robin_pairings(4, 10, rng=0)
    assert len(pairings) == 12
    ordered = Counter((p.white, p.black) for p in pairings)
    assert all(v == 1 for v in ordered.values())
    unordered = Counter(frozenset((p.white, p.black)) for p in pairings)
    assert len(unordered) == 6 and all(v == 2 for v in unordered.values())


@pytest.mark.parametrize("n", [2, 3, 5, 19, 20])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_random_pairings_schedule(n, k):
    for seed in range(10):
        pairings = random_pairings(n, k, 10, rng=seed)
        games, white, black = Counter(), Counter(), Counter()
        for p in pairings:
            assert p.white != p.black
            games[p.white] += 1
            games[p.black] += 1
            white[p.white] += 1
            black[p.black] += 1
        for i in range(n):
            assert games[i] >= k
            assert abs(white[i] - black[i]) <= 1


def test_random_pairing_twenty_players_thirty_games():
    assert len(random_pairings(20, 3, 10, rng=1)) == 30


def test_round_robin_tournament_four_players():
    players = [random_chromosome(s) for s in range(4)]
    table = run_fitness_tournament(players, "round-robin", D1, rng=0, max_plies=16)
    assert table.total_games == 12
    assert all(v == 6 for v in table.games_played.values())
    assert all(table.white_games[i] == 3 == table.black_games[i] for i in table.points)
    assert table.total_points == pytest.approx(12.0)


def test_random_tournament_twenty_players():
    players = [random_chromosome(s) for s in range(20)]
    table = run_fitness_tournament(players, "random", D1, rng=5, min_games=3, max_plies=6)
    assert all(v >= 3 for v in table.games_played.values())
    assert table.total_points == pytest.approx(table.total_games)
    for i in table.points:
        assert abs(table.white_games[i] - table.black_games[i]) <= 1


def test_two_player_head_to_head():
    table = run_fitness_tournament([random_chromosome(1), None], "round-robin", D1, rng=0, max_plies=10)
    assert table.total_games == 2
    assert sum(table.points.values()) == 2.0


def test_tournament_deterministic_and_parallel_equal():
    players = [random_chromosome(s) for s in range(4)]
    kwargs = dict(scheme="random", limits=D1, rng=11, min_games=3, max_plies=20)
    seq = run_fitness_tournament(players, jobs=1, **kwargs)
    again = run_fitness_tournament(players, jobs=1, **kwargs)
    par = run_fitness_tournament(players, jobs=2, **kwargs)
    assert seq.records == again.records == par.records
    assert seq.points == par.points


def test_unknown_scheme():
    with pytest.raises(ValueError):
        run_fitness_tournament([None, None], "swiss", D1)


def test_tournament_fitness_evaluator():
    ev = TournamentFitness(scheme="random", limits=D1, min_games=3, max_plies=8)
    inds = [Individual(random_chromosome(s).genes) for s in range(4)]
    scores = ev(inds, generation=0, seed=3)
    assert len(scores) == 4
    assert ev.rescore_all
    assert ev(inds, generation=0, seed=3) == scores


def test_match_identical_players_mirror_colors(tmp_path):
    pgn = tmp_path / "m.pgn"
    c = random_chromosome(2)
    score, records = run_match(c, c, 2, D1, pgn_path=pgn, rng=0, names=("a", "b"), max_plies=30)
    assert (records[0].white_id, records[1].white_id) == ("a", "b")
    assert records[0].opening_id == records[1].opening_id
    score_b = sum(r.score_for("b") for r in records)
    assert score + score_b == 2.0


def test_match_pgn_reparses(tmp_path):
    pgn = tmp_path / "m.pgn"
    _, records = run_match(random_chromosome(4), None, 6, D1, pgn_path=pgn, rng=1, max_plies=30,
                           names=("evo", "zero"))
    games = read_pgn_games(pgn)
    assert len(games) == 6
    for game, rec in zip(games, records):
        for tag in ("Event", "Site", "Date", "Round", "White", "Black", "Result"):
            assert tag in game.headers
        assert game.headers["Result"] == rec.result
        assert game.board().fen() == chess.Board(rec.opening_fen).fen()
        assert game.headers["SetUp"] == "1"
        assert not game.errors
        assert list(game.mainline_moves()) == list(rec.moves)
    whites = [g.headers["White"] for g in games]
    assert whites == ["evo", "zero"] * 3


def test_match_errors(tmp_path):
    with pytest.raises(ValueError):
        run_match(None, None, 0, D1)
    with pytest.raises(OSError):
        run_match(None, None, 1, D1, pgn_path=tmp_path / "missing" / "x.pgn")


def test_scoretable_conservation():
    recs = [play_game(None, None, D1, OPENINGS[k], max_plies=4, white_id=w, black_id=b)
            for k, (w, b) in enumerate([("x", "y"), ("y", "x"), ("x", "y")])]
    table = ScoreTable.from_records(["x", "y"], recs)
    assert table.total_points == 3.0
    assert table.games_played == {"x": 3, "y": 3}
