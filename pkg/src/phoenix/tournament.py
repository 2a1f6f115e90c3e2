"""Self-play games, fitness tournaments and engine matches with PGN export."""

from __future__ import annotations

import datetime
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import chess
import chess.pgn
import numpy as np
from sklearn.utils import check_random_state

from .chess_core import (
    START_FEN,
    GameStatus,
    Move,
    Outcome,
    Position,
    board_status,
    parse_fen,
    position_hash,
    to_fen,
)
from .evaluation import CompiledPvt, compile_pvt
from .genome import Chromosome, PvtSet
from .search import SearchError, Searcher, SearchLimits

DEFAULT_MAX_PLIES = 300

# positions after well-known four-ply opening sequences
OPENINGS = (
    "r1bqkbnr/pppp1ppp/2n5/4p3/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 2 3",  # 1.e4 e5 2.Nf3 Nc6
    "rnbqkbnr/pp2pppp/3p4/2p5/4P3/5N2/PPPP1PPP/RNBQKB1R w KQkq - 0 3",  # 1.e4 c5 2.Nf3 d6
    "rnbqkbnr/ppp2ppp/4p3/3p4/3PP3/8/PPP2PPP/RNBQKBNR w KQkq d6 0 3",  # 1.e4 e6 2.d4 d5
    "rnbqkbnr/pp2pppp/2p5/3p4/3PP3/8/PPP2PPP/RNBQKBNR w KQkq d6 0 3",  # 1.e4 c6 2.d4 d5
    "rnbqkbnr/ppp2ppp/4p3/3p4/2PP4/8/PP2PPPP/RNBQKBNR w KQkq - 0 3",  # 1.d4 d5 2.c4 e6
    "rnbqkbnr/pp2pppp/2p5/3p4/2PP4/8/PP2PPPP/RNBQKBNR w KQkq - 0 3",  # 1.d4 d5 2.c4 c6
    "rnbqkb1r/pppppp1p/5np1/8/2PP4/8/PP2PPPP/RNBQKBNR w KQkq - 0 3",  # 1.d4 Nf6 2.c4 g6
    "rnbqkb1r/pppp1ppp/4pn2/8/2PP4/8/PP2PPPP/RNBQKBNR w KQkq - 0 3",  # 1.d4 Nf6 2.c4 e6
    "rnbqkb1r/pppp1ppp/5n2/4p3/2P5/2N5/PP1PPPPP/R1BQKBNR w KQkq - 2 3",  # 1.c4 e5 2.Nc3 Nf6
    "rnbqkb1r/ppp1pppp/5n2/3p4/8/5NP1/PPPPPP1P/RNBQKB1R w KQkq - 1 3",  # 1.Nf3 d5 2.g3 Nf6
)

WHITE_WIN = "1-0"
BLACK_WIN = "0-1"
DRAW = "1/2-1/2"

ADJUDICATED = GameStatus(Outcome.ADJUDICATED)


def default_openings() -> list[Position]:
    return [parse_fen(f) for f in OPENINGS]


@dataclass(frozen=True)
class GameRecord:
    white_id: str
    black_id: str
    opening_id: int
    opening_fen: str
    moves: tuple[Move, ...]
    result: str
    termination: GameStatus
    seed: int

    def score_for(self, player_id: str) -> float:
        if self.result == DRAW:
            return 0.5
        if player_id == self.white_id:
            return 1.0 if self.result == WHITE_WIN else 0.0
        return 1.0 if self.result == BLACK_WIN else 0.0

    @property
    def white_points(self) -> float:
        return {WHITE_WIN: 1.0, BLACK_WIN: 0.0, DRAW: 0.5}[self.result]

    def to_pgn(self, event: str = "Phoenix self-play", round_: int | str = "?", date: Optional[str] = None) -> str:
        board = chess.Board(self.opening_fen)
        game = chess.pgn.Game()
        game.headers["Event"] = event
        game.headers["Site"] = "local"
        game.headers["Date"] = date or datetime.date.today().strftime("%Y.%m.%d")
        game.headers["Round"] = str(round_)
        game.headers["White"] = self.white_id
        game.headers["Black"] = self.black_id
        game.headers["Result"] = self.result
        if self.opening_fen != START_FEN:
            game.setup(board)
        game.headers["Termination"] = str(self.termination)
        node = game
        for m in self.moves:
            node = node.add_variation(m)
        exporter = chess.pgn.StringExporter(headers=True, variations=False, comments=False)
        return game.accept(exporter)


def _as_compiled(player) -> CompiledPvt:
    if player is None:
        return compile_pvt(PvtSet.zeros())
    if isinstance(player, (CompiledPvt, PvtSet, Chromosome)):
        return compile_pvt(player)
    return compile_pvt(Chromosome(player))


def play_game(
    white,
    black,
    limits: SearchLimits,
    opening: Position | str | None = None,
    max_plies: int = DEFAULT_MAX_PLIES,
    seed: int = 0,
    white_id: str = "white",
    black_id: str = "black",
    opening_id: int = -1,
) -> GameRecord:
    """Play one game; each side searches with its own table set.

    Games longer than ``max_plies`` are adjudicated drawn.
    """
    if opening is None:
        opening = Position.start()
    elif isinstance(opening, str):
        opening = parse_fen(opening)
    board = opening.board()
    searchers = {
        chess.WHITE: Searcher(_as_compiled(white)),
        chess.BLACK: Searcher(_as_compiled(black)),
    }
    history: list[int] = []
    moves: list[Move] = []
    key = position_hash(board)
    status = board_status(board, history, key)
    while not status.is_over:
        if len(moves) >= max_plies:
            status = ADJUDICATED
            break
        try:
            result = searchers[board.turn].search(board, limits)
        except SearchError as exc:
            raise SearchError(f"ply {len(moves)}: {exc}") from exc
        history.append(key)
        board.push(result.best_move)
        moves.append(result.best_move)
        key = position_hash(board)
        status = board_status(board, history, key)

    if status.outcome is Outcome.CHECKMATE:
        outcome = WHITE_WIN if status.winner == chess.WHITE else BLACK_WIN
    else:
        outcome = DRAW
    return GameRecord(
        white_id, black_id, opening_id, to_fen(opening), tuple(moves), outcome, status, seed
    )


# -- scheduling -----------------------------------------------------------------

@dataclass(frozen=True)
class Pairing:
    white: int
    black: int
    opening_id: int
    seed: int


def round_robin_pairings(n: int, n_openings: int, rng=None) -> list[Pairing]:
    """Every unordered pair plays twice with colors swapped, on the same opening."""
    rng = check_random_state(rng)
    pairings = []
    pair_index = 0
    for i in range(n):
        for j in range(i + 1, n):
            opening = pair_index % n_openings
            pairings.append(Pairing(i, j, opening, int(rng.randint(2**31 - 1))))
            pairings.append(Pairing(j, i, opening, int(rng.randint(2**31 - 1))))
            pair_index += 1
    return pairings


def random_pairings(n: int, min_games: int, n_openings: int, rng=None) -> list[Pairing]:
    """Random schedule giving everyone at least ``min_games`` games.

    Built from random cycles (one white and one black game per player each)
    plus, for odd ``min_games``, one random matching; per-player colors stay
    balanced within one.
    """
    if n < 2:
        raise ValueError("need at least two players")
    rng = check_random_state(rng)
    games: list[tuple[int, int]] = []
    for _ in range(min_games // 2):
        order = rng.permutation(n)
        for k in range(n):
            games.append((int(order[k]), int(order[(k + 1) % n])))
    if min_games % 2:
        order = [int(x) for x in rng.permutation(n)]
        balance = {}
        for k in range(0, n - 1, 2):
            a, b = order[k], order[k + 1]
            if rng.random_sample() < 0.5:
                a, b = b, a
            games.append((a, b))
            balance[a], balance[b] = 1, -1
        if n % 2:
            odd = order[-1]
            partner = order[int(rng.randint(n - 1))]
            # partner takes the color that evens out its matching game
            if balance[partner] > 0:
                games.append((odd, partner))
            else:
                games.append((partner, odd))
    return [
        Pairing(w, b, k % n_openings, int(rng.randint(2**31 - 1)))
        for k, (w, b) in enumerate(games)
    ]


@dataclass
class ScoreTable:
    points: dict[str, float] = field(default_factory=dict)
    games_played: dict[str, int] = field(default_factory=dict)
    white_games: dict[str, int] = field(default_factory=dict)
    black_games: dict[str, int] = field(default_factory=dict)
    records: list[GameRecord] = field(default_factory=list)

    @classmethod
    def from_records(cls, ids: Sequence[str], records: Iterable[GameRecord]) -> "ScoreTable":
        table = cls(
            {i: 0.0 for i in ids}, {i: 0 for i in ids}, {i: 0 for i in ids}, {i: 0 for i in ids}
        )
        for rec in records:
            table.records.append(rec)
            table.points[rec.white_id] += rec.white_points
            table.points[rec.black_id] += 1.0 - rec.white_points
            for pid in (rec.white_id, rec.black_id):
                table.games_played[pid] += 1
            table.white_games[rec.white_id] += 1
            table.black_games[rec.black_id] += 1
        return table

    @property
    def total_points(self) -> float:
        return sum(self.points.values())

    @property
    def total_games(self) -> int:
        return len(self.records)


def _play_task(args):
    white, black, limits, opening_fen, max_plies, seed, wid, bid, oid = args
    return play_game(white, black, limits, opening_fen, max_plies, seed, wid, bid, oid)


def default_jobs() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


def play_many(tasks: Sequence[tuple], jobs: int = 1, on_result=None) -> list[GameRecord]:
    """Play game tasks, sequentially or on a process pool; results keep task order."""
    records = []
    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            rec = _play_task(t)
            if on_result is not None:
                on_result(rec)
            records.append(rec)
        return records
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        for rec in pool.map(_play_task, tasks):
            if on_result is not None:
                on_result(rec)
            records.append(rec)
    return records


def _genes_of(player):
    if isinstance(player, Chromosome):
        return player.genes
    if isinstance(player, PvtSet):
        return player.tables.ravel()
    if player is None:
        return None
    return np.asarray(player, dtype=np.float64)


def run_fitness_tournament(
    players: Sequence,
    scheme: str = "random",
    limits: Optional[SearchLimits] = None,
    openings: Optional[Sequence[Position | str]] = None,
    rng=None,
    min_games: int = 3,
    max_plies: int = DEFAULT_MAX_PLIES,
    ids: Optional[Sequence[str]] = None,
    jobs: int = 1,
) -> ScoreTable:
    """Score ``players`` (chromosomes) with 1 / 0.5 / 0 points per game.

    ``scheme`` is ``"round-robin"`` or ``"random"`` (random pairing with at
    least ``min_games`` games each).
    """
    n = len(players)
    if n < 2:
        raise ValueError("a tournament needs at least two players")
    limits = limits or SearchLimits(max_depth=4)
    opening_fens = [to_fen(o) if isinstance(o, Position) else o for o in (openings or OPENINGS)]
    if not opening_fens:
        raise ValueError("openings must be nonempty")
    ids = list(ids) if ids is not None else [str(i) for i in range(n)]
    if scheme in ("round-robin", "roundrobin", "rr"):
        pairings = round_robin_pairings(n, len(opening_fens), rng)
    elif scheme in ("random", "random-pairing"):
        pairings = random_pairings(n, min_games, len(opening_fens), rng)
    else:
        raise ValueError(f"unknown tournament scheme {scheme!r}")
    genes = [_genes_of(p) for p in players]
    tasks = [
        (genes[p.white], genes[p.black], limits, opening_fens[p.opening_id], max_plies,
         p.seed, ids[p.white], ids[p.black], p.opening_id)
        for p in pairings
    ]
    return ScoreTable.from_records(ids, play_many(tasks, jobs))


class TournamentFitness:
    """MNC evaluator: every generation the whole population plays a tournament."""

    rescore_all = True

    def __init__(self, scheme="random", limits=None, openings=None, min_games=3,
                 max_plies=DEFAULT_MAX_PLIES, jobs=1):
        self.scheme = scheme
        self.limits = limits or SearchLimits(max_depth=4)
        self.openings = openings
        self.min_games = min_games
        self.max_plies = max_plies
        self.jobs = jobs

    def __call__(self, individuals, generation, seed):
        ids = [f"g{generation}-{k}" for k in range(len(individuals))]
        table = run_fitness_tournament(
            [ind.genes for ind in individuals], self.scheme, self.limits, self.openings,
            rng=seed, min_games=self.min_games, max_plies=self.max_plies, ids=ids, jobs=self.jobs,
        )
        return [table.points[i] for i in ids]


def run_match(
    engine_a,
    engine_b,
    n_games: int,
    limits: SearchLimits,
    openings: Optional[Sequence[Position | str]] = None,
    pgn_path=None,
    rng=None,
    names: tuple[str, str] = ("A", "B"),
    max_plies: int = DEFAULT_MAX_PLIES,
    jobs: int = 1,
    event: str = "Phoenix match",
) -> tuple[float, list[GameRecord]]:
    """Play ``n_games`` with strictly alternating colors; ``engine_a`` is White first.

    Each opening is played twice in a row, once with each color assignment.
    Games are appended to ``pgn_path`` as they finish.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    rng = check_random_state(rng)
    opening_fens = [to_fen(o) if isinstance(o, Position) else o for o in (openings or OPENINGS)]
    a_id, b_id = names
    ga, gb = _genes_of(engine_a), _genes_of(engine_b)
    tasks = []
    for i in range(n_games):
        fen = opening_fens[(i // 2) % len(opening_fens)]
        oid = (i // 2) % len(opening_fens)
        seed = int(rng.randint(2**31 - 1))
        if i % 2 == 0:
            tasks.append((ga, gb, limits, fen, max_plies, seed, a_id, b_id, oid))
        else:
            tasks.append((gb, ga, limits, fen, max_plies, seed, b_id, a_id, oid))

    fh = None
    if pgn_path is not None:
        path = Path(pgn_path)
        try:
            fh = open(path, "w", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write PGN to {path}: {exc}") from exc
    counter = iter(range(1, n_games + 1))

    def write(rec):
        if fh is not None:
            fh.write(rec.to_pgn(event=event, round_=next(counter)) + "\n\n")
            fh.flush()

    try:
        records = play_many(tasks, jobs, on_result=write)
    finally:
        if fh is not None:
            fh.close()
    score_a = sum(r.score_for(a_id) for r in records)
    return score_a, records


def read_pgn_games(path) -> list[chess.pgn.Game]:
    games = []
    with open(path, encoding="utf-8") as fh:
        while True:
            game = chess.pgn.read_game(fh)
            if game is None:
                break
            games.append(game)
    return games


def pgn_text(records: Iterable[GameRecord], event: str = "Phoenix match") -> str:
    buf = io.StringIO()
    for k, rec in enumerate(records, start=1):
        buf.write(rec.to_pgn(event=event, round_=k) + "\n\n")
    return buf.getvalue()
