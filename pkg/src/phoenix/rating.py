"""Elo performance rating from match results."""

from __future__ import annotations

import math
from dataclasses import dataclass

import chess.pgn

MAX_DIFF = 800.0


class RatingError(ValueError):
    pass


@dataclass(frozen=True)
class MatchSummary:
    wins: int
    draws: int
    losses: int
    opponent_elo: float = 0.0

    def __post_init__(self):
        if min(self.wins, self.draws, self.losses) < 0:
            raise RatingError("result counts must be non-negative")

    @property
    def games(self) -> int:
        return self.wins + self.draws + self.losses


def score_fraction(m: MatchSummary) -> float:
    if m.games == 0:
        raise RatingError("no games played")
    # exact for integer tallies: 2w + d over 2n
    return (2 * m.wins + m.draws) / (2 * m.games)


def rating_difference(s: float) -> float:
    """400 * log10(s / (1 - s)); a perfect or zero score maps to +-800."""
    if not 0.0 <= s <= 1.0:
        raise RatingError(f"score fraction must be in [0, 1], got {s}")
    if s <= 0.0:
        return -MAX_DIFF
    if s >= 1.0:
        return MAX_DIFF
    return 400.0 * math.log10(s / (1.0 - s))


def performance_rating(s: float, opponent_elo: float) -> float:
    return opponent_elo + rating_difference(s)


def tally_pgn(pgn_path, subject: str) -> tuple[int, int, int]:
    """Count the subject's wins, draws and losses over both colors."""
    wins = draws = losses = 0
    n_games = 0
    try:
        fh = open(pgn_path, encoding="utf-8")
    except OSError as exc:
        raise RatingError(f"cannot read {pgn_path}: {exc}") from None
    with fh:
        while True:
            headers = chess.pgn.read_headers(fh)
            if headers is None:
                break
            n_games += 1
            result = headers.get("Result", "*")
            white, black = headers.get("White"), headers.get("Black")
            if subject not in (white, black):
                continue
            if result == "1/2-1/2":
                draws += 1
            elif result in ("1-0", "0-1"):
                won = (result == "1-0") == (white == subject)
                if won:
                    wins += 1
                else:
                    losses += 1
            elif result != "*":
                raise RatingError(f"unparsable result {result!r} in game {n_games}")
    if n_games == 0:
        raise RatingError(f"no games found in {pgn_path}")
    return wins, draws, losses


def rate_from_pgn(pgn_path, subject: str, opponent_elo: float) -> tuple[MatchSummary, float]:
    w, d, l = tally_pgn(pgn_path, subject)
    summary = MatchSummary(w, d, l, opponent_elo)
    if summary.games == 0:
        raise RatingError(f"no finished games for {subject!r} in {pgn_path}")
    return summary, performance_rating(score_fraction(summary), opponent_elo)


def format_report(summary: MatchSummary, rating: float, subject: str = "subject") -> str:
    s = score_fraction(summary)
    return (
        f"{subject}: games={summary.games} W={summary.wins} D={summary.draws} "
        f"L={summary.losses} score={100 * s:.1f}% rating={rating:.1f}"
    )
