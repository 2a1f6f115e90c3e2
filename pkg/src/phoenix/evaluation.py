"""Material plus positional-value-table evaluation.

Scores are in centipawns, positive when good for White. Each occupied square
contributes ``material(piece) + table(piece, phase)[square]``; Black reads the
table at the vertically mirrored square.
"""

from __future__ import annotations

import enum
from typing import Iterable

import chess
import numpy as np
from sklearn.base import BaseEstimator

from .chess_core import Position
from .genome import Chromosome, PvtSet, unflatten

MATE_SCORE = 100_000

MATERIAL = {
    chess.PAWN: 100,
    chess.KNIGHT: 320,
    chess.BISHOP: 330,
    chess.ROOK: 500,
    chess.QUEEN: 900,
    chess.KING: 0,
}

ENDGAME_NONPAWN_LIMIT = 1300


class GamePhase(enum.IntEnum):
    MIDDLE_GAME = 0
    END_GAME = 1


# table index per (phase, piece type); rook and queen reuse middle-game tables
TABLE_INDEX = {
    GamePhase.MIDDLE_GAME: {
        chess.PAWN: 0, chess.KNIGHT: 1, chess.BISHOP: 2,
        chess.ROOK: 3, chess.QUEEN: 4, chess.KING: 5,
    },
    GamePhase.END_GAME: {
        chess.PAWN: 6, chess.KNIGHT: 7, chess.BISHOP: 8,
        chess.ROOK: 3, chess.QUEEN: 4, chess.KING: 9,
    },
}


def _nonpawn_material(board: chess.Board, color: bool) -> int:
    occ = board.occupied_co[color]
    return (
        320 * chess.popcount(board.knights & occ)
        + 330 * chess.popcount(board.bishops & occ)
        + 500 * chess.popcount(board.rooks & occ)
        + 900 * chess.popcount(board.queens & occ)
    )


def board_phase(board: chess.Board) -> GamePhase:
    if not board.queens:
        return GamePhase.END_GAME
    if (
        _nonpawn_material(board, chess.WHITE) <= ENDGAME_NONPAWN_LIMIT
        and _nonpawn_material(board, chess.BLACK) <= ENDGAME_NONPAWN_LIMIT
    ):
        return GamePhase.END_GAME
    return GamePhase.MIDDLE_GAME


def detect_phase(pos: Position) -> GamePhase:
    return board_phase(pos._board)


class CompiledPvt:
    """Per-phase lookup lists ``[phase][color][piece_type][square]``.

    Material is folded into every entry and Black's lists are pre-mirrored,
    so evaluation is one lookup per piece.
    """

    __slots__ = ("pvt", "lookup", "raw")

    def __init__(self, pvt: PvtSet):
        self.pvt = pvt
        lookup = []
        raw = []
        for phase in GamePhase:
            per_color = {chess.WHITE: [None] * 7, chess.BLACK: [None] * 7}
            raw_color = {chess.WHITE: [None] * 7, chess.BLACK: [None] * 7}
            for pt, idx in TABLE_INDEX[phase].items():
                table = [float(v) for v in pvt.tables[idx]]
                mirrored = [table[sq ^ 56] for sq in range(64)]
                mat = float(MATERIAL[pt])
                per_color[chess.WHITE][pt] = [mat + v for v in table]
                per_color[chess.BLACK][pt] = [mat + v for v in mirrored]
                raw_color[chess.WHITE][pt] = table
                raw_color[chess.BLACK][pt] = mirrored
            lookup.append(per_color)
            raw.append(raw_color)
        self.lookup = lookup
        # positional part only, from the mover's perspective; used for move ordering
        self.raw = raw


def compile_pvt(pvt: PvtSet | Chromosome | CompiledPvt) -> CompiledPvt:
    if isinstance(pvt, CompiledPvt):
        return pvt
    if isinstance(pvt, Chromosome):
        pvt = unflatten(pvt)
    return CompiledPvt(pvt)


_PIECE_TYPES = (chess.PAWN, chess.KNIGHT, chess.BISHOP, chess.ROOK, chess.QUEEN, chess.KING)


def _side_sum(board: chess.Board, color_mask: int, tables) -> float:
    total = 0.0
    for pt, bb in (
        (chess.PAWN, board.pawns),
        (chess.KNIGHT, board.knights),
        (chess.BISHOP, board.bishops),
        (chess.ROOK, board.rooks),
        (chess.QUEEN, board.queens),
        (chess.KING, board.kings),
    ):
        bb &= color_mask
        if not bb:
            continue
        table = tables[pt]
        while bb:
            sq = (bb & -bb).bit_length() - 1
            total += table[sq]
            bb &= bb - 1
    return total


def evaluate_board(board: chess.Board, compiled: CompiledPvt) -> float:
    """White-positive score of a raw board; the search hot path."""
    per_color = compiled.lookup[board_phase(board)]
    white = _side_sum(board, board.occupied_co[chess.WHITE], per_color[chess.WHITE])
    black = _side_sum(board, board.occupied_co[chess.BLACK], per_color[chess.BLACK])
    return white - black


def evaluate(pos: Position, pvt: PvtSet | Chromosome | CompiledPvt) -> float:
    return evaluate_board(pos._board, compile_pvt(pvt))


def material_balance(pos: Position) -> int:
    board = pos._board
    score = 0
    for pt in _PIECE_TYPES:
        score += MATERIAL[pt] * (
            chess.popcount(board.pieces_mask(pt, chess.WHITE))
            - chess.popcount(board.pieces_mask(pt, chess.BLACK))
        )
    return score


class PvtEvaluator(BaseEstimator):
    """Estimator wrapper: ``predict`` maps positions to White-positive scores.

    ``chromosome`` may be a :class:`Chromosome`, a :class:`PvtSet`, a raw
    640-vector, or ``None`` for material-only evaluation.
    """

    def __init__(self, chromosome=None):
        self.chromosome = chromosome

    def fit(self, X=None, y=None):
        c = self.chromosome
        if c is None:
            pvt = PvtSet.zeros()
        elif isinstance(c, PvtSet):
            pvt = c
        elif isinstance(c, Chromosome):
            pvt = unflatten(c)
        else:
            pvt = unflatten(Chromosome(c))
        self.pvt_ = pvt
        self.compiled_ = CompiledPvt(pvt)
        return self

    def predict(self, X: Iterable[Position]) -> np.ndarray:
        if not hasattr(self, "compiled_"):
            self.fit()
        return np.array([evaluate_board(p._board, self.compiled_) for p in X], dtype=np.float64)

