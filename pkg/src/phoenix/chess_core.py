"""Rules-complete chess model built on python-chess.

:class:`Position` is an immutable value; every mutating operation returns a
new instance. Move generation, FEN handling and check detection are delegated
to :mod:`chess`, which is fast enough for perft 5 in pure Python.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional

import chess
import chess.polyglot

Move = chess.Move

WHITE = chess.WHITE
BLACK = chess.BLACK

START_FEN = chess.STARTING_FEN


class FenError(ValueError):
    """Raised when a FEN string is malformed or describes an illegal position."""

    def __init__(self, rule: str, fen: str):
        self.rule = rule
        self.fen = fen
        super().__init__(f"invalid FEN ({rule}): {fen!r}")


class IllegalMoveError(ValueError):
    pass


# python-chess status flags -> rule names reported by parse_fen
_STATUS_RULES = (
    (chess.STATUS_NO_WHITE_KING, "missing white king"),
    (chess.STATUS_NO_BLACK_KING, "missing black king"),
    (chess.STATUS_TOO_MANY_KINGS, "more than one king of a color"),
    (chess.STATUS_PAWNS_ON_BACKRANK, "pawn on back rank"),
    (chess.STATUS_OPPOSITE_CHECK, "side not to move is in check"),
    (chess.STATUS_INVALID_EP_SQUARE, "invalid en-passant square"),
    (chess.STATUS_BAD_CASTLING_RIGHTS, "castling rights inconsistent with placement"),
    (chess.STATUS_TOO_MANY_WHITE_PIECES, "too many white pieces"),
    (chess.STATUS_TOO_MANY_BLACK_PIECES, "too many black pieces"),
    (chess.STATUS_TOO_MANY_WHITE_PAWNS, "too many white pawns"),
    (chess.STATUS_TOO_MANY_BLACK_PAWNS, "too many black pawns"),
    (chess.STATUS_EMPTY, "empty board"),
)


class Position:
    """Immutable chess position.

    Wraps a private :class:`chess.Board` without a move stack. Use
    :meth:`board` to get a mutable copy for search.
    """

    __slots__ = ("_board",)

    def __init__(self, board: chess.Board):
        b = board.copy(stack=False)
        object.__setattr__(self, "_board", b)

    def __setattr__(self, name, value):
        raise AttributeError("Position is immutable")

    @classmethod
    def start(cls) -> "Position":
        return cls(chess.Board())

    def board(self) -> chess.Board:
        """Return a fresh mutable board for this position."""
        return self._board.copy(stack=False)

    @property
    def side_to_move(self) -> bool:
        return self._board.turn

    @property
    def halfmove_clock(self) -> int:
        return self._board.halfmove_clock

    @property
    def fullmove_number(self) -> int:
        return self._board.fullmove_number

    @property
    def en_passant_square(self) -> Optional[int]:
        return self._board.ep_square

    @property
    def castling_rights(self) -> tuple[bool, bool, bool, bool]:
        b = self._board
        return (
            b.has_kingside_castling_rights(WHITE),
            b.has_queenside_castling_rights(WHITE),
            b.has_kingside_castling_rights(BLACK),
            b.has_queenside_castling_rights(BLACK),
        )

    def piece_at(self, square: int) -> Optional[chess.Piece]:
        return self._board.piece_at(square)

    def piece_map(self) -> dict[int, chess.Piece]:
        return self._board.piece_map()

    def is_check(self) -> bool:
        return self._board.is_check()

    def mirror(self) -> "Position":
        """Color-flipped vertical mirror: recolor pieces, flip ranks, swap side to move."""
        return Position(self._board.mirror())

    def zobrist(self) -> int:
        return position_hash(self)

    def __eq__(self, other):
        if not isinstance(other, Position):
            return NotImplemented
        return to_fen(self) == to_fen(other)

    def __hash__(self):
        return hash(to_fen(self))

    def __repr__(self):
        return f"Position({to_fen(self)!r})"


def parse_fen(text: str) -> Position:
    fields = text.split()
    if len(fields) != 6:
        raise FenError(f"expected 6 fields, got {len(fields)}", text)
    try:
        board = chess.Board(text)
    except ValueError as exc:
        raise FenError(str(exc), text) from None
    status = board.status()
    for flag, rule in _STATUS_RULES:
        if status & flag:
            raise FenError(rule, text)
    if status != chess.STATUS_VALID:
        raise FenError(f"illegal position (status {int(status)})", text)
    return Position(board)


def to_fen(pos: Position) -> str:
    # "fen" keeps the en-passant square after every double push
    return pos._board.fen(en_passant="fen")


def _move_key(m: Move) -> tuple[int, int, int]:
    return (m.from_square, m.to_square, m.promotion or 0)


def generate_legal_moves(pos: Position) -> list[Move]:
    """Legal moves sorted by (from-square, to-square, promotion)."""
    return sorted(pos._board.legal_moves, key=_move_key)


def make_move(pos: Position, move: Move) -> Position:
    board = pos.board()
    if not board.is_legal(move):
        raise IllegalMoveError(f"illegal move {move.uci()} in {to_fen(pos)}")
    board.push(move)
    return Position(board)


def parse_move(pos: Position, text: str) -> Move:
    """Parse long algebraic text (``e2e4``, ``e7e8q``) into a legal move."""
    try:
        move = Move.from_uci(text)
    except ValueError:
        raise IllegalMoveError(f"malformed move text {text!r}") from None
    if not pos._board.is_legal(move):
        raise IllegalMoveError(f"illegal move {text} in {to_fen(pos)}")
    return move


def position_hash(pos: Position | chess.Board) -> int:
    """64-bit Zobrist key over placement, side, castling and capturable en passant.

    Move counters are ignored, so equal keys mean FIDE-equal positions.
    """
    board = pos._board if isinstance(pos, Position) else pos
    return chess.polyglot.zobrist_hash(board)


class Outcome(enum.Enum):
    ONGOING = "ongoing"
    CHECKMATE = "checkmate"
    STALEMATE = "stalemate"
    FIFTY_MOVE = "fifty-move"
    THREEFOLD = "threefold"
    INSUFFICIENT_MATERIAL = "insufficient-material"
    ADJUDICATED = "adjudicated"


@dataclass(frozen=True)
class GameStatus:
    outcome: Outcome
    winner: Optional[bool] = None

    @property
    def is_over(self) -> bool:
        return self.outcome is not Outcome.ONGOING

    @property
    def is_draw(self) -> bool:
        return self.is_over and self.winner is None

    def __str__(self):
        if self.outcome is Outcome.CHECKMATE:
            return f"checkmate ({'white' if self.winner else 'black'} wins)"
        return self.outcome.value


ONGOING = GameStatus(Outcome.ONGOING)


def insufficient_material(board: chess.Board) -> bool:
    """K vs K, KB vs K, KN vs K, or KB vs KB with same-colored bishops."""
    if board.pawns or board.rooks or board.queens:
        return False
    minors = board.occupied & ~board.kings
    n = chess.popcount(minors)
    if n <= 1:
        return True
    if n == 2 and not board.knights:
        w = board.occupied_co[WHITE] & minors
        b = board.occupied_co[BLACK] & minors
        if w and b:
            light = bool(minors & chess.BB_LIGHT_SQUARES)
            dark = bool(minors & chess.BB_DARK_SQUARES)
            return light != dark
    return False


def game_status(pos: Position, history: Iterable[int] = ()) -> GameStatus:
    """Classify ``pos``; ``history`` holds hashes of all prior positions of the game."""
    return board_status(pos._board, history)


def board_status(board: chess.Board, history: Iterable[int] = (), key: Optional[int] = None) -> GameStatus:
    if not any(board.generate_legal_moves()):
        if board.is_check():
            return GameStatus(Outcome.CHECKMATE, winner=not board.turn)
        return GameStatus(Outcome.STALEMATE)
    if insufficient_material(board):
        return GameStatus(Outcome.INSUFFICIENT_MATERIAL)
    if board.halfmove_clock >= 100:
        return GameStatus(Outcome.FIFTY_MOVE)
    if key is None:
        key = position_hash(board)
    if sum(1 for h in history if h == key) + 1 >= 3:
        return GameStatus(Outcome.THREEFOLD)
    return ONGOING


def perft(pos: Position | chess.Board, depth: int) -> int:
    """Count leaf nodes of the legal move tree to ``depth`` plies."""
    board = pos.board() if isinstance(pos, Position) else pos.copy(stack=False)
    if depth == 0:
        return 1
    return _perft(board, depth)


def _perft(board: chess.Board, depth: int) -> int:
    if depth == 1:
        return board.legal_moves.count()
    n = 0
    for m in board.generate_legal_moves():
        board.push(m)
        n += _perft(board, depth - 1)
        board.pop()
    return n


def square_name(sq: int) -> str:
    return chess.square_name(sq)


def parse_square(name: str) -> int:
    return chess.parse_square(name)
