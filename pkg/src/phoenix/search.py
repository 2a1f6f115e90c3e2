"""Iterative-deepening negamax alpha-beta with quiescence and PVT move ordering."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import chess

from .chess_core import Move, Position
from .evaluation import (
    MATE_SCORE,
    MATERIAL,
    CompiledPvt,
    board_phase,
    compile_pvt,
    evaluate_board,
)

INF = float("inf")
MATE_THRESHOLD = MATE_SCORE - 1000
MAX_DEPTH = 64

_EXACT, _LOWER, _UPPER = 0, 1, 2


class SearchError(RuntimeError):
    pass


class _Stopped(Exception):
    pass


@dataclass(frozen=True)
class SearchLimits:
    max_depth: Optional[int] = None
    max_nodes: Optional[int] = None
    move_time: Optional[float] = None  # milliseconds
    infinite: bool = False

    def __post_init__(self):
        if not self.infinite and self.max_depth is None and self.max_nodes is None and self.move_time is None:
            raise ValueError("SearchLimits needs at least one of max_depth, max_nodes, move_time")
        for name in ("max_depth", "max_nodes", "move_time"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @classmethod
    def depth(cls, d: int) -> "SearchLimits":
        return cls(max_depth=d)


@dataclass
class SearchResult:
    best_move: Move
    score: float  # side-to-move perspective
    depth_reached: int
    nodes: int
    principal_variation: list[Move] = field(default_factory=list)

    @property
    def is_mate(self) -> bool:
        return abs(self.score) >= MATE_THRESHOLD

    @property
    def mate_in(self) -> Optional[int]:
        """Moves to mate (negative when being mated), or None."""
        if not self.is_mate:
            return None
        plies = MATE_SCORE - abs(self.score)
        moves = (int(plies) + 1) // 2
        return moves if self.score > 0 else -moves


def _victim_type(board: chess.Board, move: Move) -> Optional[int]:
    victim = board.piece_type_at(move.to_square)
    if victim is None and board.is_en_passant(move):
        return chess.PAWN
    return victim


def _move_keys(board: chess.Board, moves: Sequence[Move], compiled: CompiledPvt):
    raw = compiled.raw[board_phase(board)][board.turn]
    keys = []
    for m in moves:
        mover = board.piece_type_at(m.from_square)
        victim = _victim_type(board, m)
        dest_type = m.promotion or mover
        positional = raw[dest_type][m.to_square]
        if victim is not None:
            keys.append((0, -(MATERIAL[victim] * 16 - MATERIAL[mover] // 10), -positional))
        else:
            keys.append((1, 0, -positional))
    return keys


def order_moves(pos: Position | chess.Board, moves: Sequence[Move], pvt) -> list[Move]:
    """Captures first by MVV-LVA, then by the mover's table value on the destination.

    Stable: moves with equal keys keep their input order.
    """
    board = pos._board if isinstance(pos, Position) else pos
    if not moves:
        return []
    compiled = compile_pvt(pvt)
    keys = _move_keys(board, moves, compiled)
    order = sorted(range(len(moves)), key=keys.__getitem__)
    return [moves[i] for i in order]


def _generation_order(moves):
    return sorted(moves, key=lambda m: (m.from_square, m.to_square, m.promotion or 0))


class Searcher:
    """Single-threaded search engine bound to one positional value table set.

    ``use_tt`` enables a fixed-size replace-always transposition table;
    ``ordering=False`` searches moves in plain generation order.
    """

    def __init__(
        self,
        pvt,
        use_tt: bool = True,
        ordering: bool = True,
        quiescence: bool = True,
        tt_bits: int = 18,
        check_interval: int = 64,
    ):
        self.compiled = compile_pvt(pvt)
        self.use_tt = use_tt
        self.ordering = ordering
        self.quiescence = quiescence
        self.tt_mask = (1 << tt_bits) - 1
        self.check_interval = check_interval
        self._tt: dict[int, tuple] = {}
        self.nodes = 0

    # -- helpers -----------------------------------------------------------
    def _static(self, board: chess.Board) -> float:
        score = evaluate_board(board, self.compiled)
        return score if board.turn == chess.WHITE else -score

    def _order(self, board: chess.Board, moves: list[Move], first: Optional[Move] = None) -> list[Move]:
        if self.ordering:
            moves = order_moves(board, _generation_order(moves), self.compiled)
        else:
            moves = _generation_order(moves)
        if first is not None and first in moves:
            moves.remove(first)
            moves.insert(0, first)
        return moves

    def _tick(self):
        self.nodes += 1
        if self.nodes % self.check_interval == 0:
            if self._stop is not None and self._stop.is_set():
                raise _Stopped
            if self._deadline is not None and time.monotonic() >= self._deadline:
                raise _Stopped
        if self._max_nodes is not None and self.nodes >= self._max_nodes:
            raise _Stopped

    def _tt_probe(self, key):
        entry = self._tt.get(hash(key) & self.tt_mask)
        if entry is not None and entry[0] == key:
            return entry
        return None

    def _tt_store(self, key, depth, flag, score, move, ply):
        if score >= MATE_THRESHOLD:
            score += ply
        elif score <= -MATE_THRESHOLD:
            score -= ply
        self._tt[hash(key) & self.tt_mask] = (key, depth, flag, score, move)

    # -- core --------------------------------------------------------------
    def _quiesce(self, board: chess.Board, alpha: float, beta: float, ply: int) -> float:
        self._tick()
        stand = self._static(board)
        if stand >= beta:
            return stand
        best = stand
        if stand > alpha:
            alpha = stand
        moves = [
            m for m in board.generate_legal_moves()
            if m.promotion == chess.QUEEN
            or (m.promotion is None and (board.is_capture(m)))
        ]
        if not moves:
            return best
        for m in self._order(board, moves):
            board.push(m)
            score = -self._quiesce(board, -beta, -alpha, ply + 1)
            board.pop()
            if score > best:
                best = score
                if score > alpha:
                    alpha = score
                    if alpha >= beta:
                        break
        return best

    def _alphabeta(self, board, depth, alpha, beta, ply, pv_out: list) -> float:
        if depth <= 0:
            if self.quiescence:
                return self._quiesce(board, alpha, beta, ply)
            self._tick()
            return self._static(board)
        self._tick()

        tt_move = None
        key = None
        if self.use_tt:
            key = board._transposition_key()
            entry = self._tt_probe(key)
            if entry is not None:
                _, e_depth, flag, e_score, tt_move = entry
                if e_depth >= depth:
                    if e_score >= MATE_THRESHOLD:
                        e_score -= ply
                    elif e_score <= -MATE_THRESHOLD:
                        e_score += ply
                    if (
                        flag == _EXACT
                        or (flag == _LOWER and e_score >= beta)
                        or (flag == _UPPER and e_score <= alpha)
                    ):
                        if tt_move is not None:
                            pv_out[:] = [tt_move]
                        return e_score

        moves = list(board.generate_legal_moves())
        if not moves:
            return -(MATE_SCORE - ply) if board.is_check() else 0.0

        alpha_orig = alpha
        best = -INF
        best_move = None
        child_pv: list = []
        for m in self._order(board, moves, tt_move):
            child_pv.clear()
            board.push(m)
            score = -self._alphabeta(board, depth - 1, -beta, -alpha, ply + 1, child_pv)
            board.pop()
            if score > best:
                best = score
                best_move = m
                if score > alpha:
                    alpha = score
                    pv_out[:] = [m] + child_pv
                    if alpha >= beta:
                        break

        if self.use_tt:
            if best <= alpha_orig:
                flag = _UPPER
            elif best >= beta:
                flag = _LOWER
            else:
                flag = _EXACT
            self._tt_store(key, depth, flag, best, best_move, ply)
        return best

    def _root(self, board, depth, root_moves):
        """Full-window search of ``root_moves`` in the given order; ties keep the first."""
        alpha, beta = -INF, INF
        best = -INF
        best_move = root_moves[0]
        best_pv = [best_move]
        child_pv: list = []
        for m in root_moves:
            child_pv.clear()
            board.push(m)
            score = -self._alphabeta(board, depth - 1, -beta, -alpha, 1, child_pv)
            board.pop()
            if score > best:
                best = score
                best_move = m
                best_pv = [m] + child_pv
                if score > alpha:
                    alpha = score
        return best, best_move, best_pv

    def search(
        self,
        pos: Position | chess.Board,
        limits: SearchLimits,
        stop: Optional[threading.Event] = None,
        on_iteration: Optional[Callable[[SearchResult], None]] = None,
    ) -> SearchResult:
        board = pos.board() if isinstance(pos, Position) else pos.copy(stack=False)
        moves = list(board.generate_legal_moves())
        if not moves:
            raise SearchError("no legal moves in root position")

        self.nodes = 0
        self._tt = {}
        self._stop = stop
        self._max_nodes = limits.max_nodes
        self._deadline = (
            time.monotonic() + limits.move_time / 1000.0 if limits.move_time is not None else None
        )
        max_depth = min(limits.max_depth or MAX_DEPTH, MAX_DEPTH)

        root_moves = self._order(board, moves)
        result = None
        depth = 0
        while depth < max_depth:
            depth += 1
            try:
                score, best_move, pv = self._root(board, depth, root_moves)
            except _Stopped:
                break
            result = SearchResult(best_move, score, depth, self.nodes, pv)
            if on_iteration is not None:
                on_iteration(result)
            root_moves.remove(best_move)
            root_moves.insert(0, best_move)
            if abs(score) >= MATE_THRESHOLD and MATE_SCORE - abs(score) <= depth:
                break  # forced mate found within the full-width horizon
        if result is None:
            # interrupted before depth 1 completed
            result = SearchResult(root_moves[0], self._static(board), 0, self.nodes, [root_moves[0]])
        else:
            result.nodes = self.nodes
        self._stop = None
        return result

    def search_depth(self, pos: Position | chess.Board, depth: int) -> SearchResult:
        """One fixed-depth root search without iterative deepening."""
        board = pos.board() if isinstance(pos, Position) else pos.copy(stack=False)
        moves = list(board.generate_legal_moves())
        if not moves:
            raise SearchError("no legal moves in root position")
        self.nodes = 0
        self._tt = {}
        self._stop = None
        self._max_nodes = None
        self._deadline = None
        score, best_move, pv = self._root(board, depth, self._order(board, moves))
        return SearchResult(best_move, score, depth, self.nodes, pv)


def search_best_move(
    pos: Position,
    limits: SearchLimits,
    pvt,
    stop: Optional[threading.Event] = None,
    use_tt: bool = True,
) -> SearchResult:
    return Searcher(pvt, use_tt=use_tt).search(pos, limits, stop=stop)
