"""UCI protocol front end.

The command reader runs on the calling thread; each ``go`` starts a search on
a worker thread so ``stop`` and ``isready`` are answered while it runs.
"""

from __future__ import annotations

import sys
import threading
import time
from typing import IO, Iterable, Optional

import chess

from .chess_core import FenError, IllegalMoveError, Position, parse_fen, parse_move, make_move
from .genome import PvtSet, find_record, unflatten
from .search import MATE_THRESHOLD, SearchLimits, SearchResult, Searcher

ENGINE_NAME = "Phoenix"
ENGINE_AUTHOR = "Phoenix developers"


class UciSession:
    def __init__(self, output: IO[str], store_path=None, chromosome_id: Optional[str] = None):
        self.output = output
        self.store_path = store_path
        self._lock = threading.Lock()
        self.position = Position.start()
        self.history: list[Position] = []
        self.pvt = PvtSet.zeros()
        self.chromosome_id = None
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        self._infinite_release = threading.Event()
        self._infinite = False
        if chromosome_id:
            self.load_chromosome(chromosome_id)

    # -- output ---------------------------------------------------------------
    def send(self, line: str) -> None:
        with self._lock:
            self.output.write(line + "\n")
            self.output.flush()

    def load_chromosome(self, chromosome_id: str) -> None:
        if self.store_path is None:
            raise KeyError(f"chromosome {chromosome_id!r}: no store configured")
        rec = find_record(self.store_path, chromosome_id)
        self.pvt = unflatten(rec.genes)
        self.chromosome_id = rec.id

    # -- search thread ---------------------------------------------------------
    @property
    def searching(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def wait(self) -> None:
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    def stop_search(self) -> None:
        self._stop.set()
        self._infinite_release.set()
        self.wait()

    def _info(self, result: SearchResult, started: float) -> None:
        if abs(result.score) >= MATE_THRESHOLD:
            score = f"mate {result.mate_in}"
        else:
            score = f"cp {int(round(result.score))}"
        elapsed = int((time.monotonic() - started) * 1000)
        pv = " ".join(m.uci() for m in result.principal_variation)
        self.send(f"info depth {result.depth_reached} score {score} nodes {result.nodes} time {elapsed} pv {pv}")

    def _run_search(self, position: Position, limits: SearchLimits, pvt) -> None:
        started = time.monotonic()
        best = "0000"
        try:
            if any(position._board.generate_legal_moves()):
                searcher = Searcher(pvt)
                result = searcher.search(
                    position, limits, stop=self._stop, on_iteration=lambda r: self._info(r, started)
                )
                best = result.best_move.uci()
        except Exception as exc:  # the engine must always answer go
            self.send(f"info string search error: {exc}")
        if limits.infinite:
            # in infinite mode bestmove waits for stop
            self._infinite_release.wait()
        self.send(f"bestmove {best}")

    def go(self, args: list[str]) -> None:
        self.stop_search()
        self._stop.clear()
        self._infinite_release.clear()
        limits = self._parse_go(args)
        self._infinite = limits.infinite
        self._thread = threading.Thread(
            target=self._run_search, args=(self.position, limits, self.pvt), daemon=True
        )
        self._thread.start()

    def _parse_go(self, args: list[str]) -> SearchLimits:
        opts = {}
        infinite = False
        i = 0
        while i < len(args):
            tok = args[i]
            if tok == "infinite":
                infinite = True
                i += 1
            elif tok in ("depth", "nodes", "movetime", "wtime", "btime", "winc", "binc", "movestogo", "mate") and i + 1 < len(args):
                try:
                    opts[tok] = int(args[i + 1])
                except ValueError:
                    self.send(f"info string ignoring bad value for {tok}")
                i += 2
            else:
                i += 1
        depth = opts.get("depth")
        nodes = opts.get("nodes")
        movetime = opts.get("movetime")
        if movetime is None and not infinite:
            white = self.position.side_to_move == chess.WHITE
            remaining = opts.get("wtime" if white else "btime")
            if remaining is not None:
                inc = opts.get("winc" if white else "binc", 0)
                togo = opts.get("movestogo", 30)
                movetime = max(10, remaining // max(togo, 1) + inc // 2)
        depth = depth if depth and depth > 0 else None
        nodes = nodes if nodes and nodes > 0 else None
        movetime = movetime if movetime and movetime > 0 else None
        if infinite or (depth is None and nodes is None and movetime is None):
            return SearchLimits(max_depth=depth, max_nodes=nodes, infinite=True)
        return SearchLimits(max_depth=depth, max_nodes=nodes, move_time=movetime)

    # -- commands --------------------------------------------------------------
    def set_position(self, args: list[str]) -> None:
        if not args:
            self.send("info string malformed position command")
            return
        if args[0] == "startpos":
            pos = Position.start()
            rest = args[1:]
        elif args[0] == "fen":
            if "moves" in args:
                k = args.index("moves")
                fen_fields, rest = args[1:k], args[k:]
            else:
                fen_fields, rest = args[1:], []
            if len(fen_fields) == 4:
                fen_fields = fen_fields + ["0", "1"]
            try:
                pos = parse_fen(" ".join(fen_fields))
            except FenError as exc:
                self.send(f"info string {exc}")
                return
        else:
            self.send(f"info string malformed position command: {' '.join(args)}")
            return
        if rest and rest[0] != "moves":
            self.send(f"info string malformed position command: {' '.join(args)}")
            return
        history = []
        for text in rest[1:]:
            try:
                move = parse_move(pos, text)
            except IllegalMoveError as exc:
                self.send(f"info string {exc}")
                return
            history.append(pos)
            pos = make_move(pos, move)
        self.position = pos
        self.history = history

    def handle(self, line: str) -> bool:
        """Process one command line; returns False on ``quit``."""
        tokens = line.split()
        if not tokens:
            return True
        cmd, args = tokens[0], tokens[1:]
        if cmd == "uci":
            self.send(f"id name {ENGINE_NAME}")
            self.send(f"id author {ENGINE_AUTHOR}")
            self.send("option name Chromosome type string default <empty>")
            self.send("uciok")
        elif cmd == "isready":
            self.send("readyok")
        elif cmd == "ucinewgame":
            self.stop_search()
            self.position = Position.start()
            self.history = []
        elif cmd == "position":
            self.stop_search()
            self.set_position(args)
        elif cmd == "go":
            self.go(args)
        elif cmd == "stop":
            self.stop_search()
        elif cmd == "setoption":
            self._setoption(args)
        elif cmd == "quit":
            self.stop_search()
            return False
        # unknown commands are ignored
        return True

    def _setoption(self, args: list[str]) -> None:
        if "name" not in args:
            return
        k = args.index("name")
        if "value" in args:
            v = args.index("value")
            name = " ".join(args[k + 1:v])
            value = " ".join(args[v + 1:])
        else:
            name, value = " ".join(args[k + 1:]), ""
        if name.lower() != "chromosome":
            return
        self.stop_search()
        if value in ("", "<empty>"):
            self.pvt = PvtSet.zeros()
            self.chromosome_id = None
            return
        try:
            self.load_chromosome(value)
        except (KeyError, OSError, ValueError) as exc:
            self.send(f"info string cannot load chromosome {value}: {exc}")


def uci_loop(input_stream: Iterable[str] = None, output_stream: IO[str] = None,
             store_path=None, chromosome_id: Optional[str] = None) -> int:
    """Run the protocol until ``quit`` or end of input; returns the exit status."""
    input_stream = sys.stdin if input_stream is None else input_stream
    output_stream = sys.stdout if output_stream is None else output_stream
    session = UciSession(output_stream, store_path, chromosome_id)
    for line in input_stream:
        try:
            if not session.handle(line.strip()):
                return 0
        except Exception as exc:  # never crash on garbage input
            session.send(f"info string error: {exc}")
    # end of input: let finite searches finish, stop infinite ones
    if session._infinite:
        session.stop_search()
    session.wait()
    return 0
