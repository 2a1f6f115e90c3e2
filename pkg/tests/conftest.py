import random

import chess
import numpy as np
import pytest

from phoenix.chess_core import Position
from phoenix.genome import GENE_MAX, GENE_MIN, N_TABLES, PvtSet


def random_walk_positions(n, seed=0, min_plies=4, max_plies=80):
    """Positions reached by uniformly random legal play, skipping finished games."""
    rnd = random.Random(seed)
    out = []
    while len(out) < n:
        board = chess.Board()
        for _ in range(rnd.randint(min_plies, max_plies)):
            moves = list(board.legal_moves)
            if not moves:
                break
            board.push(rnd.choice(moves))
        if any(board.legal_moves):
            out.append(Position(board))
    return out


def random_pvt(seed):
    rs = np.random.RandomState(seed)
    return PvtSet(rs.uniform(GENE_MIN, GENE_MAX, size=(N_TABLES, 64)))


@pytest.fixture(scope="session")
def walk_positions():
    return random_walk_positions(200, seed=11)
