"""Phoenix: a chess engine whose evaluation is learned positional value tables.

The tables are evolved with a Multi-Niche Crowding genetic algorithm through
self-play tournaments and the engine speaks UCI.
"""

from .chess_core import (
    GameStatus,
    Move,
    Position,
    game_status,
    generate_legal_moves,
    make_move,
    parse_fen,
    perft,
    to_fen,
)
from .evaluation import GamePhase, PvtEvaluator, detect_phase, evaluate
from .genome import (
    Chromosome,
    PvtSet,
    StoredChromosome,
    flatten,
    load_store,
    random_chromosome,
    save_store,
    unflatten,
)
from .mnc import MultiNicheCrowding, TerminationReason
from .rating import MatchSummary, performance_rating, score_fraction
from .search import SearchLimits, SearchResult, order_moves, search_best_move

__version__ = "0.1.0"
