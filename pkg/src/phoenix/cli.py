"""Command line entry points: ``phoenix train|uci|match|rate|perft|mnc-demo``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
from sklearn.utils import check_random_state

from .chess_core import START_FEN, parse_fen, perft
from .genome import Chromosome, StoredChromosome, find_record, random_chromosome, save_store
from .mnc import BENCHMARKS, FunctionFitness, MultiNicheCrowding, benchmark_optimizer
from .rating import format_report, performance_rating, rate_from_pgn, score_fraction, MatchSummary
from .search import SearchLimits
from .tournament import OPENINGS, TournamentFitness, default_jobs, run_match


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    population_size: int = 20
    cs: int = 3
    cf: int = 3
    group_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    mutation_sigma: float = 10.0
    max_generations: int = 1000
    stale_best_generations: int = 10
    low_change_generations: int = 20
    low_change_threshold: float = 0.01
    rng_seed: int = 0
    scheme: str = "random"
    min_games: int = 3
    depth: int = 4
    max_plies: int = 300
    openings: int = len(OPENINGS)
    top_k: int = 5
    run_id: str = "phoenix"
    store: str = "chromosomes.pvt"
    metrics: str = "metrics.csv"

    MNC_KEYS = (
        "population_size", "cs", "cf", "group_size", "crossover_rate", "mutation_rate",
        "mutation_sigma", "max_generations", "stale_best_generations",
        "low_change_generations", "low_change_threshold",
    )

    def validate(self) -> None:
        try:
            self.optimizer()._validate_params()
        except ValueError as exc:
            key = str(exc).split()[0]
            raise ConfigError(f"{key}: {exc}") from None
        if self.scheme not in ("random", "round-robin"):
            raise ConfigError(f"scheme: expected 'random' or 'round-robin', got {self.scheme!r}")
        for key in ("min_games", "depth", "max_plies", "top_k"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key}: must be >= 1")
        if not 1 <= self.openings <= len(OPENINGS):
            raise ConfigError(f"openings: must be in [1, {len(OPENINGS)}]")
        if Path(self.store).resolve() == Path(self.metrics).resolve():
            raise ConfigError("metrics: must differ from store path")
        if not self.run_id or any(c.isspace() for c in self.run_id):
            raise ConfigError("run_id: must be nonempty without whitespace")

    def optimizer(self) -> MultiNicheCrowding:
        params = {k: getattr(self, k) for k in self.MNC_KEYS}
        return MultiNicheCrowding(random_state=self.rng_seed, **params)


def parse_config(text: str) -> TrainConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    types = {f.name: f.type for f in fields(TrainConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"{key}: unknown config key")
        kind = types[key]
        try:
            if kind in ("int", int):
                values[key] = int(value)
            elif kind in ("float", float):
                values[key] = float(value)
                if not math.isfinite(values[key]):
                    raise ValueError("not finite")
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(f"{key}: invalid value {value!r}") from None
    cfg = TrainConfig(**values)
    cfg.validate()
    return cfg


def dump_config(cfg: TrainConfig) -> str:
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in fields(cfg))


def load_config(path) -> TrainConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


METRIC_COLUMNS = ("generation", "best_fitness", "mean_fitness", "best_change_norm")


def train(cfg: TrainConfig, jobs: int = 1, log=print) -> MultiNicheCrowding:
    cfg.validate()
    evaluator = TournamentFitness(
        scheme=cfg.scheme,
        limits=SearchLimits(max_depth=cfg.depth),
        openings=OPENINGS[: cfg.openings],
        min_games=cfg.min_games,
        max_plies=cfg.max_plies,
        jobs=jobs,
    )
    opt = cfg.optimizer()
    with open(cfg.metrics, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS, extrasaction="ignore")
        writer.writeheader()

        def report(row):
            writer.writerow(row)
            fh.flush()
            log(
                f"generation {row['generation']}: best={row['best_fitness']:.1f} "
                f"mean={row['mean_fitness']:.2f}"
            )

        opt.fit(evaluator, reporter=report)

    ranked = opt.ranked_population()[: cfg.top_k] or [opt.best_]
    records = [
        StoredChromosome(
            f"{cfg.run_id}-s{cfg.rng_seed}-g{opt.n_generations_}-r{rank}",
            opt.n_generations_,
            float(ind.fitness),
            Chromosome(ind.genes),
        )
        for rank, ind in enumerate(ranked, start=1)
    ]
    save_store(cfg.store, records, append=True)
    log(f"termination: {opt.termination_reason_} after {opt.n_generations_} generations")
    log(f"stored {len(records)} chromosomes in {cfg.store}: {', '.join(r.id for r in records)}")
    return opt


def resolve_player(spec: str, seed: int = 0):
    """Chromosome for ``store:<path>#<id>``, ``random[:seed]`` or ``zero``."""
    if spec == "zero":
        return Chromosome.zeros()
    if spec == "random" or spec.startswith("random:"):
        s = int(spec.split(":", 1)[1]) if ":" in spec else seed
        return random_chromosome(s)
    if spec.startswith("store:"):
        body = spec[len("store:"):]
        if "#" not in body:
            raise ValueError(f"chromosome spec {spec!r}: expected store:<path>#<id>")
        path, cid = body.rsplit("#", 1)
        return find_record(path, cid).genes
    raise ValueError(f"unknown chromosome spec {spec!r} (use store:<path>#<id>, random, zero)")


def _player_names(a: str, b: str) -> tuple[str, str]:
    if a == b:
        return f"{a}-A", f"{b}-B"
    return a, b


def niche_report(benchmark_name: str, population, radius: float = 0.3) -> str:
    bench = BENCHMARKS[benchmark_name]
    xs = np.array([p.genes[0] for p in population])
    lines = [f"benchmark {benchmark_name}: {len(xs)} individuals"]
    found = 0
    for m in bench.minima:
        near = np.abs(xs - m)
        count = int(np.sum(near <= radius))
        found += count > 0
        lines.append(
            f"  minimum x={m:+.4f}: {count} within {radius}, closest x={xs[np.argmin(near)]:+.4f} "
            f"(distance {near.min():.4f})"
        )
    lines.append(f"niches occupied: {found} of {len(bench.minima)}")
    return "\n".join(lines)


# -- subcommands ----------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args.config)
    train(cfg, jobs=args.jobs)
    return 0


def cmd_uci(args) -> int:
    from .uci import uci_loop

    if args.chromosome:
        if not args.store:
            raise ValueError(f"chromosome {args.chromosome!r} requested without --store")
        find_record(args.store, args.chromosome)
    return uci_loop(sys.stdin, sys.stdout, args.store, args.chromosome)


def cmd_match(args) -> int:
    if args.games < 1:
        raise ValueError("--games must be >= 1")
    rng = check_random_state(args.seed)
    a = resolve_player(args.white, int(rng.randint(2**31 - 1)))
    b = resolve_player(args.black, int(rng.randint(2**31 - 1)))
    limits = (
        SearchLimits(max_depth=args.depth) if args.depth else SearchLimits(move_time=args.movetime)
    )
    names = _player_names(args.white, args.black)
    score, records = run_match(
        a, b, args.games, limits, pgn_path=args.pgn, rng=rng, names=names,
        max_plies=args.max_plies, jobs=args.jobs,
    )
    wins = sum(1 for r in records if r.score_for(names[0]) == 1.0)
    losses = sum(1 for r in records if r.score_for(names[0]) == 0.0)
    summary = MatchSummary(wins, len(records) - wins - losses, losses, args.opponent_elo or 0.0)
    print(f"{names[0]} vs {names[1]}: {score:g}/{len(records)} ({100 * score / len(records):.1f}%)")
    if args.opponent_elo is not None:
        rating = performance_rating(score_fraction(summary), args.opponent_elo)
        print(format_report(summary, rating, names[0]))
    return 0


def cmd_rate(args) -> int:
    summary, rating = rate_from_pgn(args.pgn, args.subject, args.opponent_elo)
    print(format_report(summary, rating, args.subject))
    return 0


def cmd_perft(args) -> int:
    if args.depth < 0:
        raise ValueError("--depth must be >= 0")
    print(perft(parse_fen(args.fen), args.depth))
    return 0


def cmd_mnc_demo(args) -> int:
    if args.function not in BENCHMARKS:
        raise ValueError(
            f"unknown benchmark {args.function!r}; available: {', '.join(sorted(BENCHMARKS))}"
        )
    if args.generations < 0:
        raise ValueError("--generations must be >= 0")
    bench = BENCHMARKS[args.function]
    if args.generations == 0:
        opt = benchmark_optimizer(bench, random_state=args.seed)
        population = opt.init_population(check_random_state(args.seed))
        print("initial random population")
    else:
        opt = benchmark_optimizer(bench, random_state=args.seed, max_generations=args.generations)
        opt.fit(FunctionFitness(bench))
        population = opt.population_
        print(f"after {opt.n_generations_} generations ({opt.termination_reason_})")
    print(niche_report(args.function, population))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phoenix", description="Self-optimizing PVT chess engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="evolve positional value tables by self-play")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("uci", help="speak UCI on stdin/stdout")
    p.add_argument("--store")
    p.add_argument("--chromosome")
    p.set_defaults(func=cmd_uci)

    p = sub.add_parser("match", help="play an engine-vs-engine match")
    p.add_argument("--white", required=True)
    p.add_argument("--black", required=True)
    p.add_argument("--games", type=int, required=True)
    tc = p.add_mutually_exclusive_group(required=True)
    tc.add_argument("--depth", type=int)
    tc.add_argument("--movetime", type=int)
    p.add_argument("--pgn", required=True)
    p.add_argument("--opponent-elo", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-plies", type=int, default=300)
    p.add_argument("--jobs", type=int, default=default_jobs())
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("rate", help="performance rating from a PGN file")
    p.add_argument("--pgn", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--opponent-elo", type=float, required=True)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("perft", help="count legal move tree leaves")
    p.add_argument("--fen", default=START_FEN)
    p.add_argument("--depth", type=int, required=True)
    p.set_defaults(func=cmd_perft)

    p = sub.add_parser("mnc-demo", help="multi-niche crowding on a 1-D benchmark")
    p.add_argument("--function", default="sinx2")
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mnc_demo)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as exc:
        print(f"phoenix {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
