"""Chromosome encoding of the positional value tables and the chromosome store."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from sklearn.utils import check_random_state

GENE_MIN = -100.0
GENE_MAX = 100.0

TABLE_NAMES = (
    "pawn_mg",
    "knight_mg",
    "bishop_mg",
    "rook_mg",
    "queen_mg",
    "king_mg",
    "pawn_eg",
    "knight_eg",
    "bishop_eg",
    "king_eg",
)
N_TABLES = len(TABLE_NAMES)
N_GENES = N_TABLES * 64

STORE_DECIMALS = 6


class GenomeError(ValueError):
    pass


def _check_genes(genes, length: int = N_GENES) -> np.ndarray:
    arr = np.asarray(genes, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != length:
        raise GenomeError(f"expected {length} genes, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GenomeError("genes must be finite")
    if arr.min(initial=0.0) < GENE_MIN or arr.max(initial=0.0) > GENE_MAX:
        raise GenomeError(f"genes must lie in [{GENE_MIN}, {GENE_MAX}]")
    return arr


class PvtSet:
    """Ten 64-square tables, White's perspective, index = rank * 8 + file.

    Rook and queen have no end-game table; callers fall back to the
    middle-game table for those pieces.
    """

    __slots__ = ("tables",)

    def __init__(self, tables):
        arr = np.array(tables, dtype=np.float64)
        if arr.shape != (N_TABLES, 64):
            raise GenomeError(f"expected ({N_TABLES}, 64) tables, got {arr.shape}")
        _check_genes(arr.ravel())
        arr.setflags(write=False)
        self.tables = arr

    @classmethod
    def zeros(cls) -> "PvtSet":
        return cls(np.zeros((N_TABLES, 64)))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tables[TABLE_NAMES.index(name)]

    def __eq__(self, other):
        if not isinstance(other, PvtSet):
            return NotImplemented
        return bool(np.array_equal(self.tables, other.tables))

    def __repr__(self):
        return f"PvtSet(min={self.tables.min():.2f}, max={self.tables.max():.2f})"


class Chromosome:
    """Flat vector of 640 genes, tables concatenated in :data:`TABLE_NAMES` order."""

    __slots__ = ("genes",)

    def __init__(self, genes):
        arr = _check_genes(genes).copy()
        arr.setflags(write=False)
        self.genes = arr

    @classmethod
    def clamped(cls, genes) -> "Chromosome":
        return cls(np.clip(np.asarray(genes, dtype=np.float64), GENE_MIN, GENE_MAX))

    @classmethod
    def zeros(cls) -> "Chromosome":
        return cls(np.zeros(N_GENES))

    def __len__(self):
        return N_GENES

    def __eq__(self, other):
        if not isinstance(other, Chromosome):
            return NotImplemented
        return bool(np.array_equal(self.genes, other.genes))

    def __repr__(self):
        return f"Chromosome(mean={self.genes.mean():.3f})"


def flatten(pvt: PvtSet) -> Chromosome:
    return Chromosome(pvt.tables.ravel())


def unflatten(chromosome: Chromosome | np.ndarray) -> PvtSet:
    genes = chromosome.genes if isinstance(chromosome, Chromosome) else _check_genes(chromosome)
    return PvtSet(genes.reshape(N_TABLES, 64))


def random_chromosome(rng=None) -> Chromosome:
    """Genes i.i.d. uniform over the gene bounds; ``rng`` is a seed or RandomState."""
    rs = check_random_state(rng)
    return Chromosome(rs.uniform(GENE_MIN, GENE_MAX, size=N_GENES))


@dataclass(frozen=True)
class StoredChromosome:
    id: str
    generation: int
    fitness: float
    genes: Chromosome

    def __eq__(self, other):
        if not isinstance(other, StoredChromosome):
            return NotImplemented
        return (
            self.id == other.id
            and self.generation == other.generation
            and self.fitness == other.fitness
            and self.genes == other.genes
        )


def _format_record(rec: StoredChromosome) -> str:
    genes = " ".join(f"{g:.{STORE_DECIMALS}f}" for g in rec.genes.genes)
    return f"{rec.id}\t{rec.generation}\t{rec.fitness!r}\t{genes}"


def save_store(path, records: Iterable[StoredChromosome], append: bool = False) -> None:
    """Write records to a ``.pvt`` file, one tab-separated line per record."""
    records = list(records)
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise GenomeError("duplicate chromosome ids")
    path = Path(path)
    if append and path.exists():
        existing = {r.id for r in load_store(path)}
        clash = existing.intersection(ids)
        if clash:
            raise GenomeError(f"ids already in store: {sorted(clash)}")
    mode = "a" if append and path.exists() else "w"
    with open(path, mode, encoding="utf-8") as fh:
        if mode == "w":
            fh.write("# id\tgeneration\tfitness\tgenes (640)\n")
        for rec in records:
            fh.write(_format_record(rec) + "\n")


def load_store(path) -> list[StoredChromosome]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"chromosome store not found: {path}")
    records: list[StoredChromosome] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise GenomeError(f"line {lineno}: expected 4 tab-separated fields")
            rid, gen, fit, genes = parts
            tokens = genes.split()
            if len(tokens) != N_GENES:
                raise GenomeError(f"line {lineno}: expected {N_GENES} genes, got {len(tokens)}")
            try:
                generation = int(gen)
                fitness = float(fit)
                values = [float(t) for t in tokens]
            except ValueError as exc:
                raise GenomeError(f"line {lineno}: {exc}") from None
            if not math.isfinite(fitness):
                raise GenomeError(f"line {lineno}: non-finite fitness")
            if rid in seen:
                raise GenomeError(f"line {lineno}: duplicate id {rid!r}")
            seen.add(rid)
            try:
                chrom = Chromosome(values)
            except GenomeError as exc:
                raise GenomeError(f"line {lineno}: {exc}") from None
            records.append(StoredChromosome(rid, generation, fitness, chrom))
    return records


def find_record(path, chromosome_id: str) -> StoredChromosome:
    for rec in load_store(path):
        if rec.id == chromosome_id:
            return rec
    raise KeyError(f"chromosome {chromosome_id!r} not in store {path}")
