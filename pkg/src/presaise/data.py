"""Core observational-data containers and the CSV wire format.

An :class:`ObservationSet` holds the booking requests of one market: per-row
categorical features, the historically charged price and the binary purchase
outcome, together with the discrete candidate price grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import SchemaMismatch

CSV_HEADER = [
    "origin",
    "destination",
    "advance_purchase_days",
    "stay_restriction",
    "fare_discount_level",
    "price",
    "purchased",
]

# Canonical display order for the demo schema; inferred levels not listed
# here are appended in sorted order.
CANONICAL_LEVEL_ORDER: dict[str, list[str]] = {
    "advance_purchase_days": ["0-6", "7-20", "21+"],
    "stay_restriction": ["none", "weekend_stay"],
    "fare_discount_level": ["full", "mid", "deep"],
}


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names with their ordered level sets."""

    names: tuple[str, ...]
    levels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.names) != len(self.levels):
            raise ValueError("names and levels must align")
        for name, lv in zip(self.names, self.levels):
            if len(lv) == 0:
                raise ValueError(f"feature {name!r} has no levels")
            if len(set(lv)) != len(lv):
                raise ValueError(f"feature {name!r} has duplicate levels")

    @property
    def size(self) -> int:
        return len(self.names)

    def level_index(self, name: str, level: str) -> int:
        f = self.names.index(name)
        return self.levels[f].index(level)

    def cells(self) -> list[tuple[str, ...]]:
        """All full feature-level combinations, lexicographic in schema order."""
        combos: list[tuple[str, ...]] = [()]
        for lv in self.levels:
            combos = [c + (l,) for c in combos for l in lv]
        return combos


@dataclass
class ObservationRow:
    features: dict[str, str]
    price: float
    purchased: int


@dataclass
class ObservationSet:
    """N samples (features, price, outcome) of one market plus the price grid."""

    market: tuple[str, str]
    schema: FeatureSchema
    rows: list[ObservationRow]
    price_grid: tuple[float, ...]

    def __post_init__(self):
        if not self.price_grid:
            raise ValueError("price grid must be nonempty")
        if any(b <= a for a, b in zip(self.price_grid, self.price_grid[1:])):
            raise ValueError("price grid must be strictly increasing")
        for r in self.rows:
            if r.price <= 0:
                raise ValueError("row price must be > 0")
            if r.purchased not in (0, 1):
                raise ValueError("purchased must be 0 or 1")
            for name, lv in r.features.items():
                f = self.schema.names.index(name)
                if lv not in self.schema.levels[f]:
                    raise ValueError(f"level {lv!r} not in schema for {name!r}")

    def __len__(self) -> int:
        return len(self.rows)

    # -- numpy views -------------------------------------------------------

    def feature_indices(self) -> np.ndarray:
        """(N, F) int array of level indices in schema order."""
        out = np.empty((len(self.rows), self.schema.size), dtype=np.int64)
        for f, (name, lv) in enumerate(zip(self.schema.names, self.schema.levels)):
            lut = {l: k for k, l in enumerate(lv)}
            out[:, f] = [lut[r.features[name]] for r in self.rows]
        return out

    def prices(self) -> np.ndarray:
        return np.array([r.price for r in self.rows], dtype=float)

    def outcomes(self) -> np.ndarray:
        return np.array([r.purchased for r in self.rows], dtype=float)

    def price_level_indices(self) -> np.ndarray:
        """Index of each row's historical price on the grid (exact match)."""
        lut = {p: k for k, p in enumerate(self.price_grid)}
        try:
            return np.array([lut[r.price] for r in self.rows], dtype=np.int64)
        except KeyError as e:
            raise ValueError(f"row price {e.args[0]} not on the grid") from None


def _ordered_levels(name: str, seen: Iterable[str]) -> tuple[str, ...]:
    seen = set(seen)
    canon = [l for l in CANONICAL_LEVEL_ORDER.get(name, []) if l in seen]
    extra = sorted(seen - set(canon))
    return tuple(canon + extra)


def read_markets_csv(
    path: str | Path,
    level_order: Mapping[str, Sequence[str]] | None = None,
) -> dict[tuple[str, str], ObservationSet]:
    """Parse the service CSV into one ObservationSet per market.

    The header must equal :data:`CSV_HEADER` exactly; the price grid of each
    market is the sorted set of its observed prices.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch("empty file, expected header "
                                 f"{','.join(CSV_HEADER)}") from None
        if header != CSV_HEADER:
            missing = [c for c in CSV_HEADER if c not in header]
            extra = [c for c in header if c not in CSV_HEADER]
            raise SchemaMismatch(
                f"bad header: missing columns {missing}, unexpected {extra}")
        raw: dict[tuple[str, str], list[dict]] = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(CSV_HEADER):
                raise SchemaMismatch(f"line {lineno}: expected "
                                     f"{len(CSV_HEADER)} fields, got {len(rec)}")
            row = dict(zip(CSV_HEADER, rec))
            key = (row["origin"], row["destination"])
            raw.setdefault(key, []).append(row)

    feature_cols = ["advance_purchase_days", "stay_restriction",
                    "fare_discount_level"]
    out: dict[tuple[str, str], ObservationSet] = {}
    for key, recs in raw.items():
        if level_order is not None:
            levels = tuple(tuple(level_order[c]) for c in feature_cols)
        else:
            levels = tuple(
                _ordered_levels(c, (r[c] for r in recs)) for c in feature_cols)
        schema = FeatureSchema(tuple(feature_cols), levels)
        grid = tuple(sorted({float(r["price"]) for r in recs}))
        rows = [
            ObservationRow(
                features={c: r[c] for c in feature_cols},
                price=float(r["price"]),
                purchased=int(r["purchased"]),
            )
            for r in recs
        ]
        out[key] = ObservationSet(market=key, schema=schema, rows=rows,
                                  price_grid=grid)
    return out


def write_markets_csv(path: str | Path, markets: Iterable[ObservationSet]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for obs in markets:
            o, d = obs.market
            for r in obs.rows:
                writer.writerow([
                    o, d,
                    r.features["advance_purchase_days"],
                    r.features["stay_restriction"],
                    r.features["fare_discount_level"],
                    f"{r.price:g}",
                    r.purchased,
                ])
