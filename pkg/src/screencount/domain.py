"""Counting domains: units, detector counts, regions, labels, dataset I/O.

A domain is a fixed finite collection of units, each carrying a raw
detector count. Raw counts may be zero; estimation requires strictly
positive per-unit mass, so a domain stores smoothed counts
``g = raw_g + epsilon`` alongside the raw ones. All mass totals are
computed with compensated summation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DatasetError",
    "Unit",
    "Domain",
    "Region",
    "LabelStore",
    "load_dataset",
    "load_regions",
    "make_regions",
    "region_mass",
    "smooth_counts",
    "write_dataset_csv",
    "default_epsilon",
]


class DatasetError(ValueError):
    """Raised for malformed datasets, regions, or label submissions."""


@dataclass(frozen=True)
class Unit:
    """One unit of the collection: an id, its detector count, optionally truth.

    ``oracle_f`` is only present for benchmark datasets that ship ground
    truth; live screening sessions never have it. ``url`` optionally links
    the unit to externally hosted imagery for display.
    """

    id: str
    raw_g: float
    oracle_f: float | None = None
    url: str | None = None

    def __post_init__(self):
        if not self.id:
            raise DatasetError("unit id must be a non-empty string")
        if not math.isfinite(self.raw_g) or self.raw_g < 0:
            raise DatasetError(f"unit {self.id!r}: raw count must be finite and >= 0")
        if self.oracle_f is not None and (not math.isfinite(self.oracle_f) or self.oracle_f < 0):
            raise DatasetError(f"unit {self.id!r}: oracle count must be finite and >= 0")


def default_epsilon(raw_g: np.ndarray) -> float:
    """Smoothing default: 1e-6 * max(1, mean of the positive raw counts)."""
    positive = raw_g[raw_g > 0]
    scale = float(positive.mean()) if positive.size else 0.0
    return 1e-6 * max(1.0, scale)


class Domain:
    """Immutable collection of units with smoothed per-unit mass.

    Parameters
    ----------
    units:
        The units, in file/row order. Order is part of the domain identity
        (prefix regions and serialization depend on it).
    epsilon:
        Additive smoothing. ``None`` selects the default scale-aware value.
        ``0.0`` is allowed only when every raw count is already positive.
    covariate:
        Optional per-unit auxiliary scores (e.g. for building proposals
        that are not the detector). Must be finite and >= 0.
    """

    def __init__(self, units: Sequence[Unit], epsilon: float | None = None,
                 covariate: Sequence[float] | None = None):
        units = tuple(units)
        if not units:
            raise DatasetError("a domain needs at least one unit")
        index: dict[str, int] = {}
        for pos, unit in enumerate(units):
            if unit.id in index:
                raise DatasetError(f"duplicate unit id {unit.id!r}")
            index[unit.id] = pos
        raw = np.array([u.raw_g for u in units], dtype=np.float64)
        if epsilon is None:
            epsilon = default_epsilon(raw)
        epsilon = float(epsilon)
        if epsilon < 0 or not math.isfinite(epsilon):
            raise DatasetError("epsilon must be finite and >= 0")
        if epsilon == 0 and raw.min() <= 0:
            raise DatasetError("epsilon 0 requires every raw count to be positive")

        self.units = units
        self.ids: tuple[str, ...] = tuple(u.id for u in units)
        self.index = index
        self.raw_g = raw
        self.epsilon = epsilon
        self.g = raw + epsilon
        self.total_G = math.fsum(self.g)
        if covariate is not None:
            cov = np.asarray(covariate, dtype=np.float64)
            if cov.shape != raw.shape:
                raise DatasetError("covariate length must match the unit count")
            if not np.all(np.isfinite(cov)) or cov.min() < 0:
                raise DatasetError("covariate values must be finite and >= 0")
            self.covariate = cov
        else:
            self.covariate = None

    def __len__(self) -> int:
        return len(self.units)

    def __repr__(self) -> str:
        return f"Domain(n_units={len(self)}, total_G={self.total_G!r}, epsilon={self.epsilon!r})"

    def indices_for(self, ids: Iterable[str]) -> np.ndarray:
        try:
            return np.fromiter((self.index[i] for i in ids), dtype=np.intp)
        except KeyError as exc:
            raise DatasetError(f"unknown unit id {exc.args[0]!r}") from None

    def unit(self, unit_id: str) -> Unit:
        return self.units[self.index[unit_id]]

    def oracle_labels(self) -> "LabelStore | None":
        """Label store holding ground truth, if every unit carries it."""
        if any(u.oracle_f is None for u in self.units):
            return None
        return LabelStore({u.id: float(u.oracle_f) for u in self.units})

    def with_counts(self, raw_g: Sequence[float], epsilon: float | None = None) -> "Domain":
        """Same units, different per-unit mass (proposal swaps)."""
        raw = np.asarray(raw_g, dtype=np.float64)
        if raw.shape != self.raw_g.shape:
            raise DatasetError("count vector length must match the unit count")
        units = tuple(Unit(u.id, float(r), u.oracle_f, u.url)
                      for u, r in zip(self.units, raw))
        cov = self.covariate.tolist() if self.covariate is not None else None
        return Domain(units, epsilon=epsilon, covariate=cov)


def smooth_counts(domain: Domain, epsilon: float) -> Domain:
    """Re-smooth a domain's raw counts with a caller-chosen epsilon > 0."""
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        raise DatasetError("epsilon must be a finite positive number")
    cov = domain.covariate.tolist() if domain.covariate is not None else None
    return Domain(domain.units, epsilon=float(epsilon), covariate=cov)


@dataclass(frozen=True)
class Region:
    """A named subset of the domain. Regions may overlap each other."""

    name: str
    members: frozenset[str]

    def __post_init__(self):
        if not self.name:
            raise DatasetError("region name must be non-empty")
        if not self.members:
            raise DatasetError(f"region {self.name!r} has no members")

    def member_indices(self, domain: Domain) -> np.ndarray:
        """Member positions in domain order (deterministic reductions)."""
        try:
            idx = sorted(domain.index[m] for m in self.members)
        except KeyError as exc:
            raise DatasetError(
                f"region {self.name!r} references unknown unit id {exc.args[0]!r}") from None
        return np.asarray(idx, dtype=np.intp)


def region_mass(domain: Domain, region: Region | None) -> tuple[float, float]:
    """Smoothed mass G(S) of a region and its share p(S) = G(S)/G(Omega).

    ``region=None`` means the whole domain. p(S) is exactly 1.0 in that
    case and for any region containing every unit.
    """
    if region is None:
        return domain.total_G, 1.0
    idx = region.member_indices(domain)
    if len(idx) == len(domain):
        return domain.total_G, 1.0
    mass = math.fsum(domain.g[idx])
    return mass, mass / domain.total_G


def make_regions(domain: Domain, spec: Mapping) -> list[Region]:
    """Build regions from an explicit name->ids map or a typed generator.

    Typed forms (over the domain's row order):
      {"type": "prefix", "sizes": [n1, n2, ...]} -> nested prefixes
      {"type": "partition", "sizes": [n1, n2, ...]} -> disjoint consecutive blocks
    Any other mapping is treated as explicit {name: [unit ids]}.
    """
    if not isinstance(spec, Mapping) or not spec:
        raise DatasetError("region spec must be a non-empty JSON object")

    kind = spec.get("type")
    if kind in ("prefix", "partition"):
        sizes = spec.get("sizes")
        if (not isinstance(sizes, (list, tuple)) or not sizes
                or not all(isinstance(s, int) and s > 0 for s in sizes)):
            raise DatasetError(f"{kind} spec needs a non-empty list of positive integer sizes")
        regions = []
        if kind == "prefix":
            for size in sizes:
                if size > len(domain):
                    raise DatasetError(
                        f"prefix size {size} exceeds the domain size {len(domain)}")
                regions.append(Region(f"prefix_{size}", frozenset(domain.ids[:size])))
        else:
            if sum(sizes) > len(domain):
                raise DatasetError(
                    f"partition sizes sum to {sum(sizes)}, domain has {len(domain)} units")
            start = 0
            for i, size in enumerate(sizes):
                regions.append(Region(f"part_{i}", frozenset(domain.ids[start:start + size])))
                start += size
        return regions

    regions = []
    for name, members in spec.items():
        if not isinstance(members, (list, tuple)):
            raise DatasetError(f"region {name!r}: members must be an array of unit ids")
        member_set = frozenset(str(m) for m in members)
        if len(member_set) != len(members):
            raise DatasetError(f"region {name!r}: duplicate member ids")
        region = Region(str(name), member_set)
        region.member_indices(domain)  # validates membership
        regions.append(region)
    return regions


def load_regions(path: str, domain: Domain) -> list[Region]:
    """Read a region file (JSON, either explicit or typed) against a domain."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    return make_regions(domain, spec)


class LabelStore:
    """Unit id -> verified true count. Labels are write-once.

    Screening each unit exactly once is the core cost model, so a second
    write to the same id is an error rather than an update.
    """

    def __init__(self, labels: Mapping[str, float] | None = None):
        self._labels: dict[str, float] = {}
        if labels:
            for unit_id, value in labels.items():
                self.add(unit_id, value)

    def add(self, unit_id: str, value: float) -> None:
        if unit_id in self._labels:
            raise DatasetError(f"unit {unit_id!r} is already labeled (labels are immutable)")
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise DatasetError(f"label for {unit_id!r} must be finite and >= 0")
        self._labels[unit_id] = value

    def get(self, unit_id: str) -> float:
        return self._labels[unit_id]

    def __contains__(self, unit_id: str) -> bool:
        return unit_id in self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def ids(self) -> set[str]:
        return set(self._labels)

    def as_dict(self) -> dict[str, float]:
        return dict(self._labels)

    def values_for(self, ids: Iterable[str]) -> np.ndarray:
        out = np.empty(0, dtype=np.float64)
        values = []
        missing = []
        for unit_id in ids:
            v = self._labels.get(unit_id)
            if v is None:
                missing.append(unit_id)
            else:
                values.append(v)
        if missing:
            shown = ", ".join(repr(m) for m in missing[:5])
            raise DatasetError(f"{len(missing)} drawn unit(s) lack labels: {shown}")
        if values:
            out = np.asarray(values, dtype=np.float64)
        return out

    def total(self, ids: Iterable[str]) -> float:
        return math.fsum(self.values_for(ids))


def _parse_count(text: str | None, what: str, line: int) -> float:
    if text is None or text.strip() == "":
        raise DatasetError(f"line {line}: missing {what} value")
    try:
        value = float(text)
    except ValueError:
        raise DatasetError(f"line {line}: {what} value {text!r} is not a number") from None
    if not math.isfinite(value) or value < 0:
        raise DatasetError(f"line {line}: {what} value {value!r} must be finite and >= 0")
    return value


def load_dataset(path: str, schema: Mapping[str, str] | None = None,
                 epsilon: float | None = None) -> tuple[Domain, "LabelStore | None"]:
    """Load a UTF-8 CSV dataset into a Domain plus optional oracle labels.

    ``schema`` maps roles to column names; every role defaults to a column
    of the same name, and the optional ones (``f``, ``url``, ``covariate``)
    are picked up whenever their column exists. The oracle LabelStore is
    returned only when every row carries an f value; errors reference rows
    by 1-based line number.
    """
    roles = {"id": "id", "g": "g", "f": "f", "url": "url", "covariate": "covariate"}
    if schema:
        roles.update(schema)

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetError(f"{path}: empty file (a header row is required)")
        header = list(reader.fieldnames)
        for role in ("id", "g"):
            if roles[role] not in header:
                raise DatasetError(f"{path}: required column {roles[role]!r} not in header")
        for role in ("f", "url", "covariate"):
            explicit = schema is not None and role in schema
            if explicit and roles.get(role) not in header:
                raise DatasetError(f"{path}: column {roles[role]!r} not in header")
        has_f = roles.get("f") in header
        has_url = roles.get("url") in header
        has_cov = roles.get("covariate") in header

        units: list[Unit] = []
        covariate: list[float] = []
        seen: set[str] = set()
        n_missing_f = 0
        for line, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise DatasetError(f"line {line}: wrong number of fields")
            unit_id = (row.get(roles["id"]) or "").strip()
            if not unit_id:
                raise DatasetError(f"line {line}: empty unit id")
            if unit_id in seen:
                raise DatasetError(f"line {line}: duplicate unit id {unit_id!r}")
            seen.add(unit_id)
            raw_g = _parse_count(row.get(roles["g"]), "count", line)
            oracle_f: float | None = None
            if has_f:
                f_text = row.get(roles["f"])
                if f_text is None or f_text.strip() == "":
                    n_missing_f += 1
                else:
                    oracle_f = _parse_count(f_text, "true count", line)
            url = row.get(roles["url"]) if has_url else None
            units.append(Unit(unit_id, raw_g, oracle_f, url or None))
            if has_cov:
                covariate.append(_parse_count(row.get(roles["covariate"]), "covariate", line))

    if not units:
        raise DatasetError(f"{path}: no data rows")
    domain = Domain(units, epsilon=epsilon, covariate=covariate if has_cov else None)
    oracle = domain.oracle_labels() if has_f and n_missing_f == 0 else None
    return domain, oracle


def write_dataset_csv(domain: Domain, path: str, oracle: LabelStore | None = None) -> None:
    """Serialize a domain back to CSV (id,g[,f][,covariate][,url]).

    Counts are written with repr so a load/save cycle round-trips float
    values exactly.
    """
    has_f = oracle is not None and all(u.id in oracle for u in domain.units)
    has_cov = domain.covariate is not None
    has_url = any(u.url for u in domain.units)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id", "g"]
        if has_f:
            header.append("f")
        if has_cov:
            header.append("covariate")
        if has_url:
            header.append("url")
        writer.writerow(header)
        for pos, unit in enumerate(domain.units):
            row = [unit.id, repr(float(domain.raw_g[pos]))]
            if has_f:
                row.append(repr(float(oracle.get(unit.id))))
            if has_cov:
                row.append(repr(float(domain.covariate[pos])))
            if has_url:
                row.append(unit.url or "")
            writer.writerow(row)
