"""Long-running screening sessions over one loaded dataset.

A session owns a seeded draw stream, the ordered draw log, and the label
map a human fills in. Estimates are always computed from the longest fully
labeled prefix of the draw log: the human may lag the sampler, and cutting
by draw order (never by label value) keeps the i.i.d. semantics of the
estimators intact. Repeat draws of a labeled unit are answered from the
label cache and cost nothing.

Every session persists as a single JSON document and is fully replayable
from it: restoring mid-session continues the exact draw sequence and serves
the exact estimates a crash-free run would have.
"""

from __future__ import annotations

import json
import math
import os
import secrets
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

from .calibration import IsotonicModel, build_control_variate
from .domain import DatasetError, Domain, LabelStore, Region
from .estimators import (ControlVariate, Estimate, estimate_kdiscount,
                         estimate_kdiscount_cv)
from .evaluation import DEFAULT_COST_FACTORS, labeling_effort
from .sampler import RandomStream, SampleDraw, sample_proportional

__all__ = [
    "SessionError",
    "SessionConfig",
    "ScreeningSession",
    "DatasetEntry",
    "SessionStore",
]

SESSION_METHODS = ("kDIS", "kDIScv")


class SessionError(Exception):
    """Service-level failure with a machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class SessionConfig:
    """Estimation settings fixed at session creation (stop targets may move)."""

    method: str = "kDIS"
    variance_mode: str = "auto"
    alpha: float = 0.05
    seed: int | None = None
    c: float | None = None
    cv_model: Mapping | None = None

    def validated(self) -> "SessionConfig":
        if self.method not in SESSION_METHODS:
            raise SessionError("invalid_config",
                               f"method must be one of {SESSION_METHODS}")
        if self.variance_mode not in ("auto", "per-region", "pooled"):
            raise SessionError("invalid_config", "unknown variance mode")
        if not (isinstance(self.alpha, (int, float)) and 0.0 < self.alpha < 1.0):
            raise SessionError("invalid_config", "alpha must lie strictly in (0, 1)")
        if self.seed is not None and (isinstance(self.seed, bool)
                                      or not isinstance(self.seed, int)):
            raise SessionError("invalid_config", "seed must be an integer")
        if self.c is not None and not (isinstance(self.c, (int, float))
                                       and 0.0 < self.c <= 1.0):
            raise SessionError("invalid_config", "cost factor must lie in (0, 1]")
        if self.method == "kDIScv" and self.cv_model is None:
            raise SessionError("invalid_config",
                               "method kDIScv needs a cv_model (isotonic breakpoints)")
        if self.method == "kDIS" and self.cv_model is not None:
            raise SessionError("invalid_config", "cv_model is only valid with kDIScv")
        return self

    def cost_factor(self) -> float:
        return DEFAULT_COST_FACTORS[self.method] if self.c is None else float(self.c)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "variance_mode": self.variance_mode,
            "alpha": self.alpha,
            "seed": self.seed,
            "c": self.c,
            "cv_model": dict(self.cv_model) if self.cv_model is not None else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SessionConfig":
        known = {k: d.get(k) for k in ("method", "variance_mode", "alpha", "seed",
                                       "c", "cv_model")}
        if known["method"] is None:
            known["method"] = "kDIS"
        if known["variance_mode"] is None:
            known["variance_mode"] = "auto"
        if known["alpha"] is None:
            known["alpha"] = 0.05
        return cls(**known)


class ScreeningSession:
    """One screening run: draw log, label map, streamable estimates."""

    def __init__(self, session_id: str, dataset_name: str, domain: Domain,
                 regions: Sequence[Region], config: SessionConfig,
                 stream: RandomStream, created: str):
        self.id = session_id
        self.dataset_name = dataset_name
        self.domain = domain
        self.regions = list(regions)
        self.config = config
        self.stream = stream
        self.created = created
        self.updated = created
        self.draws: list[str] = []
        self.labels = LabelStore()
        self.stop_targets: dict[str, float] = {}
        self._cv: ControlVariate | None = None
        self._h_omega = 0.0
        if config.method == "kDIScv":
            model = IsotonicModel.from_dict(config.cv_model)
            self._cv = build_control_variate(model, domain, self.regions)
            self._h_omega = math.fsum(model.predict(domain.g))

    @classmethod
    def create(cls, dataset_name: str, domain: Domain, regions: Sequence[Region],
               config: SessionConfig) -> "ScreeningSession":
        config = config.validated()
        if not regions:
            raise SessionError("invalid_regions", "at least one region is required")
        seed = config.seed if config.seed is not None else secrets.randbits(32)
        if config.seed is None:
            config = SessionConfig(**{**config.to_dict(), "seed": seed})
        try:
            return cls(uuid.uuid4().hex, dataset_name, domain, regions, config,
                       RandomStream(seed), _utcnow())
        except (ValueError, DatasetError) as exc:
            raise SessionError("invalid_config", str(exc)) from exc

    # -- mutations ---------------------------------------------------------

    def draw_batch(self, n: int) -> list[dict]:
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise SessionError("invalid_batch", "batch size must be an integer >= 1")
        draw = sample_proportional(self.domain, None, n, self.stream)
        self.draws.extend(draw.ids)
        self.updated = _utcnow()
        out = []
        for unit_id in draw.ids:
            unit = self.domain.unit(unit_id)
            labeled = unit_id in self.labels
            out.append({
                "unit_id": unit_id,
                "g": float(unit.raw_g),
                "already_labeled": labeled,
                "f": self.labels.get(unit_id) if labeled else None,
                "url": unit.url,
            })
        return out

    def submit_labels(self, items: Sequence[Mapping]) -> None:
        """Validate the whole batch, then apply it; nothing sticks on error."""
        drawn = set(self.draws)
        staged: list[tuple[str, float]] = []
        seen: set[str] = set()
        for item in items:
            if not isinstance(item, dict):
                raise SessionError("invalid_label",
                                   "each label must be an object with unit_id and f")
            unit_id = item.get("unit_id")
            if not isinstance(unit_id, str) or unit_id not in self.domain.index:
                raise SessionError("unknown_unit", f"unknown unit id {unit_id!r}")
            if unit_id not in drawn:
                raise SessionError("not_drawn",
                                   f"unit {unit_id!r} has not been drawn")
            if unit_id in self.labels or unit_id in seen:
                raise SessionError("already_labeled",
                                   f"unit {unit_id!r} is already labeled")
            f = item.get("f")
            if not isinstance(f, (int, float)) or isinstance(f, bool) or \
                    not math.isfinite(float(f)) or float(f) < 0:
                raise SessionError("invalid_label",
                                   f"label for {unit_id!r} must be a finite number >= 0")
            seen.add(unit_id)
            staged.append((unit_id, float(f)))
        for unit_id, f in staged:
            self.labels.add(unit_id, f)
        if staged:
            self.updated = _utcnow()

    def set_stop_targets(self, targets: Mapping[str, float]) -> None:
        names = {r.name for r in self.regions}
        staged = {}
        for name, value in targets.items():
            if name not in names:
                raise SessionError("invalid_regions", f"unknown region {name!r}")
            if value is None:
                continue
            if not isinstance(value, (int, float)) or isinstance(value, bool) or \
                    not math.isfinite(float(value)) or float(value) <= 0:
                raise SessionError("invalid_config",
                                   f"stop target for {name!r} must be > 0")
            staged[name] = float(value)
        removed = [name for name, value in targets.items() if value is None]
        for name in removed:
            self.stop_targets.pop(name, None)
        self.stop_targets.update(staged)
        self.updated = _utcnow()

    # -- reads -------------------------------------------------------------

    def labeled_prefix(self) -> list[str]:
        """Longest prefix of the draw log whose units are all labeled."""
        prefix = []
        for unit_id in self.draws:
            if unit_id not in self.labels:
                break
            prefix.append(unit_id)
        return prefix

    def _whole_domain_value(self, prefix: Sequence[str]) -> float:
        f = self.labels.values_for(prefix)
        g = self.domain.g[self.domain.indices_for(prefix)]
        if self._cv is not None:
            w = (f - self._cv.h_for(prefix)) / g
            return self.domain.total_G * math.fsum(w) / len(w) + self._h_omega
        w = f / g
        return self.domain.total_G * math.fsum(w) / len(w)

    def _estimates(self, prefix: Sequence[str]) -> dict[str, Estimate]:
        method = self.config.method
        if not prefix:
            return {r.name: Estimate(value=0.0, n_region=0, sigma_hat=0.0,
                                     ci_low=None, ci_high=None,
                                     alpha=self.config.alpha, method=method,
                                     empty_region=True)
                    for r in self.regions}
        draw = SampleDraw.build(tuple(prefix), None, "proportional")
        if self._cv is not None:
            return estimate_kdiscount_cv(self.domain, self.regions, draw, self.labels,
                                         self._cv, self.config.alpha,
                                         self.config.variance_mode)
        return estimate_kdiscount(self.domain, self.regions, draw, self.labels,
                                  self.config.alpha, self.config.variance_mode)

    def _stop_ok(self, name: str, est: Estimate, f_omega: float | None) -> bool | None:
        target = self.stop_targets.get(name)
        if target is None:
            return None
        width = est.ci_width()
        if width is None or f_omega is None or f_omega <= 0:
            return False
        return width / f_omega <= target

    def estimates_payload(self) -> dict:
        prefix = self.labeled_prefix()
        estimates = self._estimates(prefix)
        f_omega = self._whole_domain_value(prefix) if prefix else None
        regions = {}
        for name, est in estimates.items():
            regions[name] = {
                "value": est.value,
                "n_region": est.n_region,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
                "empty": est.empty_region,
                "stop_ok": self._stop_ok(name, est, f_omega),
            }
        return {
            "regions": regions,
            "f_hat_omega": f_omega,
            "effort": {
                "distinct_labeled": len(self.labels),
                "labeled_draws": len(prefix),
                "total_draws": len(self.draws),
                "effort_pct": labeling_effort(len(self.labels),
                                              self.config.cost_factor(),
                                              len(self.domain)),
            },
        }

    def full_state(self) -> dict:
        payload = self.to_record()
        payload["estimates"] = self.estimates_payload()
        return payload

    # -- persistence -------------------------------------------------------

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "dataset": self.dataset_name,
            "created": self.created,
            "updated": self.updated,
            "config": self.config.to_dict(),
            "regions": {r.name: sorted(r.members) for r in self.regions},
            "rng": {"metadata": self.stream.metadata(),
                    "state": self.stream.get_state()},
            "draws": list(self.draws),
            "labels": self.labels.as_dict(),
            "stop_targets": dict(self.stop_targets),
        }

    @classmethod
    def from_record(cls, record: Mapping, domain: Domain) -> "ScreeningSession":
        try:
            config = SessionConfig.from_dict(record["config"]).validated()
            regions = [Region(name, frozenset(members))
                       for name, members in record["regions"].items()]
            stream = RandomStream(int(record["rng"]["metadata"]["seed"]))
            session = cls(str(record["id"]), str(record["dataset"]), domain, regions,
                          config, stream, str(record["created"]))
            stream.set_state(record["rng"]["state"])
            session.updated = str(record["updated"])
            session.draws = [str(u) for u in record["draws"]]
            for unit_id, f in record["labels"].items():
                session.labels.add(unit_id, float(f))
            session.stop_targets = {str(k): float(v)
                                    for k, v in record["stop_targets"].items()}
            for unit_id in session.draws:
                if unit_id not in domain.index:
                    raise KeyError(unit_id)
            return session
        except SessionError:
            raise
        except Exception as exc:
            raise SessionError("corrupt_state",
                               f"session record is unreadable: {exc}") from exc


@dataclass(frozen=True)
class DatasetEntry:
    """One loaded dataset plus its default region layout."""

    name: str
    domain: Domain
    regions: tuple[Region, ...]
    oracle: LabelStore | None = None

    def describe(self) -> dict:
        return {
            "name": self.name,
            "units": len(self.domain),
            "total_g": self.domain.total_G,
            "regions": [r.name for r in self.regions],
            "has_oracle": self.oracle is not None,
            "has_covariate": self.domain.covariate is not None,
        }


class SessionStore:
    """All live sessions plus their durable copies.

    Mutations to one session are serialized behind a per-session lock;
    distinct sessions proceed independently. When ``state_dir`` is set,
    every mutation rewrites the session's JSON document atomically, and
    unknown session ids are looked up on disk before failing, so a process
    restart picks up exactly where the last write left off.
    """

    def __init__(self, datasets: Sequence[DatasetEntry], state_dir: str | None = None):
        if not datasets:
            raise ValueError("at least one dataset is required")
        self.datasets = {entry.name: entry for entry in datasets}
        if len(self.datasets) != len(datasets):
            raise ValueError("dataset names must be unique")
        self.state_dir = state_dir
        if state_dir is not None:
            os.makedirs(state_dir, exist_ok=True)
        self._sessions: dict[str, ScreeningSession] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    def list_datasets(self) -> list[dict]:
        return [entry.describe() for entry in self.datasets.values()]

    def dataset(self, name: str) -> DatasetEntry:
        try:
            return self.datasets[name]
        except KeyError:
            raise SessionError("unknown_dataset", f"no dataset named {name!r}") from None

    def default_dataset(self) -> DatasetEntry:
        return next(iter(self.datasets.values()))

    def create_session(self, config: SessionConfig,
                       dataset_name: str | None = None) -> ScreeningSession:
        entry = self.dataset(dataset_name) if dataset_name else self.default_dataset()
        session = ScreeningSession.create(entry.name, entry.domain, entry.regions,
                                          config)
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.RLock()
        self._persist(session)
        return session

    def _path(self, session_id: str) -> str:
        return os.path.join(self.state_dir, f"{session_id}.json")

    def _persist(self, session: ScreeningSession) -> None:
        if self.state_dir is None:
            return
        record = session.to_record()
        fd, tmp = tempfile.mkstemp(dir=self.state_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(record, fh)
            os.replace(tmp, self._path(session.id))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _load_from_disk(self, session_id: str) -> ScreeningSession | None:
        if self.state_dir is None:
            return None
        path = self._path(session_id)
        if not os.path.exists(path):
            return None
        try:
            with open(path, "r", encoding="utf-8") as fh:
                record = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SessionError("corrupt_state",
                               f"session record is unreadable: {exc}") from exc
        entry = self.dataset(str(record.get("dataset", "")))
        return ScreeningSession.from_record(record, entry.domain)

    def _lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def get(self, session_id: str) -> ScreeningSession:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is not None:
            return session
        session = self._load_from_disk(session_id)
        if session is None:
            raise SessionError("unknown_session", f"no session {session_id!r}")
        with self._registry_lock:
            session = self._sessions.setdefault(session_id, session)
        return session

    def draw_batch(self, session_id: str, n: int) -> list[dict]:
        session = self.get(session_id)
        with self._lock_for(session_id):
            batch = session.draw_batch(n)
            self._persist(session)
        return batch

    def submit_labels(self, session_id: str, items: Sequence[Mapping]) -> dict:
        session = self.get(session_id)
        with self._lock_for(session_id):
            session.submit_labels(items)
            self._persist(session)
            return session.estimates_payload()

    def set_stop_targets(self, session_id: str, targets: Mapping[str, float]) -> dict:
        session = self.get(session_id)
        with self._lock_for(session_id):
            session.set_stop_targets(targets)
            self._persist(session)
            return session.estimates_payload()

    def estimates(self, session_id: str) -> dict:
        session = self.get(session_id)
        with self._lock_for(session_id):
            return session.estimates_payload()

    def full_state(self, session_id: str) -> dict:
        session = self.get(session_id)
        with self._lock_for(session_id):
            return session.full_state()
