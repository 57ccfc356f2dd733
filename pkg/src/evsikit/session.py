"""Stateful deployment sessions for the operator loop.

A session tracks which sensors are deployed, the latest EVSI ranking of the
remaining candidates, and a log of observed signals with the action that
was recommended for each. Two backends share the same state machine:

* ``stats``: every candidate arrives with a fixed channel (from a
  channel-stats file). The deployed set acts as a disjunctive sensor
  network: its channel is the OR-composition of the deployed channels
  under class-conditional independence, and a candidate is scored by the
  EVSI of adding it to that composition. Reranking is arithmetic, so
  mutations commit instantly. Because a candidate's marginal value depends
  on what is already deployed, ranks can invert between rounds.
* ``full``: candidates are dataset features; every rerank retrains one
  model per remaining candidate (the greedy selection round). The session
  is marked Evaluating while that runs, and concurrent mutations are
  rejected with Busy.

Ranking rows carry the actions of the sensor's own channel, matching what
``record_signal`` recommends when that sensor fires: a deployed sensor is
judged by its own deploy-time channel, which never changes afterwards, so
the signal log can be replayed and re-verified at any point.

State transitions are serialized by a single lock; reads return the last
committed snapshot. Sessions persist as single JSON documents.
"""

from __future__ import annotations

import enum
import json
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .classifier import Trainer, TrainingConfig
from .data import ChannelStats, SimDataset
from .decision import (
    Action,
    BinarySensorChannel,
    CostConvention,
    CostModel,
    EvsiReport,
    Priors,
    baseline_cost_no_signal,
    combine_or,
    evsi,
    expected_cost_with_sensor,
)
from .errors import AlreadyDeployed, Busy, NotDeployed, SchemaViolation, UnknownSensor
from .metrics import empirical_priors
from .selection import _model_channel


class SessionStatus(str, enum.Enum):
    IDLE = "idle"
    EVALUATING = "evaluating"
    AWAITING_OPERATOR = "awaiting_operator"


class SessionBackend(str, enum.Enum):
    STATS = "stats"
    FULL = "full"


@dataclass(frozen=True)
class SignalEvent:
    timestamp: str
    sensor_label: str
    signal: bool
    recommended_action: Action


@dataclass(frozen=True)
class DeploymentSession:
    """Immutable snapshot of one deployment session.

    ``candidate_channels`` holds each stats-backend candidate's own channel
    keyed by label; ``deployed_channels`` records, for both backends, the
    channel each sensor had at the moment it was deployed.
    """

    session_id: str
    backend: SessionBackend
    base_features: tuple[str, ...]
    candidates: tuple[str, ...]
    deployed: tuple[str, ...]
    cost_model: CostModel
    priors: Priors
    current_baseline_channel: BinarySensorChannel | None
    candidate_channels: tuple[tuple[str, BinarySensorChannel], ...]
    deployed_channels: tuple[tuple[str, BinarySensorChannel], ...]
    latest_rankings: tuple[EvsiReport, ...]
    signal_log: tuple[SignalEvent, ...]
    status: SessionStatus

    def __post_init__(self):
        candidate_set = set(self.candidates)
        if len(candidate_set) != len(self.candidates):
            raise ValueError("candidate labels must be distinct")
        if not set(self.deployed) <= candidate_set:
            raise ValueError("deployed sensors must come from the candidate list")
        ranked = [r.sensor_label for r in self.latest_rankings]
        if set(ranked) & set(self.deployed):
            raise ValueError("rankings must not contain deployed sensors")
        order = [(-r.evsi, r.sensor_label) for r in self.latest_rankings]
        if order != sorted(order):
            raise ValueError("rankings must be sorted by evsi desc, label asc")
        deployed_set = set(self.deployed)
        for event in self.signal_log:
            if event.sensor_label not in deployed_set:
                raise ValueError(
                    f"signal log references undeployed sensor {event.sensor_label!r}"
                )

    @property
    def remaining(self) -> tuple[str, ...]:
        deployed = set(self.deployed)
        return tuple(c for c in self.candidates if c not in deployed)

    def channel_of(self, label: str) -> BinarySensorChannel:
        for name, channel in self.deployed_channels:
            if name == label:
                return channel
        for name, channel in self.candidate_channels:
            if name == label:
                return channel
        raise UnknownSensor(f"no channel recorded for sensor {label!r}")


# ------------------------------------------------------------ ranking logic


def _stats_rankings(
    channels: Mapping[str, BinarySensorChannel],
    deployed: Sequence[str],
    remaining: Sequence[str],
    priors: Priors,
    costs: CostModel,
) -> tuple[BinarySensorChannel | None, tuple[EvsiReport, ...]]:
    """Score each remaining sensor by the EVSI of adding it to the deployed
    OR-network; ranking-row actions come from the sensor's own channel."""
    deployed_channels = [channels[d] for d in deployed]
    baseline = combine_or(deployed_channels, label="deployed") if deployed_channels else None
    reports = []
    for label in remaining:
        own = channels[label]
        if deployed_channels:
            composite = combine_or(deployed_channels + [own], label=label)
        else:
            composite = own
        rep = evsi(composite, baseline, priors, costs)
        own_actions = expected_cost_with_sensor(own, priors, costs)
        reports.append(
            EvsiReport(
                sensor_label=label,
                evsi=rep.evsi,
                baseline_cost=rep.baseline_cost,
                candidate_cost=rep.candidate_cost,
                action_on_signal=own_actions.action_on_signal,
                action_on_no_signal=own_actions.action_on_no_signal,
            )
        )
    reports.sort(key=lambda r: (-r.evsi, r.sensor_label))
    return baseline, tuple(reports)


@dataclass(frozen=True)
class FullBackendResources:
    """Runtime inputs the full backend needs to retrain; not persisted."""

    trainer: Trainer
    train_split: SimDataset
    validation_split: SimDataset
    config: TrainingConfig = TrainingConfig()
    smoothing: float = 1.0
    normal_class: int = 0


def _full_rankings(
    resources: FullBackendResources,
    base_features: Sequence[str],
    deployed: Sequence[str],
    remaining: Sequence[str],
    baseline_channel: BinarySensorChannel | None,
    priors: Priors,
    costs: CostModel,
) -> tuple[tuple[EvsiReport, ...], dict[str, BinarySensorChannel]]:
    """One greedy-selection round: retrain per candidate, score against the
    current model channel."""
    reports = []
    channels: dict[str, BinarySensorChannel] = {}
    for label in remaining:
        feats = tuple(base_features) + tuple(deployed) + (label,)
        channel = _model_channel(
            resources.trainer,
            resources.train_split,
            resources.validation_split,
            feats,
            resources.config,
            resources.smoothing,
            resources.normal_class,
            label=label,
        )
        channels[label] = channel
        reports.append(evsi(channel, baseline_channel, priors, costs))
    reports.sort(key=lambda r: (-r.evsi, r.sensor_label))
    return tuple(reports), channels


# ------------------------------------------------------------- construction


def create_stats_session(
    stats: ChannelStats,
    cost_model: CostModel,
    session_id: str | None = None,
) -> "SessionManager":
    """Session over externally supplied channels; round-0 rankings computed
    against the prior-only baseline."""
    channels = {ch.label: ch for ch in stats.sensors}
    candidates = tuple(ch.label for ch in stats.sensors)
    baseline, rankings = _stats_rankings(channels, (), candidates, stats.priors, cost_model)
    session = DeploymentSession(
        session_id=session_id or uuid.uuid4().hex[:12],
        backend=SessionBackend.STATS,
        base_features=(),
        candidates=candidates,
        deployed=(),
        cost_model=cost_model,
        priors=stats.priors,
        current_baseline_channel=baseline,
        candidate_channels=tuple(channels.items()),
        deployed_channels=(),
        latest_rankings=rankings,
        signal_log=(),
        status=SessionStatus.IDLE,
    )
    return SessionManager(session)


def create_full_session(
    resources: FullBackendResources,
    base_features: Sequence[str],
    candidates: Sequence[str],
    cost_model: CostModel,
    session_id: str | None = None,
) -> "SessionManager":
    """Session that retrains per rerank; round 0 scores every candidate
    against the base-features model's channel."""
    priors = empirical_priors(
        list(resources.train_split.labels()), normal_class=resources.normal_class
    )
    baseline = _model_channel(
        resources.trainer,
        resources.train_split,
        resources.validation_split,
        tuple(base_features),
        resources.config,
        resources.smoothing,
        resources.normal_class,
        label="base",
    )
    rankings, _ = _full_rankings(
        resources, base_features, (), tuple(candidates), baseline, priors, cost_model
    )
    session = DeploymentSession(
        session_id=session_id or uuid.uuid4().hex[:12],
        backend=SessionBackend.FULL,
        base_features=tuple(base_features),
        candidates=tuple(candidates),
        deployed=(),
        cost_model=cost_model,
        priors=priors,
        current_baseline_channel=baseline,
        candidate_channels=(),
        deployed_channels=(),
        latest_rankings=rankings,
        signal_log=(),
        status=SessionStatus.IDLE,
    )
    return SessionManager(session, resources=resources)


# ------------------------------------------------------------------ manager


class SessionManager:
    """Single-writer wrapper: mutations serialize on one lock, reads return
    the last committed snapshot."""

    def __init__(
        self,
        session: DeploymentSession,
        resources: FullBackendResources | None = None,
    ):
        if session.backend is SessionBackend.FULL and resources is None:
            raise ValueError("full-backend sessions need FullBackendResources")
        self._lock = threading.Lock()
        self._session = session
        self._resources = resources

    def snapshot(self) -> DeploymentSession:
        with self._lock:
            return self._session

    # -- helpers -------------------------------------------------------

    def _check_deployable(self, session: DeploymentSession, label: str):
        if session.status is SessionStatus.EVALUATING:
            raise Busy("a rerank is in progress; retry when it completes")
        if label not in session.candidates:
            raise UnknownSensor(f"unknown sensor {label!r}")
        if label in session.deployed:
            raise AlreadyDeployed(f"sensor {label!r} is already deployed")

    # -- mutations -----------------------------------------------------

    def deploy(self, label: str) -> DeploymentSession:
        """Move a sensor from candidates to deployed and rerank the rest.

        Stats backend commits in one step. Full backend publishes an
        Evaluating snapshot first, retrains outside the lock, then commits;
        mutations arriving meanwhile are rejected with Busy.
        """
        with self._lock:
            session = self._session
            self._check_deployable(session, label)
            if session.backend is SessionBackend.STATS:
                committed = self._deploy_stats(session, label)
                self._session = committed
                return committed
            working = replace(session, status=SessionStatus.EVALUATING)
            self._session = working

        try:
            committed = self._deploy_full(working, label)
        except BaseException:
            with self._lock:
                self._session = replace(self._session, status=SessionStatus.IDLE)
            raise
        with self._lock:
            self._session = committed
            return committed

    def _deploy_stats(self, session: DeploymentSession, label: str) -> DeploymentSession:
        channels = dict(session.candidate_channels)
        deployed = session.deployed + (label,)
        remaining = tuple(c for c in session.candidates if c not in deployed)
        baseline, rankings = _stats_rankings(
            channels, deployed, remaining, session.priors, session.cost_model
        )
        return replace(
            session,
            deployed=deployed,
            deployed_channels=session.deployed_channels + ((label, channels[label]),),
            current_baseline_channel=baseline,
            latest_rankings=rankings,
            status=SessionStatus.IDLE,
        )

    def _deploy_full(self, session: DeploymentSession, label: str) -> DeploymentSession:
        assert self._resources is not None
        deployed = session.deployed + (label,)
        remaining = tuple(c for c in session.candidates if c not in deployed)
        # the chosen sensor's deploy-time channel becomes the new baseline
        new_baseline = _model_channel(
            self._resources.trainer,
            self._resources.train_split,
            self._resources.validation_split,
            tuple(session.base_features) + deployed,
            self._resources.config,
            self._resources.smoothing,
            self._resources.normal_class,
            label=label,
        )
        rankings, _ = _full_rankings(
            self._resources,
            session.base_features,
            deployed,
            remaining,
            new_baseline,
            session.priors,
            session.cost_model,
        )
        return replace(
            session,
            deployed=deployed,
            deployed_channels=session.deployed_channels + ((label, new_baseline),),
            current_baseline_channel=new_baseline,
            latest_rankings=rankings,
            status=SessionStatus.IDLE,
        )

    def record_signal(
        self, label: str, signal: bool, timestamp: str | None = None
    ) -> tuple[DeploymentSession, Action]:
        """Log a signal observation and return the recommended action.

        The recommendation is the corresponding branch action of the fired
        sensor's own deploy-time channel under the session's cost model.
        """
        with self._lock:
            session = self._session
            if session.status is SessionStatus.EVALUATING:
                raise Busy("a rerank is in progress; retry when it completes")
            if label not in session.deployed:
                raise NotDeployed(f"sensor {label!r} is not deployed")
            channel = session.channel_of(label)
            breakdown = expected_cost_with_sensor(channel, session.priors, session.cost_model)
            action = breakdown.action_on_signal if signal else breakdown.action_on_no_signal
            event = SignalEvent(
                timestamp=timestamp or datetime.now(timezone.utc).isoformat(),
                sensor_label=label,
                signal=bool(signal),
                recommended_action=action,
            )
            committed = replace(
                session,
                signal_log=session.signal_log + (event,),
                status=SessionStatus.AWAITING_OPERATOR,
            )
            self._session = committed
            return committed, action

    def reset(self) -> DeploymentSession:
        """Return to the round-0 state: nothing deployed, log cleared."""
        with self._lock:
            session = self._session
            if session.status is SessionStatus.EVALUATING:
                raise Busy("a rerank is in progress; retry when it completes")
            if session.backend is SessionBackend.STATS:
                channels = dict(session.candidate_channels)
                baseline, rankings = _stats_rankings(
                    channels, (), session.candidates, session.priors, session.cost_model
                )
                committed = replace(
                    session,
                    deployed=(),
                    deployed_channels=(),
                    current_baseline_channel=baseline,
                    latest_rankings=rankings,
                    signal_log=(),
                    status=SessionStatus.IDLE,
                )
                self._session = committed
                return committed
            working = replace(session, status=SessionStatus.EVALUATING)
            self._session = working

        assert self._resources is not None
        try:
            baseline = _model_channel(
                self._resources.trainer,
                self._resources.train_split,
                self._resources.validation_split,
                tuple(working.base_features),
                self._resources.config,
                self._resources.smoothing,
                self._resources.normal_class,
                label="base",
            )
            rankings, _ = _full_rankings(
                self._resources,
                working.base_features,
                (),
                working.candidates,
                baseline,
                working.priors,
                working.cost_model,
            )
        except BaseException:
            with self._lock:
                self._session = replace(self._session, status=SessionStatus.IDLE)
            raise
        with self._lock:
            committed = replace(
                working,
                deployed=(),
                deployed_channels=(),
                current_baseline_channel=baseline,
                latest_rankings=rankings,
                signal_log=(),
                status=SessionStatus.IDLE,
            )
            self._session = committed
            return committed

    def save(self, path: str | Path) -> None:
        save_session(self.snapshot(), path)


# ------------------------------------------------------------ serialization


def _channel_doc(channel: BinarySensorChannel) -> dict:
    return {
        "label": channel.label,
        "p_signal_given_fault": channel.p_signal_given_fault,
        "p_signal_given_no_fault": channel.p_signal_given_no_fault,
    }


def _channel_from_doc(doc: Mapping) -> BinarySensorChannel:
    try:
        return BinarySensorChannel(
            p_signal_given_fault=float(doc["p_signal_given_fault"]),
            p_signal_given_no_fault=float(doc["p_signal_given_no_fault"]),
            label=str(doc.get("label", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad channel document: {exc}") from None


def session_to_doc(session: DeploymentSession) -> dict:
    return {
        "session_id": session.session_id,
        "backend": session.backend.value,
        "base_features": list(session.base_features),
        "candidates": list(session.candidates),
        "deployed": list(session.deployed),
        "cost_model": {
            "R": session.cost_model.remediation_cost,
            "P": session.cost_model.plant_damage_cost,
            "convention": session.cost_model.convention.value,
        },
        "priors": {
            "p_fault": session.priors.p_fault,
            "p_no_fault": session.priors.p_no_fault,
        },
        "current_baseline_channel": (
            _channel_doc(session.current_baseline_channel)
            if session.current_baseline_channel is not None
            else None
        ),
        "candidate_channels": [
            _channel_doc(ch) for _, ch in session.candidate_channels
        ],
        "deployed_channels": [
            _channel_doc(ch) for _, ch in session.deployed_channels
        ],
        "rankings": [
            {
                "label": r.sensor_label,
                "evsi": r.evsi,
                "baseline_cost": r.baseline_cost,
                "candidate_cost": r.candidate_cost,
                "action_signal": r.action_on_signal.value,
                "action_no_signal": r.action_on_no_signal.value,
            }
            for r in session.latest_rankings
        ],
        "signal_log": [
            {
                "timestamp": e.timestamp,
                "sensor_label": e.sensor_label,
                "signal": e.signal,
                "recommended_action": e.recommended_action.value,
            }
            for e in session.signal_log
        ],
        "status": session.status.value,
    }


def session_from_doc(doc: Mapping) -> DeploymentSession:
    try:
        cost = doc["cost_model"]
        priors = doc["priors"]
        baseline_doc = doc.get("current_baseline_channel")
        session = DeploymentSession(
            session_id=str(doc["session_id"]),
            backend=SessionBackend(doc["backend"]),
            base_features=tuple(str(f) for f in doc["base_features"]),
            candidates=tuple(str(c) for c in doc["candidates"]),
            deployed=tuple(str(d) for d in doc["deployed"]),
            cost_model=CostModel(
                remediation_cost=float(cost["R"]),
                plant_damage_cost=float(cost["P"]),
                convention=CostConvention(cost["convention"]),
            ),
            priors=Priors(
                p_fault=float(priors["p_fault"]),
                p_no_fault=float(priors["p_no_fault"]),
            ),
            current_baseline_channel=(
                _channel_from_doc(baseline_doc) if baseline_doc is not None else None
            ),
            candidate_channels=tuple(
                (ch["label"], _channel_from_doc(ch))
                for ch in doc["candidate_channels"]
            ),
            deployed_channels=tuple(
                (ch["label"], _channel_from_doc(ch))
                for ch in doc["deployed_channels"]
            ),
            latest_rankings=tuple(
                EvsiReport(
                    sensor_label=str(r["label"]),
                    evsi=float(r["evsi"]),
                    baseline_cost=float(r["baseline_cost"]),
                    candidate_cost=float(r["candidate_cost"]),
                    action_on_signal=Action(r["action_signal"]),
                    action_on_no_signal=Action(r["action_no_signal"]),
                )
                for r in doc["rankings"]
            ),
            signal_log=tuple(
                SignalEvent(
                    timestamp=str(e["timestamp"]),
                    sensor_label=str(e["sensor_label"]),
                    signal=bool(e["signal"]),
                    recommended_action=Action(e["recommended_action"]),
                )
                for e in doc["signal_log"]
            ),
            status=SessionStatus(doc["status"]),
        )
    except SchemaViolation:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemaViolation(f"bad session document: {exc}") from None
    return session


def save_session(session: DeploymentSession, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(session_to_doc(session), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_session(path: str | Path) -> DeploymentSession:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid session JSON: {exc}") from None
    return session_from_doc(doc)
