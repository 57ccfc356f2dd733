"""HTTP/JSON API over a deployment session.

One session per process. All mutations funnel through the session
manager's single-writer lock, so concurrent requests are linearizable;
GET handlers only read committed snapshots. Responses are UTF-8 JSON
with lower_snake_case keys, and every error body carries the same shape:
``{"code": ..., "message": ..., "http_status": ...}``.

Routes:
    GET  /api/health      liveness probe, ``{"status": "ok"}``
    GET  /api/session     full session document
    GET  /api/rankings    status + deployed list + latest ranking rows
    GET  /api/sweep       per-sensor EVSI across ``?ratios=2,4,8,16``
    POST /api/deploy      body ``{"sensor": label}``, returns updated rankings
    POST /api/signal      body ``{"sensor": label, "signal": bool}``
    POST /api/reset       drop deployments and logs, back to round 0
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .decision import report_doc, sensitivity_sweep, sweep_doc
from .errors import (
    AlreadyDeployed,
    Busy,
    InvalidRatio,
    NotDeployed,
    UnknownSensor,
)
from .session import DeploymentSession, SessionManager, session_to_doc

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_RATIOS = (2.0, 4.0, 8.0, 16.0)


@dataclass(frozen=True)
class ApiError(Exception):
    code: str
    message: str
    http_status: int

    _CODES = ("unknown_sensor", "already_deployed", "busy", "not_deployed", "bad_request")
    _STATUSES = (400, 404, 409)

    def __post_init__(self) -> None:
        if self.code not in self._CODES:
            raise ValueError(f"unknown error code {self.code!r}")
        if self.http_status not in self._STATUSES:
            raise ValueError(f"unsupported http status {self.http_status!r}")

    def doc(self) -> dict:
        return {"code": self.code, "message": self.message, "http_status": self.http_status}


def _api_error_for(exc: Exception) -> ApiError:
    if isinstance(exc, UnknownSensor):
        return ApiError("unknown_sensor", str(exc), 404)
    if isinstance(exc, AlreadyDeployed):
        return ApiError("already_deployed", str(exc), 409)
    if isinstance(exc, Busy):
        return ApiError("busy", str(exc), 409)
    if isinstance(exc, NotDeployed):
        return ApiError("not_deployed", str(exc), 409)
    raise exc


def rankings_view(session: DeploymentSession) -> dict:
    return {
        "status": session.status.value,
        "deployed": list(session.deployed),
        "rankings": [report_doc(r) for r in session.latest_rankings],
    }


def _parse_ratios(query: str) -> tuple[float, ...]:
    params = parse_qs(query, keep_blank_values=True)
    raw = params.get("ratios")
    if raw is None:
        return DEFAULT_SWEEP_RATIOS
    try:
        ratios = tuple(float(tok) for tok in raw[-1].split(",") if tok.strip())
    except ValueError:
        raise ApiError("bad_request", f"ratios must be comma-separated numbers: {raw[-1]!r}", 400)
    if not ratios:
        raise ApiError("bad_request", "ratios list is empty", 400)
    return ratios


def sweep_view(session: DeploymentSession, ratios: tuple[float, ...]) -> dict:
    """What-if table over every known sensor, deployed first."""
    channels = [ch for _, ch in session.deployed_channels]
    deployed = {label for label, _ in session.deployed_channels}
    channels += [ch for label, ch in session.candidate_channels if label not in deployed]
    try:
        table = sensitivity_sweep(
            tuple(channels),
            None,
            session.priors,
            session.cost_model.remediation_cost,
            ratios,
            convention=session.cost_model.convention,
        )
    except InvalidRatio as exc:
        raise ApiError("bad_request", str(exc), 400) from None
    return sweep_doc(table)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "evsikit"

    # ------------------------------------------------------------- plumbing

    @property
    def manager(self) -> SessionManager:
        return self.server.manager  # type: ignore[attr-defined]

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        logger.debug("%s %s", self.address_string(), format % args)

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._send_cors()
        self.end_headers()
        self.wfile.write(body)

    def _send_cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ApiError("bad_request", "missing request body", 400)
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ApiError("bad_request", "request body is not valid JSON", 400)
        if not isinstance(doc, dict):
            raise ApiError("bad_request", "request body must be a JSON object", 400)
        return doc

    def _sensor_field(self, doc: dict) -> str:
        sensor = doc.get("sensor")
        if not isinstance(sensor, str) or not sensor:
            raise ApiError("bad_request", "field 'sensor' must be a non-empty string", 400)
        return sensor

    # --------------------------------------------------------------- routes

    def do_OPTIONS(self) -> None:  # noqa: N802 (http.server naming)
        self.send_response(204)
        self._send_cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        try:
            if url.path == "/api/health":
                self._send_json(200, {"status": "ok"})
            elif url.path == "/api/session":
                self._send_json(200, session_to_doc(self.manager.snapshot()))
            elif url.path == "/api/rankings":
                self._send_json(200, rankings_view(self.manager.snapshot()))
            elif url.path == "/api/sweep":
                ratios = _parse_ratios(url.query)
                self._send_json(200, sweep_view(self.manager.snapshot(), ratios))
            else:
                raise ApiError("bad_request", f"no such route: {url.path}", 404)
        except ApiError as err:
            self._send_json(err.http_status, err.doc())

    def do_POST(self) -> None:  # noqa: N802
        url = urlparse(self.path)
        try:
            if url.path == "/api/deploy":
                doc = self._read_body()
                session = self._mutate(lambda: self.manager.deploy(self._sensor_field(doc)))
                self._send_json(200, rankings_view(session))
            elif url.path == "/api/signal":
                doc = self._read_body()
                signal = doc.get("signal")
                if not isinstance(signal, bool):
                    raise ApiError("bad_request", "field 'signal' must be a boolean", 400)
                sensor = self._sensor_field(doc)
                try:
                    session, action = self.manager.record_signal(sensor, signal)
                except (UnknownSensor, NotDeployed, Busy) as exc:
                    raise _api_error_for(exc) from None
                self._send_json(
                    200,
                    {
                        "sensor": sensor,
                        "signal": signal,
                        "recommended_action": action.value,
                        "status": session.status.value,
                    },
                )
            elif url.path == "/api/reset":
                session = self._mutate(self.manager.reset)
                self._send_json(200, rankings_view(session))
            else:
                raise ApiError("bad_request", f"no such route: {url.path}", 404)
        except ApiError as err:
            self._send_json(err.http_status, err.doc())

    def _mutate(self, op):
        try:
            return op()
        except (UnknownSensor, AlreadyDeployed, Busy, NotDeployed) as exc:
            raise _api_error_for(exc) from None


class EvsiService:
    """Owns the listening socket and its serving thread."""

    def __init__(self, manager: SessionManager, port: int = 0, host: str = "127.0.0.1"):
        self.server = ThreadingHTTPServer((host, port), _Handler)
        self.server.manager = manager  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    @property
    def url(self) -> str:
        host = self.server.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> "EvsiService":
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.server.shutdown()
        if self._thread is not None:
            self._thread.join()
        self.server.server_close()

    def serve_forever(self) -> None:
        logger.info("serving on %s", self.url)
        try:
            self.server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self.server.server_close()


def serve(manager: SessionManager, port: int = 0, host: str = "127.0.0.1") -> EvsiService:
    """Bind and return a started service; port 0 picks a free port."""
    return EvsiService(manager, port=port, host=host).start()
