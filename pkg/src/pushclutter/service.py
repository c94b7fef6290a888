"""Session service: live guided planning over the wire protocol.

One TCP listener; each client connection may open several sessions (the
parallel-guidance setup), capped service-wide. Every session runs its own
planning loop on a dedicated thread; the only cross-thread channels are
the per-session operator inbox and the connection's outbound stream.
"""

import random
import socket
import threading
import time

from .grtc import Budgets, EXHAUSTED, PlannerConfig, run_grtc
from .planners import KPIECE, RRT
from .protocol import (
    ABORT_SESSION, ACTION_OUTCOME, AWAITING_INPUT, BARE_KPIECE, BARE_RRT,
    CLOSED, ERROR, EXECUTING, FAILED, HELLO, HITL, HEURISTIC, MODES, NAMO,
    OPEN_SESSION, PLANNING, PROTOCOL_VERSION, REACH_GOAL, SCRIPTED,
    SELECT_OBJECT, SELECT_POINT, SUCCEEDED,
    FrameDecoder, ProtocolError, encode_message, snapshot_message,
    status_message,
)
from .scene import SceneParseError, SceneValidationError, parse_scene
from .strategies import (
    HeuristicStrategy, HumanBridgeStrategy, ImmediateGoal, NamoStrategy,
    ScriptParseError, ScriptedStrategy, script_from_yaml,
)

DEFAULT_MAX_SESSIONS = 8


def resolve_algorithm(mode: str, requested: str = None) -> str:
    """Bare modes carry their planner in the name; others take a request."""
    if mode == BARE_RRT:
        return RRT
    if mode == BARE_KPIECE:
        return KPIECE
    algorithm = requested or RRT
    if algorithm not in (RRT, KPIECE):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return algorithm


def build_strategy(mode, scene, seed, planner_config,
                   script_text=None, bridge=None):
    """Action source for a session or benchmark cell."""
    if mode == HITL:
        if bridge is None:
            raise ValueError("hitl mode requires an operator bridge")
        return bridge
    if mode == HEURISTIC:
        return HeuristicStrategy(scene, random.Random(seed))
    if mode == NAMO:
        return NamoStrategy(scene, planner_config, random.Random(seed))
    if mode == SCRIPTED:
        if not script_text:
            raise ValueError("scripted mode requires a script")
        return ScriptedStrategy(script_from_yaml(script_text))
    if mode in (BARE_RRT, BARE_KPIECE):
        return ImmediateGoal(scene.goal_id())
    raise ValueError(f"unknown mode {mode!r}")


class _Monitor:
    """Wraps a strategy to stream status, snapshots, and idle time."""

    def __init__(self, session, inner):
        self._session = session
        self._inner = inner

    def next_high_level_action(self, q):
        s = self._session
        s.emit_snapshot(q)
        s.set_status(AWAITING_INPUT)
        t0 = time.monotonic()
        action = self._inner.next_high_level_action(q)
        s.add_idle(time.monotonic() - t0)
        if s.aborted:
            return EXHAUSTED
        s.set_status(PLANNING)
        return action


class _Session:
    def __init__(self, sid, scene, mode, budgets, config, conn, bridge):
        self.id = sid
        self.scene = scene
        self.mode = mode
        self.budgets = budgets
        self.config = config
        self.bridge = bridge
        self.aborted = False
        self.terminal = False
        self.status = None
        self.idle_time = 0.0
        self.outcome = None
        self._conn = conn
        self._seq = 0
        self._lock = threading.Lock()
        # serializes sends against muting so nothing follows the Closed
        self._emit_lock = threading.Lock()
        self._muted = False
        self._thread = None

    def start(self, strategy):
        self._thread = threading.Thread(
            target=self._run, args=(strategy,),
            name=f"session-{self.id}", daemon=True)
        self._thread.start()

    # -- outbound ---------------------------------------------------------

    def _emit(self, msg):
        with self._emit_lock:
            if self._muted:
                return
            self._conn.send(msg)

    def emit_snapshot(self, q):
        with self._lock:
            seq = self._seq
            self._seq += 1
        self._emit(snapshot_message(self.id, seq, q))

    def set_status(self, status, stats=None, detail=None):
        with self._lock:
            if status == self.status and stats is None:
                return
            self.status = status
        msg = status_message(self.id, status, stats)
        if detail:
            msg["detail"] = detail
        self._emit(msg)

    def add_idle(self, seconds):
        with self._lock:
            self.idle_time += seconds

    # -- lifecycle --------------------------------------------------------

    def _run(self, strategy):
        outcome = None
        detail = None
        try:
            outcome = run_grtc(self.scene, _Monitor(self, strategy),
                               self.budgets, self.config,
                               log=self._on_action)
        except Exception as e:  # a broken session must not take the server
            detail = f"{type(e).__name__}: {e}"
        self.outcome = outcome
        if outcome is not None:
            self.emit_snapshot(outcome.final_state)
        status = SUCCEEDED if outcome is not None and outcome.succeeded \
            else FAILED
        self._finish(status, "finished", detail)

    def _on_action(self, event):
        self._emit({"kind": ACTION_OUTCOME, "session": self.id,
                    "object": event["action"], "centroid": event["centroid"],
                    "success": event["success"],
                    "plan_time": event["plan_time"]})
        if event["success"]:
            self.set_status(EXECUTING)

    def _stats(self):
        o = self.outcome
        executed = o.executed_actions if o is not None else ()
        return {"idle_time": self.idle_time,
                "guidance_time": o.guidance_time if o else 0.0,
                "planning_time": o.planning_time if o else 0.0,
                "proposed_actions": len(executed),
                "successful_actions": sum(e.success for e in executed)}

    def _finish(self, status, reason, detail=None):
        with self._lock:
            if self.terminal:
                return
            self.terminal = True
            self.status = status
        msg = status_message(self.id, status, self._stats())
        if detail:
            msg["detail"] = detail
        with self._emit_lock:
            if not self._muted:
                self._conn.send(msg)
                self._conn.send({"kind": CLOSED, "session": self.id,
                                 "reason": reason})
            self._muted = True

    def abort(self):
        """Immediate Failed from the caller's thread; the planning thread
        winds down in the background and stays silent."""
        self.aborted = True
        if self.bridge is not None:
            self.bridge.close()
        self._finish(FAILED, "aborted")


class _Connection:
    def __init__(self, service, sock):
        self._service = service
        self._sock = sock
        self._send_lock = threading.Lock()
        self._closed = False
        self.sessions = []

    def send(self, msg):
        data = encode_message(msg)
        with self._send_lock:
            if self._closed:
                return
            try:
                self._sock.sendall(data)
            except OSError:
                self._closed = True

    def _error(self, message, session=None):
        msg = {"kind": ERROR, "message": message}
        if session is not None:
            msg["session"] = session
        self.send(msg)

    def run(self):
        self.send({"kind": HELLO, "version": PROTOCOL_VERSION,
                   "max_sessions": self._service.max_sessions})
        decoder = FrameDecoder()
        try:
            while True:
                data = self._sock.recv(65536)
                if not data:
                    break
                for msg in decoder.feed(data):
                    if not self._handle(msg):
                        return
        except ProtocolError as e:
            self._error(f"protocol violation: {e}")
        except OSError:
            pass
        finally:
            self.close()

    def close(self):
        for session in self.sessions:
            if not session.terminal:
                session.abort()
        with self._send_lock:
            self._closed = True
        # shutdown wakes a reader blocked in recv; close alone does not
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass

    # -- message handling -------------------------------------------------

    def _handle(self, msg) -> bool:
        """False ends the connection."""
        kind = msg["kind"]
        if kind == OPEN_SESSION:
            self._open(msg)
        elif kind in (SELECT_OBJECT, SELECT_POINT, REACH_GOAL,
                      ABORT_SESSION):
            self._route(msg)
        elif kind == CLOSED:
            return False
        elif kind == HELLO:
            pass  # a client greeting is harmless
        else:
            self._error(f"clients do not send {kind!r}")
        return True

    def _open(self, msg):
        sid = msg["session"]
        try:
            scene = parse_scene(msg["scene"])
        except (SceneParseError, SceneValidationError) as e:
            self._error(f"scene rejected: {e}", sid)
            return
        mode = msg["mode"]
        try:
            b = msg.get("budgets")
            budgets = Budgets(b["overall"], b["pushing"], b["mode"]) \
                if b else Budgets()
            algorithm = resolve_algorithm(mode, msg.get("algorithm"))
        except ValueError as e:
            self._error(str(e), sid)
            return
        seed = msg.get("seed", 0)
        config = PlannerConfig(algorithm=algorithm, seed=seed)
        bridge = None
        if mode == HITL:
            bridge = HumanBridgeStrategy(
                scene.goal_id(),
                on_error=lambda m, s=sid: self._error(m, s))
        session = _Session(sid, scene, mode, budgets, config, self, bridge)
        try:
            strategy = build_strategy(mode, scene, seed, config,
                                      script_text=msg.get("script"),
                                      bridge=bridge)
        except (ValueError, ScriptParseError) as e:
            self._error(str(e), sid)
            return
        if not self._service.register(session):
            self._error("session id in use or session cap reached", sid)
            return
        self.sessions.append(session)
        session.start(strategy)

    def _route(self, msg):
        sid = msg["session"]
        session = self._service.session(sid)
        if session is None:
            self._error(f"unknown session {sid!r}", sid)
            return
        kind = msg["kind"]
        if kind == ABORT_SESSION:
            if not session.terminal:
                session.abort()
            return
        if session.terminal:
            self._error("session is closed", sid)
            return
        if session.bridge is None:
            self._error(f"{session.mode} sessions take no operator input",
                        sid)
            return
        if kind == SELECT_OBJECT:
            oid = msg["object"]
            if not any(s.id == oid for s in session.scene.movable_specs()):
                self._error(f"unknown or unpushable object {oid!r}", sid)
                return
            session.bridge.select(oid)
        elif kind == SELECT_POINT:
            session.bridge.point(msg["x"], msg["y"])
        elif kind == REACH_GOAL:
            session.bridge.select(session.scene.goal_id())


class Service:
    """Accepts connections until stop(); safe to use as a context manager."""

    def __init__(self, host="127.0.0.1", port=0,
                 max_sessions=DEFAULT_MAX_SESSIONS):
        self.max_sessions = max_sessions
        self._listener = socket.create_server((host, port))
        self._sessions = {}
        self._lock = threading.Lock()
        self._connections = []
        self._stopping = False
        self._accept_thread = None

    @property
    def address(self):
        return self._listener.getsockname()

    def start(self):
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="service-accept", daemon=True)
        self._accept_thread.start()
        return self

    def _accept_loop(self):
        while not self._stopping:
            try:
                sock, _ = self._listener.accept()
            except OSError:
                return
            conn = _Connection(self, sock)
            self._connections.append(conn)
            threading.Thread(target=conn.run, name="service-conn",
                             daemon=True).start()

    def register(self, session) -> bool:
        with self._lock:
            if session.id in self._sessions:
                return False
            active = sum(1 for s in self._sessions.values()
                         if not s.terminal)
            if active >= self.max_sessions:
                return False
            self._sessions[session.id] = session
            return True

    def session(self, sid):
        with self._lock:
            return self._sessions.get(sid)

    def stop(self):
        self._stopping = True
        # shutdown wakes the thread blocked in accept; close alone leaves
        # it stuck in the syscall
        try:
            self._listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._listener.close()
        except OSError:
            pass
        for conn in self._connections:
            conn.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(bind: str = "127.0.0.1:0",
          max_sessions: int = DEFAULT_MAX_SESSIONS) -> Service:
    """Parse 'host:port' and start a service on it."""
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind address must be host:port, got {bind!r}")
    return Service(host=host, port=int(port),
                   max_sessions=max_sessions).start()
