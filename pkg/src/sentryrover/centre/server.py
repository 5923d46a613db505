"""The control-centre service.

One asyncio process runs three concerns:

  * the frame loop: capture (render or replay), per-mode processing
    (tracking or motion detection), rover watchdog/kinematics;
  * session I/O: the framed TCP protocol plus the same messages over a
    binary WebSocket bridge, with static console assets on the bridge
    port;
  * the rover: commands reach it only as decoded serial packets, and the
    full packet transcript is kept for auditing.

Exactly one session may be Ready; later HELLOs get HELLO_ERR "busy".
Frames are pushed to the Ready session through a drop-oldest slot of
depth 4, so a slow network never stalls detection.
"""

from __future__ import annotations

import asyncio
import mimetypes
import time
from collections import deque
from pathlib import Path
from typing import Awaitable, Callable

from .. import motion, protocol, tracker
from ..imaging import Frame, PixelFormat, Scene, gray_to_rgb, read_srseq, render_scene, restamp, to_gray
from ..motion import AlarmPhase, AlarmState, FrameWindow, arm
from ..protocol import (
    ControlMessage,
    DisarmAction,
    Mode,
    ModeChangeAction,
    ModeLocked,
    MsgType,
    ProtocolError,
    RoverAction,
    SessionPhase,
    SessionState,
    SetColorAction,
    SnapshotAction,
    session_step,
)
from ..rover import (
    AuxCommand,
    Command,
    DriveCommand,
    RoverState,
    apply_command,
    decode_packet,
    encode_packet,
    step,
    watchdog,
)
from ..tracker import ColorReference
from .config import CentreConfig, ConfigError
from .websocket import WebSocketConnection, handshake_response

FRAME_QUEUE_DEPTH = 4

_MANUAL_MODES = (Mode.PC_CONTROL, Mode.INTERNET_CONTROL)


class _Session:
    _next_id = 0

    def __init__(self, send: Callable[[bytes], Awaitable[None]]):
        _Session._next_id += 1
        self.sid = _Session._next_id
        self.state = SessionState()
        self.send = send
        self.outbox: deque[ControlMessage] = deque()
        self.frame_slot: deque[ControlMessage] = deque(maxlen=FRAME_QUEUE_DEPTH)
        self.wake = asyncio.Event()
        self.closing = False


class Centre:
    """The wired-together service. Construct, await start(), await stop()."""

    def __init__(self, cfg: CentreConfig, clock: Callable[[], float] | None = None):
        if (cfg.scene_file is None) == (cfg.sequence_file is None):
            raise ConfigError("exactly one of scene_file / sequence_file must be set")
        if not cfg.shared_secret:
            raise ConfigError("shared_secret must be set")
        if not cfg.alarm_password:
            raise ConfigError("alarm_password must be set")
        self.cfg = cfg
        self._clock = clock or time.monotonic
        self._t0 = self._clock()

        self.mode: Mode = Mode.PC_CONTROL
        self.rover = RoverState()
        self.alarm = AlarmState.new(cfg.alarm_password)
        self.window = FrameWindow.empty()
        self.color_ref: ColorReference = cfg.color_ref
        self.transcript: list[tuple[bytes, str]] = []
        self.frames_detected = 0
        self.latest_frame: Frame | None = None

        self._scene: Scene | None = None
        self._start_pose = RoverState()
        self._replay: list[Frame] = []
        self._replay_idx = 0
        self._seq = 0
        self._tick = 0

        self._sessions: dict[int, _Session] = {}
        self._ready_sid: int | None = None
        self._tcp_server: asyncio.AbstractServer | None = None
        self._bridge_server: asyncio.AbstractServer | None = None
        self._frame_task: asyncio.Task | None = None
        self._aux_tasks: set[asyncio.Task] = set()

    # -- lifecycle ----------------------------------------------------------

    def _load_source(self) -> None:
        if self.cfg.scene_file is not None:
            from .config import load_scene

            text = Path(self.cfg.scene_file).read_text(encoding="utf-8")
            self._scene, self._start_pose = load_scene(text)
            self.rover = self._start_pose
        else:
            data = Path(self.cfg.sequence_file).read_bytes()
            self._replay = list(read_srseq(data))
            if not self._replay:
                raise ConfigError("replay sequence is empty")

    async def start(self) -> None:
        self._load_source()
        self._tcp_server = await asyncio.start_server(
            self._handle_tcp, host="127.0.0.1", port=self.cfg.listen_port
        )
        bridge_port = self.cfg.listen_port + 1 if self.cfg.listen_port else 0
        self._bridge_server = await asyncio.start_server(
            self._handle_bridge, host="127.0.0.1", port=bridge_port
        )
        self._frame_task = asyncio.create_task(self._frame_loop())

    async def stop(self) -> None:
        if self._frame_task:
            self._frame_task.cancel()
            try:
                await self._frame_task
            except asyncio.CancelledError:
                pass
        for server in (self._tcp_server, self._bridge_server):
            if server:
                server.close()
                await server.wait_closed()
        for task in list(self._aux_tasks):
            task.cancel()
        await asyncio.gather(*self._aux_tasks, return_exceptions=True)

    async def run_forever(self) -> None:
        await self.start()
        try:
            await asyncio.Event().wait()
        finally:
            await self.stop()

    @property
    def tcp_port(self) -> int:
        return self._tcp_server.sockets[0].getsockname()[1]

    @property
    def bridge_port(self) -> int:
        return self._bridge_server.sockets[0].getsockname()[1]

    def _now_ms(self) -> int:
        return round((self._clock() - self._t0) * 1000)

    # -- frame loop -----------------------------------------------------------

    async def _frame_loop(self) -> None:
        period = 1.0 / self.cfg.frame_rate
        while True:
            await asyncio.sleep(period)
            self.tick_once()

    def tick_once(self) -> None:
        """One simulation tick: watchdog, kinematics, capture, process."""
        now_ms = self._now_ms()
        dt = 1.0 / self.cfg.frame_rate
        self.rover = watchdog(self.rover, now_ms, self.cfg.watchdog_timeout_ms)
        self.rover = step(self.rover, dt)
        self._tick += 1
        if not self.rover.camera_on:
            return
        frame = self._capture(now_ms)
        self.latest_frame = frame
        out_frame = frame
        if self.mode is Mode.TRACING:
            rgb = frame if frame.format is PixelFormat.RGB24 else gray_to_rgb(frame)
            command, _report, mask = tracker.track_step(rgb, self.color_ref, self.cfg.tracker)
            self._send_to_rover(command)
            out_frame = tracker.overlay_frame(frame, mask)
        elif self.mode is Mode.MOTION_DETECTION:
            gray = to_gray(frame) if frame.format is PixelFormat.RGB24 else frame
            if self.window.frames and self.window.frames[-1].seq + 1 != gray.seq:
                self.window = FrameWindow.empty()
            self.window = self.window.push(gray)
            if self.window.warm:
                mask = motion.four_frame_mask(self.window, self.cfg.detector)
                self.alarm, events = motion.alarm_step(self.alarm, mask, self.cfg.detector)
                self.frames_detected += 1
                for _event in events:
                    self._queue_ready(protocol.alarm_event())
        self._push_frame(out_frame)

    def _capture(self, now_ms: int) -> Frame:
        seq = self._seq
        self._seq += 1
        if self._scene is not None:
            return render_scene(
                self._scene,
                self.rover,
                self.cfg.width,
                self.cfg.height,
                lights=self.rover.lights,
                night_vision=self.rover.night_vision,
                timestamp_ms=now_ms,
                seq=seq,
            )
        frame = self._replay[self._replay_idx % len(self._replay)]
        self._replay_idx += 1
        return restamp(frame, now_ms, seq)

    # -- rover ---------------------------------------------------------------

    def _send_to_rover(self, cmd: Command) -> None:
        """Every command crosses the serial codec; the transcript records it."""
        packet = encode_packet(cmd)
        decoded = decode_packet(packet)
        self.transcript.append((packet, decoded.name))
        self.rover = apply_command(self.rover, decoded, self._now_ms())

    # -- sessions --------------------------------------------------------------

    def _queue(self, sess: _Session, msg: ControlMessage) -> None:
        sess.outbox.append(msg)
        sess.wake.set()

    def _queue_ready(self, msg: ControlMessage) -> None:
        if self._ready_sid is not None:
            sess = self._sessions.get(self._ready_sid)
            if sess:
                self._queue(sess, msg)

    def _push_frame(self, frame: Frame) -> None:
        if self._ready_sid is None:
            return
        sess = self._sessions.get(self._ready_sid)
        if sess:
            sess.frame_slot.append(protocol.frame_message(frame))
            sess.wake.set()

    def handle_message(self, sess: _Session, msg: ControlMessage) -> None:
        if (
            msg.type is MsgType.HELLO
            and sess.state.phase is SessionPhase.AWAIT_HELLO
            and self._ready_sid is not None
        ):
            sess.state = SessionState(
                phase=SessionPhase.CLOSED, authenticated=False, close_reason="busy"
            )
            self._queue(sess, protocol.hello_err("busy"))
            sess.closing = True
            sess.wake.set()
            return
        state, outgoing, actions = session_step(sess.state, msg, self.cfg.shared_secret)
        mode_refused = False
        for action in actions:
            if isinstance(action, RoverAction):
                self._session_rover_command(action.command)
            elif isinstance(action, ModeChangeAction):
                if not self._change_mode(action.mode):
                    mode_refused = True
            elif isinstance(action, SnapshotAction):
                if self.latest_frame is not None:
                    self._queue(sess, protocol.snapshot_message(self.latest_frame))
            elif isinstance(action, SetColorAction):
                self.color_ref = ColorReference(action.rgb, action.tolerance)
            elif isinstance(action, DisarmAction):
                self._queue(sess, protocol.disarm_result(self._disarm(action.password)))
        for out in outgoing:
            if out.type is MsgType.MODE_OK and mode_refused:
                out = protocol.mode_ok(self.mode)
            self._queue(sess, out)
        was_ready = sess.state.phase is SessionPhase.READY
        sess.state = state
        if state.phase is SessionPhase.READY and self._ready_sid is None:
            self._ready_sid = sess.sid
        if state.phase is SessionPhase.CLOSED:
            if was_ready and self._ready_sid == sess.sid:
                self._ready_sid = None
            sess.closing = True
            sess.wake.set()

    def _session_rover_command(self, cmd: Command) -> None:
        if isinstance(cmd, DriveCommand) and self.mode not in _MANUAL_MODES:
            return
        if isinstance(cmd, AuxCommand) and self.mode is Mode.MOTION_DETECTION:
            return
        self._send_to_rover(cmd)

    def _change_mode(self, requested: Mode) -> bool:
        try:
            new_mode, teardown = protocol.mode_transition(
                self.mode, requested, alarm_latched=self.alarm.phase is AlarmPhase.ALARM
            )
        except ModeLocked:
            return False
        for action in teardown:
            if isinstance(action, RoverAction):
                self._send_to_rover(action.command)
        leaving = self.mode
        self.mode = new_mode
        if leaving is Mode.MOTION_DETECTION and new_mode is not Mode.MOTION_DETECTION:
            self.alarm = AlarmState.new(self.cfg.alarm_password)
            self.window = FrameWindow.empty()
        if new_mode is Mode.MOTION_DETECTION and leaving is not Mode.MOTION_DETECTION:
            self.alarm = arm(AlarmState.new(self.cfg.alarm_password))
            self.window = FrameWindow.empty()
        return True

    def _disarm(self, password: str) -> bool:
        if self.alarm.phase is AlarmPhase.IDLE:
            return False
        self.alarm, ok = motion.disarm(self.alarm, password)
        return ok

    def _drop_session(self, sess: _Session) -> None:
        if self._ready_sid == sess.sid:
            self._ready_sid = None
        self._sessions.pop(sess.sid, None)

    # -- TCP transport -----------------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        async def send(data: bytes) -> None:
            writer.write(data)
            await writer.drain()

        sess = _Session(send)
        self._sessions[sess.sid] = sess
        writer_task = asyncio.create_task(self._session_writer(sess))
        self._aux_tasks.add(writer_task)
        writer_task.add_done_callback(self._aux_tasks.discard)
        buffer = b""
        try:
            while not sess.closing:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                buffer += chunk
                while True:
                    decoded = protocol.decode_message(buffer)
                    if decoded is None:
                        break
                    msg, consumed = decoded
                    buffer = buffer[consumed:]
                    self.handle_message(sess, msg)
                    if sess.closing:
                        break
        except (ProtocolError, ConnectionError):
            pass
        finally:
            sess.state = SessionState(
                phase=SessionPhase.CLOSED,
                authenticated=sess.state.authenticated,
                close_reason=sess.state.close_reason or "disconnect",
            )
            sess.closing = True
            sess.wake.set()
            await writer_task
            self._drop_session(sess)
            writer.close()

    async def _session_writer(self, sess: _Session) -> None:
        try:
            while True:
                await sess.wake.wait()
                sess.wake.clear()
                while sess.outbox or sess.frame_slot:
                    if sess.outbox:
                        msg = sess.outbox.popleft()
                    else:
                        msg = sess.frame_slot.popleft()
                    await sess.send(protocol.encode_message(msg))
                if sess.closing:
                    return
        except (ConnectionError, asyncio.CancelledError):
            return

    # -- bridge: WebSocket + static assets ------------------------------------------

    async def _handle_bridge(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            request_line = await reader.readline()
            if not request_line:
                writer.close()
                return
            parts = request_line.decode("latin-1").split()
            if len(parts) < 3:
                writer.close()
                return
            method, path = parts[0], parts[1]
            headers: dict[str, str] = {}
            while True:
                line = await reader.readline()
                if line in (b"\r\n", b"\n", b""):
                    break
                name, _, value = line.decode("latin-1").partition(":")
                headers[name.strip().lower()] = value.strip()
            if (
                path == "/ws"
                and "websocket" in headers.get("upgrade", "").lower()
                and "sec-websocket-key" in headers
            ):
                writer.write(handshake_response(headers["sec-websocket-key"]))
                await writer.drain()
                await self._serve_websocket(reader, writer)
            else:
                await self._serve_static(method, path, writer)
        except (ConnectionError, asyncio.IncompleteReadError):
            writer.close()

    async def _serve_websocket(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        ws = WebSocketConnection(reader, writer)

        async def send(data: bytes) -> None:
            await ws.send(data)

        sess = _Session(send)
        self._sessions[sess.sid] = sess
        writer_task = asyncio.create_task(self._session_writer(sess))
        self._aux_tasks.add(writer_task)
        writer_task.add_done_callback(self._aux_tasks.discard)
        buffer = b""
        try:
            while not sess.closing:
                payload = await ws.recv()
                if payload is None:
                    break
                buffer += payload
                while True:
                    decoded = protocol.decode_message(buffer)
                    if decoded is None:
                        break
                    msg, consumed = decoded
                    buffer = buffer[consumed:]
                    self.handle_message(sess, msg)
                    if sess.closing:
                        break
        except (ProtocolError, ConnectionError):
            pass
        finally:
            sess.closing = True
            sess.wake.set()
            await writer_task
            self._drop_session(sess)
            await ws.close()

    async def _serve_static(self, method: str, path: str, writer: asyncio.StreamWriter) -> None:
        if method != "GET":
            writer.write(b"HTTP/1.1 405 Method Not Allowed\r\nContent-Length: 0\r\n\r\n")
            await writer.drain()
            writer.close()
            return
        body, content_type, status = self._static_body(path)
        writer.write(
            f"HTTP/1.1 {status}\r\n"
            f"Content-Type: {content_type}\r\n"
            f"Content-Length: {len(body)}\r\n"
            "Connection: close\r\n\r\n".encode("ascii")
        )
        writer.write(body)
        await writer.drain()
        writer.close()

    def _static_body(self, path: str) -> tuple[bytes, str, str]:
        path = path.split("?", 1)[0]
        if self.cfg.static_dir is None:
            if path == "/":
                return (
                    b"<html><body><h1>sentryrover control centre</h1>"
                    b"<p>No console assets configured (static_dir). "
                    b"The WebSocket bridge lives at /ws.</p></body></html>",
                    "text/html",
                    "200 OK",
                )
            return b"not found", "text/plain", "404 Not Found"
        root = Path(self.cfg.static_dir).resolve()
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root not in target.parents and target != root:
            return b"forbidden", "text/plain", "403 Forbidden"
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return b"not found", "text/plain", "404 Not Found"
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        return target.read_bytes(), content_type, "200 OK"
