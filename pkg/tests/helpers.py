"""Shared test plumbing: an in-process service and a framed TCP client."""

from __future__ import annotations

import asyncio
import contextlib
import time

from sentryrover import protocol
from sentryrover.centre.config import CentreConfig
from sentryrover.centre.server import Centre
from sentryrover.protocol import ControlMessage, MsgType

SECRET = "test-secret"
ALARM_PW = "alarm-pw"


class TcpClient:
    """Framed protocol client over a plain TCP connection."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self._buffer = b""

    @classmethod
    async def connect(cls, port: int) -> "TcpClient":
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        return cls(reader, writer)

    async def send(self, msg: ControlMessage) -> None:
        self.writer.write(protocol.encode_message(msg))
        await self.writer.drain()

    async def recv(self, timeout: float = 3.0) -> ControlMessage | None:
        """Next message, or None on EOF."""
        deadline = time.monotonic() + timeout
        while True:
            decoded = protocol.decode_message(self._buffer)
            if decoded is not None:
                msg, consumed = decoded
                self._buffer = self._buffer[consumed:]
                return msg
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("no message within timeout")
            chunk = await asyncio.wait_for(self.reader.read(65536), timeout=remaining)
            if not chunk:
                return None
            self._buffer += chunk

    async def recv_type(self, msg_type: MsgType, timeout: float = 3.0) -> ControlMessage:
        """Next message of the given type, skipping streamed frames."""
        deadline = time.monotonic() + timeout
        while True:
            msg = await self.recv(timeout=max(0.01, deadline - time.monotonic()))
            if msg is None:
                raise ConnectionError(f"connection closed while waiting for {msg_type.name}")
            if msg.type is msg_type:
                return msg
            if msg.type not in (MsgType.FRAME, MsgType.SNAPSHOT, MsgType.ALARM_EVENT):
                raise AssertionError(f"unexpected {msg.type.name} while waiting for {msg_type.name}")

    def close(self) -> None:
        self.writer.close()


def scene_config(tmp_path, scene_text=None, **overrides) -> CentreConfig:
    scene_file = tmp_path / "scene.cfg"
    scene_file.write_text(scene_text or "background_gray=96\nobject=2.0,0.0,0.5,255,0,0\n")
    kwargs = dict(
        listen_port=0,
        shared_secret=SECRET,
        alarm_password=ALARM_PW,
        frame_rate=50.0,
        width=64,
        height=64,
        scene_file=str(scene_file),
    )
    kwargs.update(overrides)
    return CentreConfig(**kwargs)


def replay_config(tmp_path, sequence_bytes: bytes, **overrides) -> CentreConfig:
    seq_file = tmp_path / "replay.srseq"
    seq_file.write_bytes(sequence_bytes)
    kwargs = dict(
        listen_port=0,
        shared_secret=SECRET,
        alarm_password=ALARM_PW,
        frame_rate=50.0,
        sequence_file=str(seq_file),
    )
    kwargs.update(overrides)
    return CentreConfig(**kwargs)


@contextlib.asynccontextmanager
async def running_centre(cfg: CentreConfig):
    centre = Centre(cfg)
    await centre.start()
    try:
        yield centre
    finally:
        await centre.stop()


async def ready_client(centre: Centre) -> TcpClient:
    client = await TcpClient.connect(centre.tcp_port)
    await client.send(protocol.hello(SECRET))
    reply = await client.recv_type(MsgType.HELLO_OK)
    assert reply.type is MsgType.HELLO_OK
    return client


async def wait_until(predicate, timeout: float = 3.0, interval: float = 0.01):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return
        await asyncio.sleep(interval)
    raise TimeoutError("condition not reached in time")
