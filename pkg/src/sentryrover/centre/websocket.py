"""Minimal WebSocket support (RFC 6455), enough for the console bridge.

Server side only: accept an HTTP upgrade, then exchange binary messages.
Fragmented messages are reassembled; ping/pong and close are handled
inline. Client-side helpers exist so tests can speak the protocol too.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import os
import struct

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class WebSocketError(ConnectionError):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def handshake_response(client_key: str) -> bytes:
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(client_key)}\r\n"
        "\r\n"
    ).encode("ascii")


def encode_frame(opcode: int, payload: bytes, mask: bool = False) -> bytes:
    """Build one complete (FIN=1) frame; mask=True for client frames."""
    head = bytes((0x80 | opcode,))
    n = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if n < 126:
        head += bytes((mask_bit | n,))
    elif n < 65536:
        head += bytes((mask_bit | 126,)) + struct.pack(">H", n)
    else:
        head += bytes((mask_bit | 127,)) + struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        return head + key + masked
    return head + payload


async def _read_frame(reader: asyncio.StreamReader) -> tuple[int, bool, bytes]:
    """Read one raw frame; returns (opcode, fin, payload)."""
    header = await reader.readexactly(2)
    fin = bool(header[0] & 0x80)
    opcode = header[0] & 0x0F
    masked = bool(header[1] & 0x80)
    length = header[1] & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", await reader.readexactly(2))
    elif length == 127:
        (length,) = struct.unpack(">Q", await reader.readexactly(8))
    if length > 64 * 1024 * 1024:
        raise WebSocketError(f"frame of {length} bytes is too large")
    key = await reader.readexactly(4) if masked else None
    payload = await reader.readexactly(length) if length else b""
    if key is not None:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, fin, payload


class WebSocketConnection:
    """One upgraded connection. recv() yields complete binary/text messages."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter,
                 client_side: bool = False):
        self._reader = reader
        self._writer = writer
        self._client_side = client_side
        self._closed = False

    async def recv(self) -> bytes | None:
        """Next data message, or None once the peer closes."""
        buffer = b""
        while True:
            try:
                opcode, fin, payload = await _read_frame(self._reader)
            except (asyncio.IncompleteReadError, ConnectionError):
                self._closed = True
                return None
            if opcode == OP_CLOSE:
                if not self._closed:
                    await self._send_raw(OP_CLOSE, payload[:2])
                self._closed = True
                return None
            if opcode == OP_PING:
                await self._send_raw(OP_PONG, payload)
                continue
            if opcode == OP_PONG:
                continue
            if opcode in (OP_BINARY, OP_TEXT, OP_CONT):
                buffer += payload
                if fin:
                    return buffer
                continue
            raise WebSocketError(f"unexpected opcode 0x{opcode:X}")

    async def send(self, payload: bytes) -> None:
        await self._send_raw(OP_BINARY, payload)

    async def _send_raw(self, opcode: int, payload: bytes) -> None:
        self._writer.write(encode_frame(opcode, payload, mask=self._client_side))
        await self._writer.drain()

    async def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._writer.write(encode_frame(OP_CLOSE, b"", mask=self._client_side))
                await self._writer.drain()
            except ConnectionError:
                pass
        self._writer.close()


async def client_handshake(
    reader: asyncio.StreamReader, writer: asyncio.StreamWriter, host: str, path: str = "/ws"
) -> WebSocketConnection:
    """Perform the client side of the upgrade. For tests."""
    key = base64.b64encode(os.urandom(16)).decode("ascii")
    writer.write(
        (
            f"GET {path} HTTP/1.1\r\n"
            f"Host: {host}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n"
            "\r\n"
        ).encode("ascii")
    )
    await writer.drain()
    status = await reader.readline()
    if b"101" not in status:
        raise WebSocketError(f"upgrade refused: {status!r}")
    expected = accept_key(key)
    accepted = None
    while True:
        line = await reader.readline()
        if line in (b"\r\n", b"\n", b""):
            break
        name, _, value = line.decode("ascii").partition(":")
        if name.strip().lower() == "sec-websocket-accept":
            accepted = value.strip()
    if accepted != expected:
        raise WebSocketError("bad Sec-WebSocket-Accept")
    return WebSocketConnection(reader, writer, client_side=True)
