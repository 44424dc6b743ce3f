"""Live HTTP node harness for multi-node and CLI tests."""

from __future__ import annotations

import socket
import threading
import time

import httpx
import uvicorn

from medichain.api import create_app
from medichain.config import NodeConfig
from medichain.node import Node


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TranscriptMiddleware:
    """Raw ASGI tap recording request/response bodies per path."""

    def __init__(self, app, log: list):
        self.app = app
        self.log = log

    async def __call__(self, scope, receive, send):
        if scope["type"] != "http":
            return await self.app(scope, receive, send)
        incoming: list[bytes] = []
        outgoing: list[bytes] = []

        async def receive_tap():
            message = await receive()
            if message["type"] == "http.request":
                incoming.append(message.get("body", b""))
            return message

        async def send_tap(message):
            if message["type"] == "http.response.body":
                outgoing.append(message.get("body", b""))
            await send(message)

        try:
            await self.app(scope, receive_tap, send_tap)
        finally:
            self.log.append({
                "path": scope["path"],
                "request": b"".join(incoming),
                "response": b"".join(outgoing),
            })


class LiveNode:
    """A node served over real HTTP in a daemon thread."""

    def __init__(self, data_dir, difficulty_bits=8, dev_mode=True, peers=(),
                 record_transcript=False, automine_interval=None, clock=time.time):
        self.port = free_port()
        self.config = NodeConfig(
            listen_port=self.port,
            data_dir=str(data_dir),
            difficulty_bits=difficulty_bits,
            dev_mode=dev_mode,
            peers=list(peers),
            automine_interval=automine_interval,
        )
        self.node = Node(self.config, clock=clock)
        self.node.startup_replay()
        self.node.start_automine()
        self.transcript: list[dict] = []
        app = create_app(self.node)
        if record_transcript:
            app = TranscriptMiddleware(app, self.transcript)
        uv_config = uvicorn.Config(app, host="127.0.0.1", port=self.port,
                                   log_level="error")
        self.server = uvicorn.Server(uv_config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def start(self, timeout=10.0):
        self.thread.start()
        deadline = time.time() + timeout
        while time.time() < deadline:
            try:
                response = httpx.get(f"{self.url}/health", timeout=1.0)
                if response.status_code == 200:
                    return self
            except httpx.HTTPError:
                pass
            time.sleep(0.02)
        raise RuntimeError("node did not come up in time")

    def stop(self):
        self.node.stop_automine()
        self.server.should_exit = True
        self.thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
