"""Main memory: a magic backing store behind a fixed-latency inelastic pipeline.

The pipeline accepts one request per cycle while unstalled and returns
responses in order, each exactly ``latency`` cycles after acceptance. When
the head response is not accepted downstream, no pipeline entry advances.
"""

from __future__ import annotations

from collections import deque

from .kernel import Component, ConfigurationError
from .messages import (LINE_BYTES, WORD_BYTES, ZERO_LINE, MemRequest,
                       MemResponse, MsgKind, line_base)


class PipelinedMemory(Component):
    name = "mem"

    def __init__(self, latency: int):
        super().__init__()
        if latency < 1:
            raise ConfigurationError("memory latency must be >= 1 cycle")
        self.latency = latency
        # sparse map: 16-byte-aligned address -> 16-byte line
        self.store: dict[int, bytes] = {}
        # in-flight entries: [request, remaining-cycles]
        self.pipeline: deque[list] = deque()
        self.request_log: list[MemRequest] = []
        # ports
        self.req = None
        self.resp = None

    # -- backing-store access (zero-time, used by loaders and oracles) --

    def load_image(self, segments):
        """Install (addr, bytes) segments; overlapping segments: later wins."""
        for addr, data in segments:
            if addr % WORD_BYTES != 0:
                raise ConfigurationError(f"segment address misaligned: {addr:#x}")
            self._write_bytes(addr, data)

    def poke_line(self, addr: int, data: bytes):
        assert len(data) == LINE_BYTES
        self.store[line_base(addr)] = bytes(data)

    def peek_line(self, addr: int) -> bytes:
        return self.store.get(line_base(addr), ZERO_LINE)

    def _write_bytes(self, addr: int, data: bytes):
        pos = 0
        while pos < len(data):
            base = line_base(addr + pos)
            off = (addr + pos) - base
            n = min(LINE_BYTES - off, len(data) - pos)
            buf = bytearray(self.store.get(base, ZERO_LINE))
            buf[off:off + n] = data[pos:pos + n]
            self.store[base] = bytes(buf)
            pos += n

    # -- cycle behavior --

    def eval(self):
        self.resp.clear()
        head_due = bool(self.pipeline) and self.pipeline[0][1] == 1
        if head_due:
            self.resp.send(self._response(self.pipeline[0][0]))
        stalled = head_due and not self.resp.rdy
        self.req.set_rdy(not stalled)

    def tick(self):
        if self.pipeline:
            if self.pipeline[0][1] == 1:
                if self.resp.took():
                    self.pipeline.popleft()
                    for entry in self.pipeline:
                        entry[1] -= 1
                # else: head stalled, nothing advances
            else:
                for entry in self.pipeline:
                    entry[1] -= 1
        r = self.req.recv()
        if r is not None:
            self.request_log.append(r)
            if r.kind is MsgKind.WRITE:
                # writes are full-line; applied at acceptance so later reads
                # in the pipeline observe them (read-your-writes)
                assert len(r.data) == LINE_BYTES, "memory writes must be full-line"
                self.store[line_base(r.addr)] = r.data
            self.pipeline.append([r, self.latency])

    def _response(self, req: MemRequest) -> MemResponse:
        if req.kind is MsgKind.WRITE:
            return MemResponse(MsgKind.WRITE, req.opaque)
        return MemResponse(req.kind, req.opaque, self.peek_line(req.addr), hit=False)

    def trace_state(self):
        return f"p{len(self.pipeline)}"


def dump_image(store: dict[int, bytes]) -> str:
    """Render a backing store in the memory-image file format."""
    lines = [f"{addr:08x}: {data.hex()}" for addr, data in sorted(store.items())]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_image(text: str) -> dict[int, bytes]:
    """Parse lines of ``<hex-addr>: <32 hex digits>``; '#' comments allowed."""
    store = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            addr_s, data_s = line.split(":")
            addr = int(addr_s, 16)
            data = bytes.fromhex(data_s.strip())
        except ValueError as e:
            raise ConfigurationError(f"bad image line {lineno}: {raw!r}") from e
        if addr % LINE_BYTES != 0 or len(data) != LINE_BYTES:
            raise ConfigurationError(f"bad image line {lineno}: {raw!r}")
        store[addr] = data
    return store
