"""Pointer-chase prefetch buffer sitting between cache and memory.

Four entries of {26-bit tag, tag-valid, data-valid, 16-byte line}. On
read-cp traffic the address generation unit extracts the next-node pointer
from the serviced line and a single buffer address register issues one
outstanding prefetch (opaque=1) for it. Separate tag/data valid bits let a
demand to a line whose fill is still in flight wait instead of re-requesting.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .kernel import Component
from .messages import (PREFETCH_GEOMETRY, ZERO_LINE, MemRequest, MemResponse,
                       MsgKind, line_base, split_address, word_in_line)

NUM_ENTRIES = PREFETCH_GEOMETRY.num_indices

DEMAND_OPAQUE = 0    # forwarded cache requests
PREFETCH_OPAQUE = 1  # buffer-to-memory prefetch requests


def agu_next_address(line: bytes, offset: int) -> int:
    """Next-node pointer: the word of the serviced line selected by the
    request's offset (a node's first word is its next pointer)."""
    return word_in_line(line, offset)


@dataclass
class PrefetchEntry:
    tag: int = 0
    tag_valid: bool = False
    data_valid: bool = False
    data: bytes = ZERO_LINE
    pending: bool = False     # claimed at issue time, fill still in flight
    prefetched: bool = False  # filled by prefetch (False for init-loaded)
    used: bool = False        # demanded at least once since fill


@dataclass
class BufferAddressRegister:
    next_addr: int = 0
    busy: bool = False  # at most one prefetch outstanding


class PrefetchFsm(enum.Enum):
    IDLE = "I"
    TAG_CHECK = "TC"
    INIT = "IN"
    PUSH_NEXT = "PN"
    BUFFER_TO_MEM = "BM"
    WAIT_MEM = "WM"
    STALL_MEM = "SM"
    WAIT_DATA_INVALID = "DI"


@dataclass
class PrefetchStats:
    read_hits: int = 0
    readcp_hits: int = 0
    read_misses: int = 0
    readcp_misses: int = 0
    writes: int = 0
    prefetches_issued: int = 0
    prefetches_dropped: int = 0
    prefetch_fills: int = 0
    useful_prefetch_hits: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


class PointerChasePrefetcher(Component):
    name = "pf"

    def __init__(self, prefetch_enabled: bool = True):
        super().__init__()
        # prefetch_enabled=False is a fault-injection knob for mutation tests
        self.prefetch_enabled = prefetch_enabled
        self.entries = [PrefetchEntry() for _ in range(NUM_ENTRIES)]
        self.buffer = BufferAddressRegister()
        self.state = PrefetchFsm.IDLE
        self.req: MemRequest | None = None
        # push-next source: data array (hit) or latched memory response (miss)
        self.push_from_resp = False
        self.push_offset = 0
        self.push_index = 0
        self.resp_line = ZERO_LINE
        self.stats = PrefetchStats()
        # ports
        self.cache_req = None
        self.cache_resp = None
        self.mem_req = None
        self.mem_resp = None

    # -- combinational helpers --

    def tag_check(self, addr: int) -> tuple[bool, int, int]:
        """Hit iff the indexed entry's tag is valid and matches; hit is true
        even when the data is still pending (the FSM then waits)."""
        tag, idx, off = split_address(addr, PREFETCH_GEOMETRY)
        e = self.entries[idx]
        return (e.tag_valid and e.tag == tag), idx, off

    def _lookup(self, addr, fill):
        """Entry view with an arriving fill applied combinationally, so a
        same-cycle demand to the filling line sees fresh data."""
        tag, idx, off = split_address(addr, PREFETCH_GEOMETRY)
        e = self.entries[idx]
        hit = e.tag_valid and e.tag == tag
        line, dvalid = e.data, e.data_valid
        if fill is not None and self.buffer.busy:
            ftag, fidx, _ = split_address(self.buffer.next_addr, PREFETCH_GEOMETRY)
            if fidx == idx and e.tag_valid and e.tag == ftag and e.pending and hit:
                line, dvalid = fill.data, True
        return hit, idx, off, line, dvalid

    def eval(self):
        self.cache_resp.clear()
        self.mem_req.clear()
        incoming = self.mem_resp.peek()
        fill = incoming if (incoming is not None
                            and incoming.opaque == PREFETCH_OPAQUE) else None
        mresp_rdy = fill is not None  # fills are always drained
        creq_rdy = False
        st = self.state
        if st is PrefetchFsm.IDLE:
            creq_rdy = True
        elif st is PrefetchFsm.TAG_CHECK:
            req = self.req
            if req.kind is MsgKind.INIT:
                pass
            elif req.kind is MsgKind.WRITE:
                self.mem_req.send(MemRequest(MsgKind.WRITE, req.addr,
                                             DEMAND_OPAQUE, data=req.data))
            else:
                hit, _, _, line, dvalid = self._lookup(req.addr, fill)
                if hit and dvalid:
                    self.cache_resp.send(
                        MemResponse(req.kind, req.opaque, line, hit=True))
                    if req.kind is MsgKind.READ:
                        # single-cycle hit: accept the next request as the
                        # response drains
                        creq_rdy = self.cache_resp.rdy
                elif hit:
                    pass  # pending fill: wait, never re-request
                else:
                    self.mem_req.send(MemRequest(req.kind, req.addr, DEMAND_OPAQUE))
        elif st is PrefetchFsm.INIT:
            self.cache_resp.send(MemResponse(MsgKind.INIT, self.req.opaque))
            creq_rdy = self.cache_resp.rdy
        elif st is PrefetchFsm.WAIT_DATA_INVALID:
            hit, _, _, line, dvalid = self._lookup(self.req.addr, fill)
            if hit and dvalid:
                self.cache_resp.send(
                    MemResponse(self.req.kind, self.req.opaque, line, hit=True))
        elif st is PrefetchFsm.BUFFER_TO_MEM:
            self.mem_req.send(MemRequest(MsgKind.READ, line_base(self.buffer.next_addr),
                                         PREFETCH_OPAQUE))
            creq_rdy = self.mem_req.rdy
        elif st in (PrefetchFsm.WAIT_MEM, PrefetchFsm.STALL_MEM):
            if incoming is not None and incoming.opaque == DEMAND_OPAQUE:
                # forward the demand response combinationally; flow control
                # passes through (memory held while the cache is not ready)
                self.cache_resp.send(MemResponse(
                    incoming.kind, self.req.opaque, incoming.data, hit=False))
                mresp_rdy = self.cache_resp.rdy
        self.cache_req.set_rdy(creq_rdy)
        self.mem_resp.set_rdy(mresp_rdy)

    def tick(self):
        got = self.mem_resp.recv()
        if got is not None and got.opaque == PREFETCH_OPAQUE:
            self._apply_fill(got)
            got = None
        st = self.state
        if st is PrefetchFsm.IDLE:
            self._next_or_idle()
        elif st is PrefetchFsm.TAG_CHECK:
            self._tick_tag_check()
        elif st is PrefetchFsm.INIT:
            if self.cache_resp.took():
                req = self.req
                tag, idx, _ = split_address(req.addr, PREFETCH_GEOMETRY)
                data = (req.data + ZERO_LINE)[:16]
                self.entries[idx] = PrefetchEntry(tag=tag, tag_valid=True,
                                                  data_valid=True, data=data)
                self._next_or_idle()
        elif st is PrefetchFsm.WAIT_DATA_INVALID:
            if self.cache_resp.took():
                _, idx, off = split_address(self.req.addr, PREFETCH_GEOMETRY)
                self._count_hit(self.req.kind, self.entries[idx])
                if self.req.kind is MsgKind.READCP:
                    self.push_from_resp = False
                    self.push_index = idx
                    self.push_offset = off
                    self.state = PrefetchFsm.PUSH_NEXT
                else:
                    self.state = PrefetchFsm.IDLE
        elif st is PrefetchFsm.PUSH_NEXT:
            self._tick_push_next()
        elif st is PrefetchFsm.BUFFER_TO_MEM:
            if self.mem_req.took():
                self.buffer.busy = True
                self._next_or_idle()
        elif st in (PrefetchFsm.WAIT_MEM, PrefetchFsm.STALL_MEM):
            if got is not None:
                assert got.opaque == DEMAND_OPAQUE
                if (self.req.kind is MsgKind.READCP and not self.buffer.busy
                        and self.prefetch_enabled):
                    self.resp_line = got.data
                    self.push_from_resp = True
                    self.push_offset = split_address(self.req.addr,
                                                     PREFETCH_GEOMETRY)[2]
                    self.state = PrefetchFsm.PUSH_NEXT
                else:
                    self.state = PrefetchFsm.IDLE
            else:
                pending = self.mem_resp.peek()
                if (st is PrefetchFsm.WAIT_MEM and pending is not None
                        and pending.opaque == DEMAND_OPAQUE):
                    self.state = PrefetchFsm.STALL_MEM

    def _tick_tag_check(self):
        req = self.req
        if req.kind is MsgKind.INIT:
            self.state = PrefetchFsm.INIT
            return
        if req.kind is MsgKind.WRITE:
            if self.mem_req.took():
                self.stats.writes += 1
                hit, idx, _ = self.tag_check(req.addr)
                if hit:
                    # invalidate before forwarding so no stale data survives
                    e = self.entries[idx]
                    e.tag_valid = e.data_valid = e.pending = False
                self.state = PrefetchFsm.WAIT_MEM
            return
        hit, idx, off = self.tag_check(req.addr)
        e = self.entries[idx]
        if hit and e.data_valid:
            if self.cache_resp.took():
                self._count_hit(req.kind, e)
                if req.kind is MsgKind.READCP:
                    self.push_from_resp = False
                    self.push_index = idx
                    self.push_offset = off
                    self.state = PrefetchFsm.PUSH_NEXT
                else:
                    self._next_or_idle()
        elif hit:
            self.state = PrefetchFsm.WAIT_DATA_INVALID
        else:
            if self.mem_req.took():
                if req.kind is MsgKind.READ:
                    self.stats.read_misses += 1
                else:
                    self.stats.readcp_misses += 1
                self.state = PrefetchFsm.WAIT_MEM

    def _tick_push_next(self):
        line = self.resp_line if self.push_from_resp else self.entries[self.push_index].data
        nxt = agu_next_address(line, self.push_offset)
        self.state = PrefetchFsm.IDLE
        if nxt == 0 or not self.prefetch_enabled:
            return  # null next pointer: prefetch suppressed
        self.stats.prefetches_issued += 1
        if self.buffer.busy:
            self.stats.prefetches_dropped += 1
            return
        self.buffer.next_addr = nxt
        tag, idx, _ = split_address(nxt, PREFETCH_GEOMETRY)
        # claim the entry now so a demand to this line waits instead of
        # duplicating the memory request
        self.entries[idx] = PrefetchEntry(tag=tag, tag_valid=True,
                                          data_valid=False, pending=True,
                                          prefetched=True)
        self.state = PrefetchFsm.BUFFER_TO_MEM

    def _apply_fill(self, resp: MemResponse):
        assert self.buffer.busy, "prefetch fill with no prefetch outstanding"
        tag, idx, _ = split_address(self.buffer.next_addr, PREFETCH_GEOMETRY)
        e = self.entries[idx]
        if e.tag_valid and e.tag == tag and e.pending:
            e.data = resp.data
            e.data_valid = True
            e.pending = False
            self.stats.prefetch_fills += 1
        else:
            # entry invalidated (write) since the issue: drop the fill
            self.stats.prefetches_dropped += 1
        self.buffer.busy = False

    def _count_hit(self, kind: MsgKind, entry: PrefetchEntry):
        if kind is MsgKind.READ:
            self.stats.read_hits += 1
        else:
            self.stats.readcp_hits += 1
        if entry.prefetched and not entry.used:
            entry.used = True
            self.stats.useful_prefetch_hits += 1

    def _next_or_idle(self):
        r = self.cache_req.recv()
        if r is not None:
            self.req = r
            self.state = PrefetchFsm.TAG_CHECK
        else:
            self.state = PrefetchFsm.IDLE

    def trace_state(self):
        return self.state.value
