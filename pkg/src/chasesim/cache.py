"""Direct-mapped blocking cache, write-back write-allocate.

16 lines of 16 bytes (256 B total). Services one core request at a time; on
a miss the original request kind is preserved downstream (write misses
refill with a plain read, read-cp misses stay read-cp so the prefetcher
sees the offset bits).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .kernel import Component
from .messages import (CACHE_GEOMETRY, LINE_BYTES, ZERO_LINE, MemRequest,
                       MemResponse, MsgKind, join_address, set_word_in_line,
                       split_address, word_in_line)

NUM_LINES = CACHE_GEOMETRY.num_indices


@dataclass
class CacheLine:
    tag: int = 0
    valid: bool = False
    dirty: bool = False
    data: bytes = ZERO_LINE


class CacheFsm(enum.Enum):
    IDLE = "I"
    TAG_CHECK = "TC"
    READ_DATA = "RD"
    WRITE_DATA = "WD"
    EVICT_REQ = "ER"
    EVICT_WAIT = "EW"
    REFILL_REQ = "RR"
    REFILL_WAIT = "RW"
    REFILL_UPDATE = "RU"


@dataclass
class CacheStats:
    read_hits: int = 0
    read_misses: int = 0
    write_hits: int = 0
    write_misses: int = 0
    readcp_hits: int = 0
    readcp_misses: int = 0
    evictions: int = 0
    downstream_requests: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(vars(self))


class BlockingCache(Component):
    name = "cache"

    def __init__(self):
        super().__init__()
        self.lines = [CacheLine() for _ in range(NUM_LINES)]
        self.state = CacheFsm.IDLE
        self.req: MemRequest | None = None
        self.was_hit = False
        self.refill_data = ZERO_LINE
        self.victim_addr = 0
        self.victim_data = ZERO_LINE
        self.stats = CacheStats()
        # ports
        self.core_req = None
        self.core_resp = None
        self.mem_req = None
        self.mem_resp = None

    def eval(self):
        self.core_resp.clear()
        self.mem_req.clear()
        st = self.state
        self.core_req.set_rdy(st is CacheFsm.IDLE)
        self.mem_resp.set_rdy(st in (CacheFsm.EVICT_WAIT, CacheFsm.REFILL_WAIT))
        if st is CacheFsm.READ_DATA:
            _, idx, off = split_address(self.req.addr, CACHE_GEOMETRY)
            word = self.lines[idx].data[off:off + 4]
            self.core_resp.send(
                MemResponse(self.req.kind, self.req.opaque, word, hit=self.was_hit))
        elif st is CacheFsm.WRITE_DATA:
            self.core_resp.send(
                MemResponse(MsgKind.WRITE, self.req.opaque, hit=self.was_hit))
        elif st is CacheFsm.EVICT_REQ:
            self.mem_req.send(MemRequest(
                MsgKind.WRITE, self.victim_addr, opaque=0, data=self.victim_data))
        elif st is CacheFsm.REFILL_REQ:
            kind = MsgKind.READCP if self.req.kind is MsgKind.READCP else MsgKind.READ
            self.mem_req.send(MemRequest(kind, self.req.addr, opaque=0))

    def tick(self):
        st = self.state
        if st is CacheFsm.IDLE:
            r = self.core_req.recv()
            if r is not None:
                self.req = r
                self.state = CacheFsm.TAG_CHECK
        elif st is CacheFsm.TAG_CHECK:
            self._tag_check()
        elif st is CacheFsm.EVICT_REQ:
            if self.mem_req.took():
                self.stats.evictions += 1
                self.stats.downstream_requests += 1
                self.state = CacheFsm.EVICT_WAIT
        elif st is CacheFsm.EVICT_WAIT:
            if self.mem_resp.recv() is not None:
                self.state = CacheFsm.REFILL_REQ
        elif st is CacheFsm.REFILL_REQ:
            if self.mem_req.took():
                self.stats.downstream_requests += 1
                self.state = CacheFsm.REFILL_WAIT
        elif st is CacheFsm.REFILL_WAIT:
            r = self.mem_resp.recv()
            if r is not None:
                self.refill_data = r.data
                self.state = CacheFsm.REFILL_UPDATE
        elif st is CacheFsm.REFILL_UPDATE:
            tag, idx, _ = split_address(self.req.addr, CACHE_GEOMETRY)
            self.lines[idx] = CacheLine(tag=tag, valid=True, dirty=False,
                                        data=self.refill_data)
            self.state = (CacheFsm.WRITE_DATA if self.req.kind is MsgKind.WRITE
                          else CacheFsm.READ_DATA)
        elif st is CacheFsm.READ_DATA:
            if self.core_resp.took():
                self.state = CacheFsm.IDLE
        elif st is CacheFsm.WRITE_DATA:
            if self.core_resp.took():
                _, idx, off = split_address(self.req.addr, CACHE_GEOMETRY)
                line = self.lines[idx]
                line.data = set_word_in_line(line.data, off, word_in_line(self.req.data, 0))
                line.dirty = True
                self.state = CacheFsm.IDLE

    def _tag_check(self):
        tag, idx, _ = split_address(self.req.addr, CACHE_GEOMETRY)
        line = self.lines[idx]
        hit = line.valid and line.tag == tag
        self.was_hit = hit
        s = self.stats
        kind = self.req.kind
        if kind is MsgKind.READ:
            s.read_hits += hit
            s.read_misses += not hit
        elif kind is MsgKind.WRITE:
            s.write_hits += hit
            s.write_misses += not hit
        elif kind is MsgKind.READCP:
            s.readcp_hits += hit
            s.readcp_misses += not hit
        if hit:
            self.state = (CacheFsm.WRITE_DATA if kind is MsgKind.WRITE
                          else CacheFsm.READ_DATA)
        elif line.valid and line.dirty:
            self.victim_addr = join_address(line.tag, idx, 0, CACHE_GEOMETRY)
            self.victim_data = line.data
            self.state = CacheFsm.EVICT_REQ
        else:
            self.state = CacheFsm.REFILL_REQ

    def flush_dirty(self, write_line) -> int:
        """Write all dirty lines back via write_line(addr, data); clear dirty.

        Zero-time drain for end-of-run image comparison; cache must be Idle.
        """
        assert self.state is CacheFsm.IDLE, "flush requires an idle cache"
        count = 0
        for idx, line in enumerate(self.lines):
            if line.valid and line.dirty:
                write_line(join_address(line.tag, idx, 0, CACHE_GEOMETRY), line.data)
                line.dirty = False
                count += 1
        return count

    def trace_state(self):
        return self.state.value
