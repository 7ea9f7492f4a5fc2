"""Message formats and address arithmetic shared by cache, prefetcher and memory.

All channels in the simulated system carry ``MemRequest`` / ``MemResponse``
records. Lines are 16 bytes; words within a line are stored in little-endian
word order (word 0 occupies byte offsets 0-3), which matches the node-layout
convention that a node's next pointer sits in its first word.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

LINE_BYTES = 16
WORD_BYTES = 4
WORDS_PER_LINE = LINE_BYTES // WORD_BYTES

ZERO_LINE = bytes(LINE_BYTES)


class MsgKind(enum.Enum):
    """Request/response kinds. String values are the trace mnemonics."""

    INIT = "in"
    READ = "rd"
    WRITE = "wr"
    READCP = "cp"


@dataclass(frozen=True)
class MemRequest:
    kind: MsgKind
    addr: int
    opaque: int = 0
    length: int = 0  # bytes requested; 0 encodes full line width
    data: bytes = b""

    def __post_init__(self):
        if not 0 <= self.addr < 2**32:
            raise ValueError(f"address out of 32-bit range: {self.addr:#x}")
        if self.addr % WORD_BYTES != 0:
            raise ValueError(f"misaligned request address: {self.addr:#x}")
        if not 0 <= self.opaque < 256:
            raise ValueError(f"opaque field out of 8-bit range: {self.opaque}")

    def __str__(self):
        s = f"{self.kind.value} {self.addr:08x} op={self.opaque:02x}"
        if self.data:
            s += f" data={self.data.hex()}"
        return s


@dataclass(frozen=True)
class MemResponse:
    kind: MsgKind
    opaque: int
    data: bytes = b""
    hit: bool = False

    def __str__(self):
        s = f"{self.kind.value} op={self.opaque:02x}"
        if self.data:
            s += f" data={self.data.hex()}"
        s += f" hit={int(self.hit)}"
        return s


@dataclass(frozen=True)
class AddrGeometry:
    offset_bits: int
    index_bits: int

    @property
    def tag_bits(self) -> int:
        return 32 - self.offset_bits - self.index_bits

    @property
    def num_indices(self) -> int:
        return 1 << self.index_bits


# 256 B direct-mapped cache with 16 B lines: 4 offset, 4 index, 24 tag bits.
CACHE_GEOMETRY = AddrGeometry(offset_bits=4, index_bits=4)
# 4-entry prefetch buffer with 16 B lines: 4 offset, 2 index, 26 tag bits.
PREFETCH_GEOMETRY = AddrGeometry(offset_bits=4, index_bits=2)


def split_address(addr: int, geo: AddrGeometry) -> tuple[int, int, int]:
    """Split a 32-bit byte address into (tag, index, offset) fields."""
    offset = addr & ((1 << geo.offset_bits) - 1)
    index = (addr >> geo.offset_bits) & ((1 << geo.index_bits) - 1)
    tag = addr >> (geo.offset_bits + geo.index_bits)
    return tag, index, offset


def join_address(tag: int, index: int, offset: int, geo: AddrGeometry) -> int:
    """Inverse of split_address."""
    return (tag << (geo.offset_bits + geo.index_bits)) | (index << geo.offset_bits) | offset


def line_base(addr: int) -> int:
    """16-byte-aligned base of the line containing addr."""
    return addr & ~(LINE_BYTES - 1)


def word_in_line(line: bytes, offset: int) -> int:
    """32-bit word at the given byte offset of a 16-byte line."""
    assert offset % WORD_BYTES == 0, f"misaligned word offset {offset}"
    assert 0 <= offset < LINE_BYTES
    return int.from_bytes(line[offset:offset + WORD_BYTES], "little")


def set_word_in_line(line: bytes, offset: int, value: int) -> bytes:
    """Copy of line with the word at the given byte offset replaced."""
    assert offset % WORD_BYTES == 0 and 0 <= offset < LINE_BYTES
    buf = bytearray(line)
    buf[offset:offset + WORD_BYTES] = value.to_bytes(WORD_BYTES, "little")
    return bytes(buf)


def word_bytes(value: int) -> bytes:
    return (value & 0xFFFFFFFF).to_bytes(WORD_BYTES, "little")


def word_value(data: bytes) -> int:
    return int.from_bytes(data[:WORD_BYTES], "little")
