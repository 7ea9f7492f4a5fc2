"""Benchmark synthesis: free lists, traversal/insertion/hashtable/hanoi/array
token programs, a flat-memory replay oracle, and the token text format.

All generators are pure functions of their seed: the same parameters always
produce the same memory image and token program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .kernel import ConfigurationError
from .messages import LINE_BYTES, WORD_BYTES, ZERO_LINE, line_base, word_bytes
from .core import Compute, Read, ReadCP, Token, Write, as_generator

# Classical C-library LCG; any full-period generator works here, this one is
# fixed for reproducibility.
LCG_MULT = 1103515245
LCG_INC = 12345
LCG_MOD = 2**31


def lcg_next(state: int) -> int:
    return (LCG_MULT * state + LCG_INC) % LCG_MOD


class Lcg:
    """Tiny seeded PRNG wrapper around lcg_next."""

    def __init__(self, seed: int):
        self.state = seed % LCG_MOD

    def next(self) -> int:
        self.state = lcg_next(self.state)
        return self.state

    def randrange(self, n: int) -> int:
        return self.next() % n


Program = Callable[[], object]  # generator function yielding Tokens


@dataclass
class Workload:
    """A memory image plus a token program, ready to run."""

    name: str
    segments: list[tuple[int, bytes]]
    program: Program
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# free list


@dataclass
class FreeList:
    base: int
    node_size: int
    node_count: int
    seed: int
    nodes_per_line: int
    linkage: list[int]            # traversal order: permutation of node indices
    head: int                     # address of the first chained node (0 if none)
    head_cell_addr: int           # memory word holding the head pointer
    pool: list[int]               # unlinked node addresses (for insertions)
    segments: list[tuple[int, bytes]]

    def node_addr(self, i: int) -> int:
        return self.base + LINE_BYTES + i * self.node_size


def build_free_list(node_count: int, seed: int = 1, nodes_per_line: int = 1,
                    base: int = 0x1000, linked_count: int | None = None,
                    region_bytes: int = 1 << 20) -> FreeList:
    """Array of nodes with seeded pseudo-random linkage (a free list).

    Word 0 of each node holds its successor's address (0 terminates); the
    line at `base` is a head-pointer cell. With nodes_per_line=2, 8-byte
    nodes pack two per cache line (the spatial-locality knob).
    """
    if node_count < 1:
        raise ConfigurationError("node_count must be >= 1")
    if nodes_per_line not in (1, 2):
        raise ConfigurationError("nodes_per_line must be 1 or 2")
    node_size = LINE_BYTES // nodes_per_line
    if LINE_BYTES + node_count * node_size > region_bytes:
        raise ConfigurationError("nodes exceed the address budget")
    linked = node_count if linked_count is None else linked_count
    assert 0 <= linked <= node_count

    rng = Lcg(seed)
    perm = list(range(node_count))
    for i in range(node_count - 1, 0, -1):  # Fisher-Yates
        j = rng.randrange(i + 1)
        perm[i], perm[j] = perm[j], perm[i]

    def addr(i):
        return base + LINE_BYTES + i * node_size

    region = bytearray(LINE_BYTES + node_count * node_size)
    head = addr(perm[0]) if linked > 0 else 0
    region[0:WORD_BYTES] = word_bytes(head)
    succ = {perm[k]: addr(perm[k + 1]) for k in range(linked - 1)}
    for i in range(node_count):
        off = LINE_BYTES + i * node_size
        region[off:off + WORD_BYTES] = word_bytes(succ.get(i, 0))
        for w in range(WORD_BYTES, node_size, WORD_BYTES):
            region[off + w:off + w + WORD_BYTES] = word_bytes(rng.next())
    return FreeList(
        base=base, node_size=node_size, node_count=node_count, seed=seed,
        nodes_per_line=nodes_per_line, linkage=perm, head=head,
        head_cell_addr=base, pool=[addr(i) for i in perm[linked:]],
        segments=[(base, bytes(region))])


# ---------------------------------------------------------------------------
# token programs


def gen_traversal(flist: FreeList, compute_gap: int = 0) -> Program:
    """Chase the list from head to null; each ReadCP's loaded value names the
    next node, with optional Compute cycles between nodes."""

    def program():
        addr = flist.head
        while addr:
            nxt = yield ReadCP(addr)
            if compute_gap:
                yield Compute(compute_gap)
            addr = nxt

    return program


def gen_insertion(flist: FreeList, inserts: int, seed: int) -> Program:
    """Traverse to random positions and splice pool nodes into the list,
    then walk the final list once; with 0 inserts this is a pure traversal."""
    if inserts > len(flist.pool):
        raise ConfigurationError("not enough pool nodes for the requested inserts")
    linked0 = flist.node_count - len(flist.pool)

    def program():
        rng = Lcg(seed)
        length = linked0
        for t in range(inserts):
            new = flist.pool[t]
            pos = rng.randrange(length + 1)
            head = yield Read(flist.head_cell_addr)
            if pos == 0:
                yield Write(new, head)
                yield Write(flist.head_cell_addr, new)
            else:
                cur = head
                for _ in range(pos - 1):
                    cur = yield ReadCP(cur)
                succ = yield ReadCP(cur)
                yield Write(new, succ)
                yield Write(cur, new)
            length += 1
        cur = yield Read(flist.head_cell_addr)
        while cur:
            cur = yield ReadCP(cur)

    return program


def gen_hashtable(buckets: int, keys: int, seed: int, base: int = 0x3000) -> Workload:
    """Bucket array of chain heads plus lookups walking each chain."""
    if buckets < 1:
        raise ConfigurationError("buckets must be >= 1")
    rng = Lcg(seed)
    key_vals = []
    seen = set()
    while len(key_vals) < keys:
        k = rng.next() & 0xFFFFFF
        if k and k not in seen:
            seen.add(k)
            key_vals.append(k)

    nodes_base = base + ((buckets * WORD_BYTES + LINE_BYTES - 1) & ~(LINE_BYTES - 1))
    heads = [0] * buckets
    node_words = []  # (next, key) per node
    for i, k in enumerate(key_vals):
        b = k % buckets
        node_words.append((heads[b], k))
        heads[b] = nodes_base + i * LINE_BYTES

    region = bytearray(nodes_base - base + max(keys, 1) * LINE_BYTES)
    for b, h in enumerate(heads):
        region[b * 4:b * 4 + 4] = word_bytes(h)
    for i, (nxt, k) in enumerate(node_words):
        off = nodes_base - base + i * LINE_BYTES
        region[off:off + 4] = word_bytes(nxt)
        region[off + 4:off + 8] = word_bytes(k)

    # with no inserted keys, lookups still probe (empty) bucket heads
    probe_vals = key_vals or [lcg_next(seed + i) & 0xFFFFFF or 1
                              for i in range(buckets)]

    def program():
        for k in probe_vals:
            b = k % buckets
            ptr = yield Read(base + b * WORD_BYTES)
            while ptr:
                nxt = yield ReadCP(ptr)
                kv = yield Read(ptr + WORD_BYTES)
                yield Compute(1)  # key comparison
                if kv == k:
                    break
                ptr = nxt

    chain_lens = [0] * buckets
    for k in key_vals:
        chain_lens[k % buckets] += 1
    return Workload("hashtable", [(base, bytes(region))], program,
                    meta={"chain_lengths": chain_lens, "keys": key_vals})


def _hanoi_moves(n: int, src: int, dst: int, via: int, out: list):
    if n == 0:
        return
    _hanoi_moves(n - 1, src, via, dst, out)
    out.append((src, dst))
    _hanoi_moves(n - 1, via, dst, src, out)


def gen_hanoi_like(disks: int, base: int = 0x1000, log_base: int = 0x2000) -> Workload:
    """Tiny linked stacks with many revisits: the small-structure pathology.

    One initial pointer chase touches every node once; the 2^disks - 1 moves
    then relink nodes (cache hits) while streaming a move log through cache
    indices disjoint from the node lines, so the prefetcher gets no further
    pointer work but every log miss pays the extra hop.
    """
    if not 1 <= disks <= 10:
        raise ConfigurationError("disks must be in 1..10")

    def node_addr(i):
        return base + i * LINE_BYTES

    hp_addr = base + disks * LINE_BYTES
    region = bytearray((disks + 1) * LINE_BYTES)
    for i in range(disks):
        nxt = node_addr(i + 1) if i + 1 < disks else 0
        region[i * LINE_BYTES:i * LINE_BYTES + 4] = word_bytes(nxt)
        region[i * LINE_BYTES + 4:i * LINE_BYTES + 8] = word_bytes(i + 1)  # disk size
    region[disks * LINE_BYTES:disks * LINE_BYTES + 4] = word_bytes(node_addr(0))

    moves: list[tuple[int, int]] = []
    _hanoi_moves(disks, 0, 2, 1, moves)
    log_slots = list(range(disks + 1, 16))  # cache indices the nodes never use

    def log_addr(m):
        page, slot = divmod(m, len(log_slots))
        return log_base + page * 256 + log_slots[slot] * LINE_BYTES

    def program():
        addr = yield ReadCP(hp_addr)  # the head cell itself holds a pointer
        while addr:
            addr = yield ReadCP(addr)
        pegs = [list(range(disks - 1, -1, -1)), [], []]  # top of stack is last
        for m, (src, dst) in enumerate(moves):
            n = pegs[src].pop()
            yield Read(node_addr(n))  # read the popped node's next pointer
            top = pegs[dst][-1] if pegs[dst] else None
            yield Write(node_addr(n), node_addr(top) if top is not None else 0)
            pegs[dst].append(n)
            yield Write(log_addr(m), m + 1)
            yield Compute(1)

    return Workload("hanoi", [(base, bytes(region))], program,
                    meta={"disks": disks, "moves": len(moves),
                          "node_lines": [node_addr(i) for i in range(disks)]})


def gen_array_kernel(elements: int = 256, gap: int = 2, base: int = 0x4000,
                     seed: int = 1) -> Workload:
    """Dense-array read and write passes with compute gaps; zero ReadCP."""
    rng = Lcg(seed)
    region = bytearray(elements * WORD_BYTES)
    for i in range(elements):
        region[i * 4:i * 4 + 4] = word_bytes(rng.next())

    def program():
        acc = 0
        for i in range(elements):
            v = yield Read(base + i * WORD_BYTES)
            acc = (acc + v) & 0xFFFFFFFF
            if gap:
                yield Compute(gap)
        for i in range(elements):
            yield Write(base + i * WORD_BYTES, (acc + i) & 0xFFFFFFFF)
            if gap:
                yield Compute(gap)

    return Workload("array", [(base, bytes(region))], program,
                    meta={"elements": elements, "gap": gap})


def gen_random_stream(n: int, seed: int, base: int = 0x0000, lines: int = 256,
                      mix: tuple[float, float, float] = (0.5, 0.2, 0.3)) -> Workload:
    """Randomized read/write/read_cp token stream over a bounded region, for
    oracle-equivalence checking. ReadCP values are arbitrary words, so the
    prefetcher chases garbage pointers; coherence must still hold."""
    rng = Lcg(seed)
    region = bytearray(lines * LINE_BYTES)
    for w in range(lines * (LINE_BYTES // WORD_BYTES)):
        region[w * 4:w * 4 + 4] = word_bytes(rng.next())
    r_cut = mix[0]
    w_cut = mix[0] + mix[1]
    tokens: list[Token] = []
    for _ in range(n):
        addr = base + WORD_BYTES * rng.randrange(lines * (LINE_BYTES // WORD_BYTES))
        p = rng.next() / LCG_MOD
        if p < r_cut:
            tokens.append(Read(addr))
        elif p < w_cut:
            tokens.append(Write(addr, rng.next()))
        else:
            tokens.append(ReadCP(addr))
    return Workload("random", [(base, bytes(region))], tokens,
                    meta={"n": n, "seed": seed})


# ---------------------------------------------------------------------------
# flat-memory replay oracle


class FlatMemory:
    """Zero-latency word-addressed reference memory."""

    def __init__(self, segments=()):
        self.words: dict[int, int] = {}
        for addr, data in segments:
            for i in range(0, len(data), WORD_BYTES):
                self.words[addr + i] = int.from_bytes(data[i:i + 4], "little")

    def read_word(self, addr: int) -> int:
        return self.words.get(addr & ~3, 0)

    def write_word(self, addr: int, value: int):
        self.words[addr & ~3] = value & 0xFFFFFFFF

    def lines(self) -> dict[int, bytes]:
        """Non-zero 16-byte lines, for image comparison."""
        out: dict[int, bytearray] = {}
        for addr, val in self.words.items():
            if val == 0:
                continue
            b = out.setdefault(line_base(addr), bytearray(ZERO_LINE))
            b[addr % LINE_BYTES:addr % LINE_BYTES + 4] = word_bytes(val)
        return {a: bytes(d) for a, d in out.items() if d != ZERO_LINE}


def replay_program(program, segments) -> tuple[list[tuple[int, int]], FlatMemory]:
    """Run a token program against flat memory: the independent oracle for
    load values and the final image."""
    flat = FlatMemory(segments)
    gen = as_generator(program)
    loads = []
    value = None
    started = False
    while True:
        try:
            tok = gen.send(value) if started else next(gen)
            started = True
        except StopIteration:
            return loads, flat
        if isinstance(tok, (Read, ReadCP)):
            value = flat.read_word(tok.addr)
            loads.append((tok.addr, value))
        elif isinstance(tok, Write):
            flat.write_word(tok.addr, tok.value)
            value = None
        else:
            value = None


# ---------------------------------------------------------------------------
# token text format: `rd <addr>`, `wr <addr> <val>`, `cp <addr>`, `comp <n>`


def format_program(tokens) -> str:
    out = []
    for tok in tokens:
        if isinstance(tok, Read):
            out.append(f"rd {tok.addr:#010x}")
        elif isinstance(tok, Write):
            out.append(f"wr {tok.addr:#010x} {tok.value:#x}")
        elif isinstance(tok, ReadCP):
            out.append(f"cp {tok.addr:#010x}")
        elif isinstance(tok, Compute):
            out.append(f"comp {tok.cycles}")
        else:
            raise ConfigurationError(f"unknown token {tok!r}")
    return "\n".join(out) + ("\n" if out else "")


def parse_program(text: str) -> list[Token]:
    tokens: list[Token] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "rd":
                tokens.append(Read(int(parts[1], 0)))
            elif parts[0] == "wr":
                tokens.append(Write(int(parts[1], 0), int(parts[2], 0)))
            elif parts[0] == "cp":
                tokens.append(ReadCP(int(parts[1], 0)))
            elif parts[0] == "comp":
                tokens.append(Compute(int(parts[1], 0)))
            else:
                raise ValueError(parts[0])
        except (IndexError, ValueError) as e:
            raise ConfigurationError(f"bad token line {lineno}: {raw!r}") from e
    return tokens
