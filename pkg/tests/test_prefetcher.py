"""Pointer-chase prefetcher: directed timing, prefetch issue, invalidation,
duplicate suppression, and drop behavior."""

import io

import pytest

from chasesim import (MemRequest, MsgKind, PointerChasePrefetcher,
                      agu_next_address, build_prefetcher_testbench,
                      PREFETCH_OPAQUE, DEMAND_OPAQUE)
from chasesim.messages import set_word_in_line, word_bytes
from chasesim.prefetcher import PrefetchFsm

from conftest import run_to_responses

# pf index bits are addr[5:4]: 0x1000->0, 0x1010->1, 0x2020->2, 0x2030->3
ADDR_A = 0x1000
ADDR_B = 0x1010
PTR_P = 0x2020
PTR_Q = 0x2030

PAYLOAD_P = bytes(range(16, 32))
PAYLOAD_Q = bytes(range(32, 48))


def line_with_ptr(ptr, offset=0):
    return set_word_in_line(bytes(16), offset, ptr)


def init(addr, data):
    return MemRequest(MsgKind.INIT, addr, data=data)


def rd(addr):
    return MemRequest(MsgKind.READ, addr)


def cp(addr):
    return MemRequest(MsgKind.READCP, addr)


def wr(addr, data):
    return MemRequest(MsgKind.WRITE, addr, data=data)


def prefetch_requests(mem):
    return [r for r in mem.request_log if r.opaque == PREFETCH_OPAQUE]


def drain(sys_, pf, cycles=80):
    """Run long enough for any issued prefetch to reach memory and fill."""
    for _ in range(cycles):
        sys_.step()
    assert not pf.buffer.busy


def test_agu_examples():
    line = set_word_in_line(bytes(16), 0, 0x2020)
    line = set_word_in_line(line, 8, 0x3040)
    assert agu_next_address(line, 0) == 0x2020
    assert agu_next_address(line, 8) == 0x3040
    assert agu_next_address(bytes(16), 12) == 0


def test_tag_check_direct():
    pf = PointerChasePrefetcher()
    hit, idx, off = pf.tag_check(ADDR_A)
    assert (hit, idx, off) == (False, 0, 0)
    e = pf.entries[0]
    e.tag, e.tag_valid = ADDR_A >> 6, True
    assert pf.tag_check(ADDR_A)[0] is True
    assert pf.tag_check(ADDR_A + 8) == (True, 0, 8)  # same line, other word
    assert pf.tag_check(ADDR_A + 0x40)[0] is False   # same index, other tag
    # a pending (data-invalid) entry still tag-hits
    e.pending, e.data_valid = True, False
    assert pf.tag_check(ADDR_A)[0] is True


def test_init_loads_entry_without_memory_traffic():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [init(ADDR_A, PAYLOAD_P)])
    run_to_responses(sys_, sink, 1)
    assert sink.responses()[0].kind is MsgKind.INIT
    assert mem.request_log == []
    assert pf.entries[0].data_valid and pf.entries[0].data == PAYLOAD_P


def test_read_hit_is_single_cycle():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [init(ADDR_A, PAYLOAD_P), rd(ADDR_A + 4)])
    run_to_responses(sys_, sink, 2)
    accept = src.log[1][0]
    resp_cycle, resp = sink.received[1]
    assert resp_cycle - accept == 1
    assert resp.hit is True
    assert resp.data == PAYLOAD_P
    assert pf.stats.read_hits == 1
    assert mem.request_log == []


@pytest.mark.parametrize("latency", [2, 5, 10, 40])
def test_read_miss_adds_exactly_one_cycle(latency):
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        latency, [rd(ADDR_A)], segments=[(ADDR_A, PAYLOAD_P)])
    run_to_responses(sys_, sink, 1)
    accept = src.log[0][0]
    resp_cycle, resp = sink.received[0]
    # tag check costs one cycle; the memory response passes through
    # combinationally on arrival
    assert resp_cycle - accept == latency + 1
    assert resp.hit is False
    assert resp.data == PAYLOAD_P
    assert pf.stats.read_misses == 1


def test_readcp_hit_issues_prefetch():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [init(ADDR_A, line_with_ptr(PTR_P)), cp(ADDR_A)],
        segments=[(PTR_P & ~0xF, PAYLOAD_P)])
    run_to_responses(sys_, sink, 2)
    drain(sys_, pf)
    pfs = prefetch_requests(mem)
    assert len(pfs) == 1
    assert pfs[0].kind is MsgKind.READ
    assert pfs[0].addr == PTR_P & ~0xF  # line-aligned
    assert pf.stats.prefetches_issued == 1
    assert pf.stats.prefetch_fills == 1
    assert pf.entries[2].data == PAYLOAD_P  # PTR_P -> index 2


def test_readcp_miss_prefetches_from_response():
    # the chased line comes from memory; its pointer word (selected by the
    # request's offset bits) still triggers a prefetch
    src_line = line_with_ptr(PTR_P, offset=8)
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        4, [cp(0x3008)], segments=[(0x3000, src_line),
                                   (PTR_P & ~0xF, PAYLOAD_P)])
    run_to_responses(sys_, sink, 1)
    drain(sys_, pf)
    assert [(r.kind, r.opaque) for r in mem.request_log] == [
        (MsgKind.READCP, DEMAND_OPAQUE), (MsgKind.READ, PREFETCH_OPAQUE)]
    assert pf.stats.readcp_misses == 1
    assert pf.stats.prefetch_fills == 1


def test_prefetched_line_hits_later_demand():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [init(ADDR_A, line_with_ptr(PTR_P)), cp(ADDR_A), (rd(PTR_P), 20)],
        segments=[(PTR_P & ~0xF, PAYLOAD_P)])
    run_to_responses(sys_, sink, 3)
    final = sink.responses()[2]
    assert final.hit is True and final.data == PAYLOAD_P
    assert len(prefetch_requests(mem)) == 1
    assert pf.stats.useful_prefetch_hits == 1


def test_null_pointer_suppresses_prefetch():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [init(ADDR_A, line_with_ptr(0)), cp(ADDR_A)])
    run_to_responses(sys_, sink, 2)
    for _ in range(20):
        sys_.step()
    assert prefetch_requests(mem) == []
    assert pf.stats.prefetches_issued == 0
    assert not pf.buffer.busy


def test_plain_read_does_not_prefetch():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        4, [rd(0x3000)], segments=[(0x3000, line_with_ptr(PTR_P))])
    run_to_responses(sys_, sink, 1)
    for _ in range(20):
        sys_.step()
    assert prefetch_requests(mem) == []


def test_prefetch_disabled_issues_nothing():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [init(ADDR_A, line_with_ptr(PTR_P)), cp(ADDR_A)],
        prefetch_enabled=False)
    run_to_responses(sys_, sink, 2)
    for _ in range(20):
        sys_.step()
    assert prefetch_requests(mem) == []
    assert pf.stats.prefetches_issued == 0


def test_write_invalidates_matching_entry():
    new_line = b"\x99" * 16
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        3, [init(ADDR_A, PAYLOAD_P), wr(ADDR_A, new_line), rd(ADDR_A)])
    run_to_responses(sys_, sink, 3)
    w, r = sink.responses()[1:]
    assert w.kind is MsgKind.WRITE
    # the stale entry is gone: the read misses and fetches the fresh line
    assert r.hit is False
    assert r.data == new_line
    assert pf.stats.writes == 1
    assert pf.stats.read_misses == 1
    assert mem.peek_line(ADDR_A) == new_line


def test_write_to_unrelated_line_keeps_entry():
    new_line = b"\x77" * 16
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        3, [init(ADDR_A, PAYLOAD_P), wr(ADDR_B, new_line), rd(ADDR_A)])
    run_to_responses(sys_, sink, 3)
    assert sink.responses()[2].hit is True
    assert sink.responses()[2].data == PAYLOAD_P


def test_demand_waits_on_inflight_fill_without_duplicate():
    # a demand to a line whose prefetch is still in flight waits in the
    # data-invalid state; memory sees exactly one request for that line
    trace = io.StringIO()
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        10, [init(ADDR_A, line_with_ptr(PTR_P)), cp(ADDR_A), rd(PTR_P)],
        segments=[(PTR_P & ~0xF, PAYLOAD_P)], trace=trace)
    run_to_responses(sys_, sink, 3)
    final = sink.responses()[2]
    assert final.hit is True and final.data == PAYLOAD_P
    line_reqs = [r for r in mem.request_log if r.addr == (PTR_P & ~0xF)]
    assert len(line_reqs) == 1 and line_reqs[0].opaque == PREFETCH_OPAQUE
    assert "pf:DI" in trace.getvalue()
    assert pf.stats.useful_prefetch_hits == 1


@pytest.mark.parametrize("delay", range(9))
def test_demand_fill_race_all_alignments(delay):
    # whatever the relative timing of demand arrival and fill return, the
    # demand gets the correct data from a single memory request
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        6, [init(ADDR_A, line_with_ptr(PTR_P)), cp(ADDR_A), (rd(PTR_P), delay)],
        segments=[(PTR_P & ~0xF, PAYLOAD_P)])
    run_to_responses(sys_, sink, 3)
    final = sink.responses()[2]
    assert final.hit is True and final.data == PAYLOAD_P
    assert len([r for r in mem.request_log if r.addr == (PTR_P & ~0xF)]) == 1


def test_second_prefetch_dropped_while_busy():
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        30, [init(ADDR_A, line_with_ptr(PTR_P)),
             init(ADDR_B, line_with_ptr(PTR_Q)),
             cp(ADDR_A), cp(ADDR_B)])
    run_to_responses(sys_, sink, 4)
    drain(sys_, pf)
    assert pf.stats.prefetches_issued == 2
    assert pf.stats.prefetches_dropped == 1
    assert pf.stats.prefetch_fills == 1
    assert len(prefetch_requests(mem)) == 1


def test_invalidated_inflight_fill_is_dropped():
    new_line = b"\x55" * 16
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        10, [init(ADDR_A, line_with_ptr(PTR_P)), cp(ADDR_A),
             wr(PTR_P, new_line), (rd(PTR_P), 25)],
        segments=[(PTR_P & ~0xF, PAYLOAD_P)])
    run_to_responses(sys_, sink, 4)
    final = sink.responses()[3]
    # the write killed the claimed entry; its fill must not resurrect stale
    # data, so the read misses and sees the written line
    assert final.hit is False
    assert final.data == new_line
    assert pf.stats.prefetches_issued == 1
    assert pf.stats.prefetch_fills == 0
    assert pf.stats.prefetches_dropped == 1
    assert not pf.buffer.busy


def test_stall_mem_when_sink_not_ready():
    trace = io.StringIO()
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        5, [rd(ADDR_A)], sink_delays=[15],
        segments=[(ADDR_A, PAYLOAD_P)], trace=trace)
    run_to_responses(sys_, sink, 1)
    assert sink.responses()[0].data == PAYLOAD_P
    assert "pf:SM" in trace.getvalue()


def test_issue_accounting_invariant():
    # issued prefetches are exactly fills + drops once the buffer drains
    sys_, src, sink, pf, mem = build_prefetcher_testbench(
        7, [init(ADDR_A, line_with_ptr(PTR_P)),
            init(ADDR_B, line_with_ptr(PTR_Q)),
            cp(ADDR_A), (cp(ADDR_B), 3), (cp(ADDR_A), 3)],
        segments=[(PTR_P & ~0xF, PAYLOAD_P), (PTR_Q & ~0xF, PAYLOAD_Q)])
    run_to_responses(sys_, sink, 5)
    drain(sys_, pf)
    s = pf.stats
    assert s.prefetches_issued == s.prefetch_fills + s.prefetches_dropped
