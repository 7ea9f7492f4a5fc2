"""Abstract in-order core model driven by token programs.

A program is either a static token sequence or a generator function; in the
generator form each Read/ReadCP token's loaded value is sent back into the
generator, so later addresses can depend on earlier load results (the
pointer-chase dependence chain). The core is blocking: one outstanding
memory request, and Compute tokens consume cycles without memory traffic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .kernel import Component
from .messages import MemRequest, MsgKind, word_bytes, word_value


@dataclass(frozen=True)
class Read:
    addr: int


@dataclass(frozen=True)
class Write:
    addr: int
    value: int


@dataclass(frozen=True)
class ReadCP:
    addr: int


@dataclass(frozen=True)
class Compute:
    cycles: int


Token = Union[Read, Write, ReadCP, Compute]


def as_generator(program):
    """Accept a generator function or a plain token iterable."""
    if callable(program):
        return program()

    def gen():
        for tok in program:
            yield tok

    return gen()


class CoreModel(Component):
    name = "core"

    def __init__(self, program):
        super().__init__()
        self._gen = as_generator(program)
        self._started = False
        self._token: Token | None = None
        self._state = "issue"
        self._compute_left = 0
        self.loads: list[tuple[int, int]] = []  # (addr, value) in issue order
        self.done = False
        self._advance(None)
        # ports
        self.mem_req = None
        self.mem_resp = None

    def _advance(self, value):
        while True:
            try:
                if self._started:
                    tok = self._gen.send(value)
                else:
                    tok = next(self._gen)
                    self._started = True
            except StopIteration:
                self.done = True
                self._state = "done"
                return
            if isinstance(tok, Compute):
                if tok.cycles <= 0:
                    value = None
                    continue
                self._compute_left = tok.cycles
                self._state = "compute"
                return
            self._token = tok
            self._state = "issue"
            return

    def _request(self) -> MemRequest:
        tok = self._token
        if isinstance(tok, Read):
            return MemRequest(MsgKind.READ, tok.addr, length=4)
        if isinstance(tok, ReadCP):
            return MemRequest(MsgKind.READCP, tok.addr, length=4)
        return MemRequest(MsgKind.WRITE, tok.addr, length=4, data=word_bytes(tok.value))

    def eval(self):
        self.mem_req.clear()
        if self._state == "issue":
            self.mem_req.send(self._request())
        self.mem_resp.set_rdy(self._state == "wait")

    def tick(self):
        if self._state == "issue":
            if self.mem_req.took():
                self._state = "wait"
        elif self._state == "wait":
            r = self.mem_resp.recv()
            if r is not None:
                if isinstance(self._token, (Read, ReadCP)):
                    value = word_value(r.data)
                    self.loads.append((self._token.addr, value))
                    self._advance(value)
                else:
                    self._advance(None)
        elif self._state == "compute":
            self._compute_left -= 1
            if self._compute_left <= 0:
                self._advance(None)

    def trace_state(self):
        return {"issue": "RQ", "wait": "WT", "compute": "CP", "done": "."}[self._state]
