"""Valid/ready channels and the deterministic two-phase cycle loop.

Every cycle has two phases. In the settle phase each component's
combinational ``eval`` runs repeatedly until channel val/rdy signals reach a
fixpoint (bounded iteration; a combinational loop aborts with a diagnostic).
In the commit phase every channel where val and rdy are both asserted
transfers exactly one message, and each component's sequential ``tick`` runs
exactly once.
"""

from __future__ import annotations

from typing import Callable

# Deepest combinational val/rdy chain (core-cache-prefetcher-memory and back)
# has fewer than 8 handshake stages.
SETTLE_BOUND = 8


class ConfigurationError(Exception):
    pass


class CombinationalLoopError(Exception):
    pass


class DeadlockError(Exception):
    pass


class Channel:
    """Single-message val/rdy channel. Capacity 1, no queuing."""

    __slots__ = ("name", "msg", "val", "rdy", "_xfer", "_xfer_msg", "transfers")

    def __init__(self, name: str = "chan"):
        self.name = name
        self.msg = None
        self.val = False
        self.rdy = False
        self._xfer = False
        self._xfer_msg = None
        self.transfers = 0

    # -- producer side, settle phase --
    def send(self, msg):
        self.msg = msg
        self.val = True

    def clear(self):
        self.msg = None
        self.val = False

    # -- consumer side, settle phase --
    def set_rdy(self, rdy):
        self.rdy = bool(rdy)

    def peek(self):
        return self.msg if self.val else None

    # -- commit phase --
    def took(self) -> bool:
        """Producer: was my message accepted this cycle?"""
        return self._xfer

    def recv(self):
        """Consumer: message transferred this cycle, or None."""
        return self._xfer_msg if self._xfer else None

    def _commit(self):
        self._xfer = self.val and self.rdy
        self._xfer_msg = self.msg if self._xfer else None
        if self._xfer:
            self.transfers += 1

    def _finish(self):
        if self._xfer:
            self.msg = None
            self.val = False
        self._xfer = False
        self._xfer_msg = None
        self.rdy = False


class Component:
    """Base role: a combinational eval plus a sequential tick."""

    name = "comp"

    def __init__(self):
        self.system: System | None = None

    def eval(self):
        """Recompute outputs (val/msg on output ports, rdy on input ports).

        Must be idempotent within a cycle and must not mutate state.
        """

    def tick(self):
        """Apply one cycle's sequential state update."""

    def trace_state(self) -> str:
        return "--"


class System:
    """A fully connected set of components advanced in lockstep.

    A system instance is single-threaded during simulation; whole instances
    are self-contained and may run on different threads for sweeps.
    """

    def __init__(self):
        self.components: list[Component] = []
        self.channels: list[Channel] = []
        self.cycle = 0
        self._trace = None

    def add(self, *comps: Component):
        for c in comps:
            c.system = self
            self.components.append(c)
        return comps[0] if len(comps) == 1 else comps

    def connect(self, producer: tuple[Component, str], consumer: tuple[Component, str],
                name: str | None = None) -> Channel:
        """Bind a producer port to a consumer port with a fresh channel."""
        for comp, port in (producer, consumer):
            if not hasattr(comp, port):
                raise ConfigurationError(f"{comp.name} has no port {port!r}")
            if getattr(comp, port) is not None:
                raise ConfigurationError(f"port {comp.name}.{port} already bound")
        pcomp, pport = producer
        ccomp, cport = consumer
        ch = Channel(name or f"{pcomp.name}.{pport}")
        setattr(pcomp, pport, ch)
        setattr(ccomp, cport, ch)
        self.channels.append(ch)
        return ch

    def attach_trace(self, stream):
        """Write one line per cycle: component states plus transfer markers."""
        self._trace = stream

    def step(self):
        prev = None
        for _ in range(SETTLE_BOUND):
            for c in self.components:
                c.eval()
            sig = tuple((ch.val, ch.rdy, ch.msg) for ch in self.channels)
            if sig == prev:
                break
            prev = sig
        else:
            raise CombinationalLoopError(
                f"val/rdy signals did not settle within {SETTLE_BOUND} "
                f"iterations at cycle {self.cycle}")
        for ch in self.channels:
            ch._commit()
        if self._trace is not None:
            self._write_trace()
        for c in self.components:
            c.tick()
        for ch in self.channels:
            ch._finish()
        self.cycle += 1

    def run_until(self, predicate: Callable[[], bool], max_cycles: int = 10_000_000) -> bool:
        """Step until predicate holds. False signals probable deadlock."""
        assert max_cycles > 0
        steps = 0
        while not predicate():
            if steps >= max_cycles:
                return False
            self.step()
            steps += 1
        return True

    def state_summary(self) -> dict[str, str]:
        return {c.name: c.trace_state() for c in self.components}

    def _write_trace(self):
        parts = [f"{self.cycle:8d}"]
        for c in self.components:
            parts.append(f"{c.name}:{c.trace_state():<2}")
        for ch in self.channels:
            if ch._xfer:
                parts.append(f"[{ch.name} {ch.msg}]")
        self._trace.write(" ".join(parts) + "\n")
