"""Watch the prefetcher work, cycle by cycle.

Runs a 4-node traversal with a per-cycle trace: each line shows the
cycle number, every component's FSM state, and any channel transfers
(with the message rendered). Look for the op=01 read issued by the
prefetcher right after each cp response, and the later cp hits that
never reach memory.
"""

import io

from chasesim import build_system, make_config

trace = io.StringIO()
handle = build_system(make_config("alternate", 5, "traversal", nodes=4),
                      trace=trace)
handle.system.run_until(lambda: handle.core.done, 10_000)

print(trace.getvalue())
s = handle.prefetcher.stats
print(f"completed in {handle.system.cycle} cycles")
print(f"prefetches issued={s.prefetches_issued} fills={s.prefetch_fills} "
      f"useful hits={s.useful_prefetch_hits}")
