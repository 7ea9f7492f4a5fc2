"""Does spatial locality dilute the prefetcher's advantage?

With two 8-byte nodes packed per 16-byte line, the traversal's footprint
halves and plain caching already captures part of the reuse, so the
prefetcher's relative speedup drops compared to one node per line.
"""

from chasesim import make_config, run_experiment

print(f"{'latency':>8} {'1 node/line':>12} {'2 nodes/line':>13}")
for latency in (10, 20, 40):
    speedups = {}
    for npl in (1, 2):
        base = run_experiment(make_config("baseline", latency, "traversal",
                                          nodes=64, nodes_per_line=npl, gap=12))
        alt = run_experiment(make_config("alternate", latency, "traversal",
                                         nodes=64, nodes_per_line=npl, gap=12))
        speedups[npl] = base.cycles / alt.cycles
    print(f"{latency:>8} {speedups[1]:>11.3f}x {speedups[2]:>12.3f}x")

print("\nsparser layouts (1 node/line) benefit more from prefetching.")
