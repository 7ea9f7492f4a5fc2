"""Command-line experiment runner.

    chasesim run --topology alternate --latency 5 --workload traversal ...
    chasesim sweep --latencies 2,5,10,20,40 --workloads traversal,array ...

Exit code 0 on success, nonzero on deadlock or per-row failure.
"""

from __future__ import annotations

import argparse
import sys

from .harness import make_config, report, run_experiment, sweep


def _add_workload_opts(p):
    p.add_argument("--nodes", type=int, default=64, help="list length")
    p.add_argument("--nodes-per-line", type=int, choices=(1, 2), default=1)
    p.add_argument("--gap", type=int, default=None,
                   help="compute cycles between memory tokens")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--disks", type=int, default=6, help="hanoi disks")
    p.add_argument("--buckets", type=int, default=16, help="hashtable buckets")
    p.add_argument("--keys", type=int, default=64, help="hashtable keys")
    p.add_argument("--inserts", type=int, default=8, help="insertion count")
    p.add_argument("--elements", type=int, default=256, help="array elements")
    p.add_argument("--max-cycles", type=int, default=10_000_000)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")


def _workload_params(args, name):
    params = {}
    if name in ("traversal", "insertion"):
        params["nodes"] = args.nodes
        params["nodes_per_line"] = args.nodes_per_line
    if name == "traversal" and args.gap is not None:
        params["gap"] = args.gap
    if name == "insertion":
        params["inserts"] = args.inserts
    if name == "hanoi":
        params["disks"] = args.disks
    if name == "hashtable":
        params["buckets"] = args.buckets
        params["keys"] = args.keys
    if name == "array":
        params["elements"] = args.elements
        if args.gap is not None:
            params["gap"] = args.gap
    return params


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="chasesim", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("--topology", choices=("baseline", "alternate"),
                       default="alternate")
    p_run.add_argument("--latency", type=int, default=5)
    p_run.add_argument("--workload", required=True)
    p_run.add_argument("--trace", metavar="FILE", default=None,
                       help="write a per-cycle trace")
    _add_workload_opts(p_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("--latencies", default="2,5,10,20,40")
    p_sweep.add_argument("--workloads", required=True,
                         help="comma-separated workload names")
    p_sweep.add_argument("--topologies", default="baseline,alternate")
    _add_workload_opts(p_sweep)

    args = parser.parse_args(argv)

    if args.cmd == "run":
        cfg = make_config(args.topology, args.latency, args.workload,
                          seed=args.seed, max_cycles=args.max_cycles,
                          **_workload_params(args, args.workload))
        trace = open(args.trace, "w") if args.trace else None
        try:
            stats = run_experiment(cfg, trace=trace)
        finally:
            if trace:
                trace.close()
        sys.stdout.write(report([stats], args.format))
        if not stats.completed:
            sys.stderr.write("deadlock: " + str(stats.deadlock_states) + "\n")
            return 1
        return 0

    latencies = [int(x) for x in args.latencies.split(",") if x]
    names = [x.strip() for x in args.workloads.split(",") if x.strip()]
    topologies = [x.strip() for x in args.topologies.split(",") if x.strip()]
    configs = [
        make_config(topo, lat, name, seed=args.seed, max_cycles=args.max_cycles,
                    **_workload_params(args, name))
        for name in names for lat in latencies for topo in topologies
    ]
    results = sweep(configs)
    sys.stdout.write(report(results, args.format))
    return 0 if all(r.completed for r in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
