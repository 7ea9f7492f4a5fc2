"""Cycle-level simulator of a core / blocking cache / pointer-chase
prefetcher / pipelined memory system with valid-ready channels."""

from .messages import (AddrGeometry, CACHE_GEOMETRY, LINE_BYTES,
                       PREFETCH_GEOMETRY, MemRequest, MemResponse, MsgKind,
                       join_address, line_base, split_address, word_in_line)
from .kernel import (Channel, CombinationalLoopError, Component,
                     ConfigurationError, System)
from .memory import PipelinedMemory, dump_image, parse_image
from .cache import BlockingCache, CacheFsm
from .prefetcher import (PointerChasePrefetcher, PrefetchFsm, agu_next_address,
                         DEMAND_OPAQUE, PREFETCH_OPAQUE)
from .core import Compute, CoreModel, Read, ReadCP, Write
from .workloads import (FlatMemory, FreeList, Lcg, Workload, build_free_list,
                        format_program, gen_array_kernel, gen_hanoi_like,
                        gen_hashtable, gen_insertion, gen_random_stream,
                        gen_traversal, lcg_next, parse_program, replay_program)
from .harness import (ExperimentConfig, RunStats, SinkReport, TestSink,
                      TestSource, build_prefetcher_testbench, build_system,
                      checking_sink, make_config, make_workload,
                      report, run_experiment, sweep)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
