"""
Speedup against the number of workers
=====================================

Each task burns a fixed amount of GIL-free CPU work, so the speedup
tracks the number of available cores. Results must not depend on the
worker count; ``speedup_study`` checks the moment checksums.
"""
from dataclasses import replace

from splitmc import RunConfig, ToyDigitSquare, run
from splitmc.costs import PriceSheet, estimate_cost, physical_cores
from splitmc.studies import speedup_csv, speedup_study

cores = physical_cores()
config = RunConfig(n_mc=64, n_serial=1, problem=ToyDigitSquare(busy_iterations=20_000_000))
rows = speedup_study(config, sorted({1, 2, 4, cores}))
print(f"{cores} physical core(s)")
print(speedup_csv(rows))

###############################################################################
# Cost of the largest run at an hourly VM price.

prices = PriceSheet(vm_hour_price=0.12, storage_price=0.07, egress_price=0.12)
big = run(replace(config, n_workers=max(r.workers for r in rows)))
print("estimated cost:", estimate_cost(big.timing, big.intermediate_bytes, big.storage_bytes, prices))
