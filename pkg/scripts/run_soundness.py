"""Sweep the soundness harness over several generator budgets.

    python scripts/run_soundness.py --seeds 500 --budgets 10 20 40 --stepcheck
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass, field

from reachfx.generator import GeneratorConfig
from reachfx.soundness import SoundnessConfig, run_soundness


@dataclass
class SweepConfig:
    seeds: int = 500
    budgets: list = field(default_factory=lambda: [10, 20, 40])
    fuel: int = 10_000
    stepcheck: bool = False
    ref_ops: float = 0.4
    applications: float = 0.3
    leaves: float = 0.3


def sweep(cfg: SweepConfig) -> bool:
    gen = GeneratorConfig(ref_ops=cfg.ref_ops, applications=cfg.applications, leaves=cfg.leaves)
    clean = True
    print(f"{'budget':>6} {'programs':>8} {'done':>6} {'fuel':>5} {'stuck':>6} {'preserv':>7} {'secs':>6}")
    for budget in cfg.budgets:
        start = time.perf_counter()
        s = run_soundness(SoundnessConfig(seeds=cfg.seeds, budget=budget, fuel=cfg.fuel,
                                          stepcheck=cfg.stepcheck, generator=gen))
        secs = time.perf_counter() - start
        print(f"{budget:>6} {s.programs:>8} {s.done:>6} {s.out_of_fuel:>5} "
              f"{sum(s.stuck.values()):>6} {s.preservation_failures:>7} {secs:>6.2f}")
        for seed, msg in s.examples[:3]:
            print(f"    seed {seed}: {msg}")
        clean &= s.clean
    return clean


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=SweepConfig.seeds)
    ap.add_argument("--budgets", type=int, nargs="+", default=[10, 20, 40])
    ap.add_argument("--fuel", type=int, default=SweepConfig.fuel)
    ap.add_argument("--stepcheck", action="store_true")
    ap.add_argument("--ref-ops", type=float, default=SweepConfig.ref_ops)
    ap.add_argument("--applications", type=float, default=SweepConfig.applications)
    ap.add_argument("--leaves", type=float, default=SweepConfig.leaves)
    a = ap.parse_args()
    cfg = SweepConfig(a.seeds, a.budgets, a.fuel, a.stepcheck, a.ref_ops, a.applications, a.leaves)
    return 0 if sweep(cfg) else 1


if __name__ == "__main__":
    raise SystemExit(main())
