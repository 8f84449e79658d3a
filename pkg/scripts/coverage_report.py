"""Reduction-rule and trace-event coverage of generated programs."""

from __future__ import annotations

import argparse
from collections import Counter
from dataclasses import dataclass

from reachfx.evaluator import RULES
from reachfx.generator import generate_well_typed, size
from reachfx.soundness import validate_run


@dataclass
class CoverageConfig:
    seeds: int = 500
    budget: int = 20
    fuel: int = 10_000


def report(cfg: CoverageConfig) -> Counter:
    rules, events = Counter(), Counter()
    covering = Counter()  # programs that fire each rule at least once
    sizes, steps = [], []
    for seed in range(cfg.seeds):
        t = generate_well_typed(seed, cfg.budget)
        v = validate_run(t, cfg.fuel, stepcheck=False)
        rules.update(v.rules)
        covering.update(set(v.rules))
        events.update(str(e).split()[0] for e in v.trace)
        sizes.append(size(t))
        steps.append(v.steps)
    print(f"{cfg.seeds} programs at budget {cfg.budget}: "
          f"mean size {sum(sizes) / len(sizes):.1f}, mean steps {sum(steps) / len(steps):.1f}")
    print(f"{'rule':<8} {'fired':>7} {'programs':>9}")
    for r in RULES:
        print(f"{r:<8} {rules[r]:>7} {covering[r]:>9}")
    print("events: " + ", ".join(f"{k} {n}" for k, n in sorted(events.items())))
    return rules


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=CoverageConfig.seeds)
    ap.add_argument("--budget", type=int, default=CoverageConfig.budget)
    ap.add_argument("--fuel", type=int, default=CoverageConfig.fuel)
    a = ap.parse_args()
    rules = report(CoverageConfig(a.seeds, a.budget, a.fuel))
    return 0 if all(rules[r] for r in RULES) else 1


if __name__ == "__main__":
    raise SystemExit(main())
