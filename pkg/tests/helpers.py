"""Shared builders for tests."""

from __future__ import annotations

from pathlib import Path

from reachfx.syntax import FRESH, IntT, QType, Qualifier, Ref, TopT, TypeEnv

INT = QType(IntT())
REF_INT = Ref(IntT())


def q(*atoms, fresh=False) -> Qualifier:
    return Qualifier.of(*atoms, fresh=fresh)


def env_of(graph: dict, ty=TopT()) -> TypeEnv:
    """Environment binding each name at its qualifier, in insertion order."""
    env = TypeEnv()
    for name, (atoms, fresh) in graph.items():
        env = env.with_term(name, QType(ty, Qualifier(frozenset(atoms), fresh)))
    return env


def counter_env() -> TypeEnv:
    return (TypeEnv()
            .with_term("counter", QType(REF_INT, FRESH))
            .with_term("counter2", QType(REF_INT, q("counter"))))


GOLDEN_DIR = Path(__file__).parent / "golden"

# final outcome line of `reachfx run` for each golden-trace program
GOLDEN_OUTCOMES = {
    "double_free": "unit",
    "kill_then_use_other": "1",
    "move_of_dead_raw": "Stuck(MoveOfDead)",
    "move_then_use_destination": "unit",
}


def golden_trace(name: str) -> str:
    return (GOLDEN_DIR / f"{name}.trace").read_text(encoding="utf-8").rstrip("\n")
