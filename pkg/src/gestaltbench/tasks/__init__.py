"""Task registry: every generatable (task, round) with its oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import DataError
from ..oracles import (
    OracleVerdict,
    oracle_common_fate,
    oracle_count,
    oracle_global_sym,
    oracle_local_sym,
    oracle_type_count,
)
from ..sample import Sample
from . import common_fate, counting, symmetry_global, symmetry_local


@dataclass(frozen=True)
class RoundDef:
    task: str
    round: str
    gen: Callable[[np.random.Generator, int], Sample]
    oracle: Callable[[np.ndarray], OracleVerdict]
    note: str = ""


def _sym_oracle(img) -> OracleVerdict:
    return oracle_global_sym(img, tol=0.0)


def _fate_oracle(img) -> OracleVerdict:
    return oracle_common_fate(img, angle_tol=5.0)


ROUNDS: dict[tuple[str, str], RoundDef] = {}


def _register(task: str, round_id: str, gen, oracle, note: str = "") -> None:
    ROUNDS[(task, round_id)] = RoundDef(task, round_id, gen, oracle, note)


_register("symmetry_global", "a1", symmetry_global.gen_a1, _sym_oracle,
          "base polygons, mirror completion")
_register("symmetry_global", "c1", symmetry_global.gen_c1, _sym_oracle,
          "fresh draw from the a1 distribution")
_register("symmetry_global", "d1a1", symmetry_global.gen_round_d1, _sym_oracle,
          "erase / mirror operator over a1")
_register("symmetry_global", "d2a2", symmetry_global.gen_round_d2, _sym_oracle,
          "rescale / add-shape operator over symmetric a2")
_register("symmetry_global", "d3a3", symmetry_global.gen_round_d3, _sym_oracle,
          "multi-pair operator over symmetric a3")
_register("symmetry_global", "a4", symmetry_global.gen_a4, _sym_oracle,
          "triangle/square/ball pair placements")
_register("symmetry_global", "c4", symmetry_global.gen_c4, _sym_oracle,
          "hexagram/F4/F2 pair placements")

_register("symmetry_local", "train", symmetry_local.gen_train, oracle_local_sym)
_register("symmetry_local", "del1", symmetry_local.deliberate_local_1,
          oracle_local_sym, "new kinds; broken symmetric polygons")
_register("symmetry_local", "del2", symmetry_local.deliberate_local_2,
          oracle_local_sym, "train pool at sizes 40-45")

for _s in (1, 2, 3):
    _register("counting", f"count{_s}", counting.gen_count_train(_s), oracle_count)
    _register("counting", f"count{_s}_del1", counting.deliberate_count_1(_s),
              oracle_count, "hexagram/F4/F2 pool")
    _register("counting", f"count{_s}_del2", counting.deliberate_count_2(_s),
              oracle_count, "sizes 30-40")


def _types_oracle(img) -> OracleVerdict:
    return oracle_type_count(img, rotation_sweep=False)


for _r in counting.TYPE_VARIANTS:
    _register("types", _r, counting.gen_types_round(_r), _types_oracle)

for _r in common_fate.FATE_ROUNDS:
    _register("common_fate", _r, common_fate.gen_fate_round(_r), _fate_oracle)


def get_round(task: str, round_id: str) -> RoundDef:
    try:
        return ROUNDS[(task, round_id)]
    except KeyError:
        known = sorted(r for t, r in ROUNDS if t == task)
        if known:
            raise DataError(f"unknown round {round_id!r} for task {task!r}; "
                            f"have {known}") from None
        raise DataError(f"unknown task {task!r}") from None


def rounds_for_task(task: str) -> list[RoundDef]:
    out = [d for (t, _), d in ROUNDS.items() if t == task]
    if not out:
        raise DataError(f"unknown task {task!r}")
    return out


def task_names() -> list[str]:
    return sorted({t for t, _ in ROUNDS})
