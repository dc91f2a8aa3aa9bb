"""Seeded generators and exact oracles of the benchmark families."""

from __future__ import annotations

from typing import Any

import numpy as np

from .libsvm import parse_libsvm, read_libsvm, synthetic_libsvm, write_libsvm
from .pc import PcInstance, pc_generate, pc_y_resolvent
from .qvm import QvmInstance, calibrate, qvm_constraint, qvm_generate
from .trr import TrrInstance, trr_load

Instance = QvmInstance | TrrInstance | PcInstance

FAMILIES: dict[str, type[QvmInstance] | type[TrrInstance] | type[PcInstance]] = {
    "qvm": QvmInstance,
    "trr": TrrInstance,
    "pc": PcInstance,
}


def instance_from_arrays(header: dict[str, Any], arrays: dict[str, np.ndarray]) -> Instance:
    family = header.get("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown problem family {family!r}; expected one of {sorted(FAMILIES)}")
    return FAMILIES[family].from_arrays(header, arrays)


__all__ = [
    "FAMILIES",
    "Instance",
    "PcInstance",
    "QvmInstance",
    "TrrInstance",
    "calibrate",
    "instance_from_arrays",
    "parse_libsvm",
    "pc_generate",
    "pc_y_resolvent",
    "qvm_constraint",
    "qvm_generate",
    "read_libsvm",
    "synthetic_libsvm",
    "trr_load",
    "write_libsvm",
]
