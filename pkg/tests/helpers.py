"""Oracles and instance lists shared by the test modules."""
import numpy as np

from clique_apsp.tropical import INF

GRID_SHAPES = {16: "4x4", 32: "4x8", 64: "8x8", 128: "8x16", 256: "16x16"}
FAMILIES = ("path", "star", "grid", "erdos_renyi", "random_geometric")


def family_spec(family: str, n: int, weights: str = "w=1-100") -> str:
    """Generator spec for one of the five benchmark families at size n."""
    if family == "grid":
        return f"grid:{GRID_SHAPES[n]}:{weights}"
    extra = {"erdos_renyi": "0.1:", "random_geometric": "0.2:"}.get(family, "")
    return f"{family}:{n}:{extra}{weights}"


def dense_product(a, b):
    """Brute-force min-plus product of two dense matrices."""
    return np.minimum((a[:, :, None] + b[None, :, :]).min(axis=1), INF)


ACCEPTANCE_LINES: list = []


def record(criterion: str, ok: bool, measured: str, tolerance: str) -> str:
    """Format, remember and print one acceptance verdict."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: measured {measured}; tolerance {tolerance}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line
