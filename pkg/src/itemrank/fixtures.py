"""Bundled 8-row toy datasets used throughout the tests and docs.

All four share the same singleton frequencies (1/2 each) but differ in
their joint structure: d1 is uniform, d2 excludes the all-ones row, d3 is
parity-structured, and d4 ties the first two attributes together while
making them exclusive with the third.
"""

from __future__ import annotations

from importlib import resources

from .dataset import Dataset, parse_dense

_NAMES = ("d1", "d2", "d3", "d4")


def fixture_text(name: str) -> str:
    if name not in _NAMES:
        raise ValueError(f"unknown fixture {name!r}; expected one of {_NAMES}")
    return resources.files("itemrank.data").joinpath(f"{name}.dense").read_text()


def load(name: str) -> Dataset:
    return parse_dense(fixture_text(name))


def d1() -> Dataset:
    return load("d1")


def d2() -> Dataset:
    return load("d2")


def d3() -> Dataset:
    return load("d3")


def d4() -> Dataset:
    return load("d4")
