"""Bundled benchmark corpus.

Each entry ships a model file, an observer automaton, optionally a
provided supporting invariant, and optionally a known-valid certificate
fixture.  ``manifest.json`` lists the eleven synthesis benchmarks (in
table order) plus the worked example under ``extras``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from ..automata import GuardedDSA, parse_dsa
from ..model import StochModel, parse_model
from ..templates import InvTemplate, parse_invariant

__all__ = [
    "Benchmark",
    "benchmark_names",
    "load_benchmark",
    "manifest",
    "read_corpus_text",
    "corpus_path",
]


def _root():
    return resources.files(__name__)


def read_corpus_text(filename: str) -> str:
    return (_root() / filename).read_text()


def corpus_path(filename: str) -> str:
    """Filesystem path of a corpus file (the corpus ships as real files)."""
    return str(_root() / filename)


def manifest() -> dict:
    return json.loads(read_corpus_text("manifest.json"))


def _entries() -> dict[str, dict]:
    doc = manifest()
    out: dict[str, dict] = {}
    for row in doc["benchmarks"] + doc["extras"]:
        out[row["name"]] = row
    return out


def benchmark_names(include_extras: bool = False) -> list[str]:
    doc = manifest()
    rows = doc["benchmarks"] + (doc["extras"] if include_extras else [])
    return [row["name"] for row in rows]


@dataclass(frozen=True)
class Benchmark:
    name: str
    mode: str  # V | VI | VC | VIC
    model: StochModel
    dsa: GuardedDSA
    invariant: InvTemplate | None  # provided invariant, if any
    cert: dict | None  # known-valid certificate fixture, if any
    files: dict  # manifest row (file names, flags, notes)


def load_benchmark(name: str) -> Benchmark:
    try:
        row = _entries()[name]
    except KeyError:
        known = ", ".join(sorted(_entries()))
        raise KeyError(f"unknown benchmark {name!r}; corpus has: {known}")
    model = parse_model(read_corpus_text(row["model"]))
    dsa = parse_dsa(
        read_corpus_text(row["dsa"]),
        variables=model.state_vars,
        modes=model.modes,
    )
    inv = None
    if row["invariant"]:
        inv = parse_invariant(read_corpus_text(row["invariant"]), model, dsa)
    cert = None
    if row["cert"]:
        cert = json.loads(read_corpus_text(row["cert"]))
    return Benchmark(name, row["mode"], model, dsa, inv, cert, row)
