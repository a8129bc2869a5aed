"""Separated nets from linear toral flows and cut-and-project sets.

Submodules: ``geometry`` (torus and lattice primitives), ``netgen`` (visit
sets and model sets), ``selberg`` (extremal trigonometric majorants),
``equidist`` (Birkhoff integrals and discrepancy bounds), ``diophantine``,
``bdmatch`` (bounded-displacement matching), ``correlation`` and ``cli``.
"""
from .errors import (
    ApernetError,
    ConfigError,
    DomainError,
    InjectivityError,
    ResonanceError,
    TransversalityError,
)
from .geometry import AlignedBox, AlignedParallelotope, Basis, torus_reduce
from .netgen import FlowSpec, PointSet, Section, cut_and_project, visit_set
from .selberg import TrigPolynomial, build_selberg_pair, build_trig_pair, eval_trig

__version__ = "0.1.0"

__all__ = [
    "ApernetError",
    "ConfigError",
    "DomainError",
    "InjectivityError",
    "ResonanceError",
    "TransversalityError",
    "AlignedBox",
    "AlignedParallelotope",
    "Basis",
    "torus_reduce",
    "FlowSpec",
    "PointSet",
    "Section",
    "cut_and_project",
    "visit_set",
    "TrigPolynomial",
    "build_selberg_pair",
    "build_trig_pair",
    "eval_trig",
]
