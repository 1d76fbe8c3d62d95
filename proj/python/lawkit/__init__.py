"""Constitutive law discovery from particle dynamics (C++ core)."""

from ._core import (
    ParseError,
    Scene,
    SimulationFailure,
    TypeError,
    bundled_scenes,
    catalog,
    catalog_source,
    chamfer,
    discover,
    elastic,
    format_law,
    generate_scene,
    law_params,
    load_scene,
    optimize,
    plastic,
    simulate,
)

__all__ = [
    "ParseError",
    "Scene",
    "SimulationFailure",
    "TypeError",
    "bundled_scenes",
    "catalog",
    "catalog_source",
    "chamfer",
    "discover",
    "elastic",
    "format_law",
    "generate_scene",
    "law_params",
    "load_scene",
    "optimize",
    "plastic",
    "simulate",
]
