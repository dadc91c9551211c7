"""Finite-volume incompressible flow solver with a trainable convection
scheme. The heavy lifting lives in the compiled `_core` module; this package
is a thin import shim."""

from ._core import (
    Mesh,
    MeshPair,
    ObstacleSpec,
    Simulator,
    State,
    build_pair,
    network_info,
    project,
    psi_loss,
    read_snapshot,
    write_snapshot,
)

__all__ = [
    "Mesh",
    "MeshPair",
    "ObstacleSpec",
    "Simulator",
    "State",
    "build_pair",
    "network_info",
    "project",
    "psi_loss",
    "read_snapshot",
    "write_snapshot",
]
