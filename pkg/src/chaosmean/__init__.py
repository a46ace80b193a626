"""Phase-space mean values of kicked quantum maps.

Subpackages cover the classical maps and tangent dynamics (:mod:`.maps`),
exact split-step quantum propagation (:mod:`.qdyn`), Weyl symbols and
detector mean values (:mod:`.wigner`), adaptive manifold tracing
(:mod:`.manifold`), the classical and filament-interference mean values
(:mod:`.smv`), coherent-state initial-value propagation (:mod:`.hk`), and
the sweep/convergence experiment harness with its CLI (:mod:`.harness`).
"""

from .manifold import Filament, TraceConfig, dense_disk_runs, trace_manifold
from .maps import MapKind, MapParams, PhasePoint, iterate_trajectory, jacobian_step, map_step
from .qdyn import StateVector, build_grid, evolve, plane_wave
from .wigner import Detector, detector_mean, wigner_cylinder

__version__ = "0.1.0"

__all__ = [
    "Detector",
    "Filament",
    "MapKind",
    "MapParams",
    "PhasePoint",
    "StateVector",
    "TraceConfig",
    "build_grid",
    "dense_disk_runs",
    "detector_mean",
    "evolve",
    "iterate_trajectory",
    "jacobian_step",
    "map_step",
    "plane_wave",
    "trace_manifold",
    "wigner_cylinder",
    "__version__",
]
