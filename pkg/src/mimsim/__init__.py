"""Desk-scale simulator and verification harness for a walking
inspection-and-maintenance robot operating in an orbital warehouse.

Subpackages cover the scene ground truth, standard-interconnect assembly
graph, walking locomotion, synthetic sensors, inspection pipelines,
statistical reliability verification, maintenance tooling, and a
deterministic scenario runner.
"""

from . import (
    errors,
    geometry,
    inspection,
    interconnect,
    locomotion,
    maintenance,
    presets,
    scenario,
    scene,
    sensors,
    verification,
)

__all__ = [
    "errors",
    "geometry",
    "inspection",
    "interconnect",
    "locomotion",
    "maintenance",
    "presets",
    "scenario",
    "scene",
    "sensors",
    "verification",
]

__version__ = "0.1.0"
