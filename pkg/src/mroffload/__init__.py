"""Energy-aware cloud offloading planner for multi-radio mobile devices."""

from .profile import (
    AppGraph,
    DeviceProfile,
    Instance,
    OffloadPlan,
    RadioInterface,
    SynthRanges,
    load_instance,
    synthesize_instance,
    validate_plan,
)

__version__ = "0.1.0"

__all__ = [
    "AppGraph",
    "DeviceProfile",
    "Instance",
    "OffloadPlan",
    "RadioInterface",
    "SynthRanges",
    "load_instance",
    "synthesize_instance",
    "validate_plan",
]
