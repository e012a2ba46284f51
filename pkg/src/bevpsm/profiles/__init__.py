"""Synthetic BEV profile generation: mobility, driving consumption, grid availability."""

from .config import (DESTINATIONS, ChargerDistribution, GeneratorConfig, MobilityRules, VehicleCatalog,
                     VehicleModel, config_from_dict, default_config, load_generator_config)
from .mobility import DRIVING, MobilityProfile, Trip, generate_mobility, profile_from_trips
from .pool import BevProfile, ProfilePool, build_pool, generate_profile
from .series import (TimeSeries, derive_driving_consumption, derive_grid_availability, fast_charge_windows,
                     resample_hourly, simulate_soc)

__all__ = [
    "DESTINATIONS", "DRIVING", "BevProfile", "ChargerDistribution", "GeneratorConfig", "MobilityProfile",
    "MobilityRules", "ProfilePool", "TimeSeries", "Trip", "VehicleCatalog", "VehicleModel",
    "build_pool", "config_from_dict", "default_config", "derive_driving_consumption",
    "derive_grid_availability", "fast_charge_windows", "generate_mobility", "generate_profile",
    "load_generator_config", "profile_from_trips", "resample_hourly", "simulate_soc",
]
