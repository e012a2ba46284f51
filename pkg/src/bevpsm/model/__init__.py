"""Power-sector investment and dispatch model with scaled BEV blocks."""

from .build import (STRATEGIES, BevAttachment, EnergyModel, attach_bev_block, attach_bev_profiles,
                    attach_hydrogen_demand, build_reference_model, combine_models, link_nodes)
from .config import (BevParameters, GenerationTech, HydrogenChain, Node, StorageTech, SystemConfig,
                     load_system_config, system_from_dict)
from .results import ScenarioResult, balance_residual, extract_solution, solve_model

__all__ = [
    "STRATEGIES", "BevAttachment", "BevParameters", "EnergyModel", "GenerationTech", "HydrogenChain", "Node",
    "ScenarioResult", "StorageTech", "SystemConfig", "attach_bev_block", "attach_bev_profiles",
    "attach_hydrogen_demand", "balance_residual", "build_reference_model", "combine_models",
    "extract_solution", "link_nodes", "load_system_config", "solve_model", "system_from_dict",
]
