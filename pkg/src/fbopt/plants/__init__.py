"""Physical-system models mapping inputs and disturbances to outputs."""

from .academic import AcademicPlant
from .feeder import (
    FeederModel,
    Line,
    PvSite,
    OperatingPoint,
    PowerFlowError,
    GammaEstimate,
    power_flow,
    linearize_nominal,
    jacobian_at,
    sample_gamma,
    operating_region_sampler,
    default_feeder,
    feeder_from_json_dict,
    feeder_to_json_dict,
    load_feeder,
    overvoltage_series,
    write_series_csv,
    load_series_csv,
)

__all__ = [
    "AcademicPlant",
    "FeederModel",
    "Line",
    "PvSite",
    "OperatingPoint",
    "PowerFlowError",
    "GammaEstimate",
    "power_flow",
    "linearize_nominal",
    "jacobian_at",
    "sample_gamma",
    "operating_region_sampler",
    "default_feeder",
    "feeder_from_json_dict",
    "feeder_to_json_dict",
    "load_feeder",
    "overvoltage_series",
    "write_series_csv",
    "load_series_csv",
]
