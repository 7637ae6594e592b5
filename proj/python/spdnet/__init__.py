"""SPD-matrix network for skeleton-based hand gesture recognition."""

from ._core import (
    ConfigError,
    InvalidInput,
    Model,
    NetworkConfig,
    ParseError,
    RankError,
    SpectralDomainError,
    gauss_agg,
    gradcheck,
    half_vec,
    log_eig,
    pyramid_split,
    re_eig,
    resample,
    sym_eig,
    synth_generate,
)

__all__ = [
    "ConfigError",
    "InvalidInput",
    "Model",
    "NetworkConfig",
    "ParseError",
    "RankError",
    "SpectralDomainError",
    "gauss_agg",
    "gradcheck",
    "half_vec",
    "log_eig",
    "pyramid_split",
    "re_eig",
    "resample",
    "sym_eig",
    "synth_generate",
]
