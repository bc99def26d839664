"""Fixed-order strong-stabilization H-infinity controller synthesis."""

from ._hinfstab import (
    AllRunsFailed,
    ControllerParams,
    DimensionError,
    DimensionMismatch,
    Error,
    GeneralizedPlant,
    InfiniteStart,
    NormResult,
    ParseError,
    RunRecord,
    StateSpaceSystem,
    SynthesisResult,
    UnstableSystem,
    WellPosednessError,
    close_loop,
    freq_response,
    hinf_norm,
    load_plant,
    objective,
    parse_controller,
    parse_plant,
    serialize_controller,
    serialize_plant,
    spectral_abscissa,
    synthesize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
