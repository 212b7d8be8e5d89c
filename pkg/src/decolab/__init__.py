"""Decohering multi-slit interference: analytic patterns, coherence, and a
master-equation oracle."""

from decolab.constants import CONSTANTS, PhysicalConstants
from decolab.errors import (
    ConfigError,
    DecolabError,
    InvalidParameterError,
    NumericalError,
    ProtocolInapplicableError,
    ResolutionError,
    UndefinedCoherenceError,
)
from decolab.model import (
    DetectorOverlaps,
    DimensionlessInstance,
    EnvironmentSpec,
    ExperimentConfig,
    QuantonSpec,
    ScreenGeometry,
    SlitArray,
    SourceAmplitudes,
    diffusion_coefficient,
    flight_time,
    load_config,
    load_preset,
    nondimensionalize,
    redimensionalize,
    validate,
)

__version__ = "0.1.0"
