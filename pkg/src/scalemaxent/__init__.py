"""Maximum-entropy distributions built from measurement-scale specifications."""
from . import catalog, extremes, maxent, nefqvf, quadrature, scale
from .errors import *  # noqa: F401,F403
from .maxent import (
    ConstraintTarget,
    CumulativeDerivative,
    DensityModel,
    Jacobian,
    MeasurePolicy,
    Uniform,
    relative_entropy,
    solve_multiplier,
    synth_density,
)
from .scale import (
    LinearLog,
    LinearLogLinear,
    LogLinear,
    LogLinearLog,
    ObservableReduction,
    PureLog,
    ScaleParams,
    ScaleSpec,
)

__version__ = "0.1.0"
