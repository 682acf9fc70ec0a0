"""Mode-parameterized inverse Gaussian (rIG) models.

Density and moments, weighted maximum likelihood, rIG-kernel density
estimation, the contaminated rIG model and finite rIG mixtures.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    DegenerateComponentError,
    DomainError,
    FitError,
    InputError,
    NonFiniteError,
    RigkitError,
    SpreadUnidentifiableError,
)
from .core import RigParams, ClassicalIgParams, pdf, log_pdf, cdf, sample  # noqa: E402
from .wmle import WeightedSample, RigFit  # noqa: E402
from .contam import ContamParams, ContamFit  # noqa: E402
from .mixture import MixtureParams, MixtureFit  # noqa: E402
from .kde import KdeModel  # noqa: E402
