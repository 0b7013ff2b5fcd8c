"""
Exception hierarchy for emcheck

Every failure raised by the library derives from EmcheckError so that the CLI
can report it uniformly.
"""

from typing import Optional, Sequence

import numpy as np


class EmcheckError(Exception):
    """Base class for all emcheck errors"""


class DomainError(EmcheckError, ValueError):
    """A point lies outside the chart domain or a parameter is out of range"""


class DegeneratePointError(EmcheckError):
    """The distance gradient is undefined because x coincides with x0"""


class DegreeError(EmcheckError, ValueError):
    """Form degree, rank or shape is incompatible with the operation"""


class SingularWeightError(EmcheckError):
    """|psi| vanishes where the weight |psi|^(p-2) is singular (p < 2)"""


class StandingAssumptionError(EmcheckError, ValueError):
    """The standing assumptions n > kp and p > 1 are violated"""


class MetricError(EmcheckError):
    """A perturbed metric is not positive definite"""


class SupportLeakError(EmcheckError):
    """A compactly supported field does not vanish on the integration box boundary"""


class RegistrationError(EmcheckError):
    """A catalog field failed the check for one of its tags"""


class PreconditionError(EmcheckError):
    """A sampled precondition failed; ``witness`` is the offending point"""

    def __init__(self, message: str, witness: Optional[np.ndarray] = None):
        super().__init__(message)
        self.witness = witness


class IntegrandError(EmcheckError):
    """An integrand failed or returned a non-finite value at ``point``"""

    def __init__(self, message: str, point: Optional[np.ndarray] = None):
        super().__init__(message)
        self.point = point


class UsageError(EmcheckError):
    """Unknown suite or example; ``choices`` lists what is available"""

    def __init__(self, message: str, choices: Sequence[str] = ()):
        super().__init__(message)
        self.choices = list(choices)
