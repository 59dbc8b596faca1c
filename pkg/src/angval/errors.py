"""Exception hierarchy shared by all angval modules."""


class AngvalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(AngvalError):
    """Operands live in different ambient spaces or have incompatible shapes."""


class RankDeficient(AngvalError):
    """A matrix that must have full column rank does not, at the given tolerance."""


class NoConvergence(AngvalError):
    """An iterative kernel exhausted its iteration budget."""


class InvalidBlock(AngvalError):
    """A quasitriangular block has parameters outside its admissible range."""


class SingularMatrix(AngvalError):
    """A matrix that must be invertible is singular at working precision."""


class StepUnstable(AngvalError):
    """Time stepping produced a non-finite or rank-collapsed basis."""


class BudgetExceeded(AngvalError):
    """A search or estimate would exceed its configured cost cap."""


class NotCoprime(AngvalError):
    """A resonance order p/q was given in non-reduced form."""


class RationalityDetected(AngvalError):
    """Frequencies failed the rational-independence gate.

    Carries the offending witnesses as a list of (i, j, p, q) tuples:
    omega_j / omega_i is approximated by p/q within the gate tolerance.
    """

    def __init__(self, witnesses):
        self.witnesses = list(witnesses)
        pairs = ", ".join(
            "omega[%d]/omega[%d] ~ %d/%d" % (j, i, p, q) for (i, j, p, q) in self.witnesses
        )
        super().__init__("rationally dependent frequencies: " + pairs)
