class OPTWError(Exception):
    """Base class for workbench errors."""


class TheoryMismatch(OPTWError, ValueError):
    """Objects from different theories were combined."""


class NullConditioning(OPTWError, ValueError):
    """Conditioning on an event of (numerically) zero probability."""

    def __init__(self, probability):
        super().__init__(f"conditioning on null event (probability {probability:.3g})")
        self.probability = probability


class NotCoexistent(OPTWError, ValueError):
    pass


class NotInformationallyComplete(OPTWError, ValueError):
    pass


class CutoffExceeded(OPTWError):
    """A combinatorial search hit its size cutoff; the answer is unresolved.

    ``lower_bound`` is the best value certified before the search stopped.
    """

    def __init__(self, what, cutoff, lower_bound):
        super().__init__(f"{what}: unresolved, search cutoff {cutoff} exceeded "
                         f"(certified lower bound {lower_bound})")
        self.cutoff = cutoff
        self.lower_bound = lower_bound


class UnsupportedBackend(OPTWError, NotImplementedError):
    pass
