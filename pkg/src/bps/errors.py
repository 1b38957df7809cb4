class ZeroMessageError(ArithmeticError):
    """An evidence message vanished: the observations contradict the model."""


class UnreachableStateError(LookupError):
    """Lookup of a state outside the table's reachability class."""


class CapExceededError(ValueError):
    """Brute-force enumeration would exceed the configured size cap."""
