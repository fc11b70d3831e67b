"""Exception types shared across the toolkit."""


class AudioFormatError(ValueError):
    """The audio container or encoding is not supported, or is damaged."""


class InfeasibleScheduleError(ValueError):
    """No positive silence rate can reach the requested output duration."""


class ContractViolation(RuntimeError):
    """Processed output does not satisfy the duration/rate guarantees."""
