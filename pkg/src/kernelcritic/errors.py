"""Exception types shared across the package."""


class ValidationError(Exception):
    """Configuration or contract violation detected before/without running.

    Carries a list of human-readable violation messages.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericRangeError(Exception):
    """A numeric quantity left the representable/physical range mid-run.

    ``t_fail`` is the simulation time of the failing step (None when the
    failure is not tied to a time grid).  ``trajectory`` holds whatever
    partial trajectory was recorded before the abort, so callers can still
    inspect the run up to the failure.
    """

    def __init__(self, message, t_fail=None, trajectory=None):
        super().__init__(message)
        self.t_fail = t_fail
        self.trajectory = trajectory
