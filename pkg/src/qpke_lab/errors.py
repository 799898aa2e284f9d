"""Exception types shared across the library."""


class QpkeLabError(Exception):
    """Base class for library errors."""


class CapacityError(QpkeLabError):
    """A request exceeds the configured desk-scale simulation limits."""


class KeyReuseError(QpkeLabError):
    """A single-use quantum public key was used a second time."""


class DecodeFailureError(QpkeLabError):
    """A received state is not a valid cipher/codeword for the given key."""


class RejectionBudgetError(QpkeLabError):
    """Rejection sampling did not hit the target set within its budget."""


class AdversarialModeError(QpkeLabError):
    """An attack-only oracle was requested without adversarial_mode=True."""
