"""Exception types shared across the package."""


class FasError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(FasError):
    """Invalid argument, configuration value, or out-of-range operand."""


class KeyMismatchError(FasError):
    """Ciphertexts or blocks produced under incompatible keys."""


class CorruptionError(FasError):
    """Ciphertext failed the structural checks performed during decryption."""


class ProtocolError(FasError):
    """Round or message state violates the federation protocol."""


class FrameTooLargeError(ProtocolError):
    """Wire frame exceeds the maximum allowed size."""


class DivergenceError(FasError):
    """Training produced a non-finite loss."""


class AttackInapplicableError(FasError):
    """Observed gradients carry no signal the attack can use."""
