"""
Error types for the Kloosterman moment toolkit
Separates caller mistakes from broken internal invariants and failed identities
"""

from typing import Any, Dict, List, Optional


class KloostermanError(Exception):
    """Base class for every error raised by the toolkit"""


class ParameterError(KloostermanError, ValueError):
    """A precondition, range or parity requirement was violated"""


class ConstructionError(ParameterError):
    """A field could not be built from the supplied modulus"""

    def __init__(self, message: str, factor: Optional[tuple] = None):
        super().__init__(message)
        self.factor = factor


class ConsistencyError(KloostermanError, AssertionError):
    """An internal invariant failed; this indicates a bug, never bad input"""


class IdentityFailure(KloostermanError):
    """A requested identity did not verify"""

    def __init__(self, message: str, trace: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.trace = trace or []


def require(condition: bool, message: str) -> None:
    """Raise ParameterError with message unless condition holds"""
    if not condition:
        raise ParameterError(message)


def ensure(condition: bool, message: str) -> None:
    """Raise ConsistencyError with message unless condition holds"""
    if not condition:
        raise ConsistencyError(message)
