"""Exception hierarchy shared across the toolkit."""
from __future__ import annotations


class SgssError(Exception):
    """Base class for all toolkit errors."""


class DataError(SgssError):
    """Malformed or inconsistent input data."""


class UncoveredTargetError(DataError):
    """Scoring was attempted while required label targets are missing."""

    def __init__(self, targets: list) -> None:
        self.targets = list(targets)
        listing = ", ".join(str(t) for t in self.targets)
        super().__init__(f"uncovered targets: {listing}")


class LabellingError(SgssError):
    """An external labelling call failed after retries."""

    def __init__(self, message: str, transcript: list | None = None) -> None:
        self.transcript = transcript or []
        super().__init__(message)
