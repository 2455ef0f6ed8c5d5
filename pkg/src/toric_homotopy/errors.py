"""Exception hierarchy.

Every error carries a machine-readable ``kind`` and a ``details`` dict so the
CLI can render it as JSON without string parsing.
"""

from __future__ import annotations


class ToricError(Exception):
    """Base class. ``mathematical`` errors map to CLI exit code 2."""

    kind = "ToricError"
    mathematical = True

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.kind)
        self.details = details

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self), "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        return obj
    return str(obj)


class RankDeficient(ToricError):
    kind = "RankDeficient"

    def __init__(self, rank: int, n: int):
        super().__init__(f"support differences span a rank {rank} lattice, need {n}", rank=rank, n=n)
        self.rank = rank


class DegenerateSupport(ToricError):
    kind = "DegenerateSupport"

    def __init__(self, i: int, xi):
        super().__init__(f"support {i} lies entirely on its face for direction {tuple(xi)}", i=i, xi=list(xi))


class DegenerateGram(ToricError):
    kind = "DegenerateGram"

    def __init__(self, i: int):
        super().__init__(f"weighted covariance of support {i} is singular", i=i)


class InternalInconsistency(ToricError):
    kind = "InternalInconsistency"


class ZeroEta(ToricError):
    kind = "ZeroEta"


class ZeroEquation(ToricError):
    kind = "ZeroEquation"

    def __init__(self, i: int):
        super().__init__(f"equation {i} has zero coefficient vector", i=i)


class ZeroCoefficient(ToricError):
    kind = "ZeroCoefficient"

    def __init__(self, i: int, a: int):
        super().__init__(f"coefficient ({i}, {a}) is zero", i=i, a=a)


class SingularJacobian(ToricError):
    kind = "SingularJacobian"


class NoConvergence(ToricError):
    kind = "NoConvergence"


class OutOfRange(ToricError):
    kind = "OutOfRange"


class InfiniteKappa(ToricError):
    kind = "InfiniteKappa"


class DeltaTooLarge(ToricError):
    kind = "DeltaTooLarge"


class OracleUnavailable(ToricError):
    kind = "OracleUnavailable"


class LeadingZero(ToricError):
    kind = "LeadingZero"


class ResultantDegenerate(ToricError):
    kind = "ResultantDegenerate"


class ParseError(ToricError):
    kind = "ParseError"
    mathematical = False


class UsageError(ToricError):
    kind = "UsageError"
    mathematical = False
