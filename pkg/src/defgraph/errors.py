"""Exception hierarchy shared by all defgraph modules."""

from __future__ import annotations


class DefGraphError(Exception):
    """Base class for every error raised by defgraph."""

    exit_code = 1


# -- DEF parsing -------------------------------------------------------------


class DefSyntaxError(DefGraphError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col} {message}" if line else message)


class MalformedToken(DefSyntaxError):
    pass


class UnexpectedToken(DefSyntaxError):
    def __init__(self, expected: str, got: str, line: int = 0, col: int = 0):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected}, got {got!r}", line, col)


class MissingUnits(DefSyntaxError):
    pass


class DuplicateName(DefSyntaxError):
    pass


# -- database resolution -------------------------------------------------------


class DanglingReference(DefGraphError):
    def __init__(self, net: str, owner: str):
        self.net = net
        self.owner = owner
        super().__init__(f"net {net!r} references unknown owner {owner!r}")


class MultiNetPin(DefGraphError):
    pass


class Unplaced(DefGraphError):
    pass


# -- graph construction --------------------------------------------------------


class StageUnavailable(DefGraphError):
    pass


class StageMismatch(DefGraphError):
    pass


class SchemaMismatch(DefGraphError):
    def __init__(self, differences: list[str]):
        self.differences = differences
        super().__init__("schema mismatch: " + "; ".join(differences))


class EmptyMerge(DefGraphError):
    pass


class TooFewDesigns(DefGraphError):
    pass


class InfeasibleSpec(DefGraphError):
    pass


# -- bundles -------------------------------------------------------------------


class CorruptBundle(DefGraphError):
    exit_code = 3

    def __init__(self, file: str, reason: str):
        self.file = file
        self.reason = reason
        super().__init__(f"{file}: {reason}")


class VersionMismatch(DefGraphError):
    exit_code = 3
