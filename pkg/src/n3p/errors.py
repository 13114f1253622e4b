"""Exception types shared across the planner modules."""
from __future__ import annotations


class PlanningFailure(Exception):
    """Base class for planner failures. ``cause`` is a short machine-readable tag."""

    cause = "failure"

    def __init__(self, message: str = "", nodes_expanded: int = 0):
        super().__init__(message)
        self.nodes_expanded = nodes_expanded


class NodeCapExceeded(PlanningFailure):
    cause = "node_cap"


class GoalOccupied(PlanningFailure):
    cause = "goal_occupied"


class StartInCollision(PlanningFailure):
    cause = "start_in_collision"


class SearchExhausted(PlanningFailure):
    # open list emptied without reaching the goal
    cause = "search_exhausted"


class BoundsTooSmall(PlanningFailure):
    cause = "bounds_too_small"


class JunctionMismatch(ValueError):
    pass


class SpotBlocked(Exception):
    pass


class BelowMinimum(Exception):
    pass


class EmptyEnvironment(Exception):
    pass


class EmptyDataset(ValueError):
    pass


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PathTooShort(ValueError):
    pass


class AllFailed(Exception):
    pass
