"""Growth-restraint rules applied at each stratification decision.

Case 1 vetoes a child map for a unit holding too small a share of the
dataset; that unit instead becomes a candidate for in-map unit insertion.
Case 2 inserts a unit next to any non-stratifying unit that still owns an
outsized share of the map's error, then the map is retrained.  Both rules
leave an audit trail of the statistics that triggered them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError
from .som import MapGrid, Unit

__all__ = ["InteractiveParams", "case1_veto", "case2_insert_check"]


@dataclass
class InteractiveParams:
    """Restraint thresholds; ``enabled=False`` reproduces the plain run."""

    alpha: float = 0.04
    beta: float = 4.0
    enabled: bool = False

    def validate(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise InputError("alpha must lie in (0,1]")
        if self.beta <= 0:
            raise InputError("beta must be positive")


def case1_veto(unit: Unit, n_total: int, alpha: float) -> bool:
    """Stop stratification when the unit holds at most ``alpha * n_total`` samples."""
    return len(unit.assigned) <= alpha * n_total


def case2_insert_check(unit: Unit, grid: MapGrid, tau1: float, beta: float) -> bool:
    """Insert a unit instead of a layer when the unit's error share is outsized."""
    total = sum(u.qe for u in grid.winner_units())
    return unit.qe >= beta * tau1 * total and unit.qe > 0
