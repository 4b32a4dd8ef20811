"""Growing hierarchical self-organizing maps with interactive restraint.

The package trains a tree of small SOM grids over a numeric dataset.  Each
grid grows rows/columns (or single units) until its quantization error drops
under a fraction of its parent unit's error, then expands high-error units
into child maps.  An optional restraint policy vetoes expansions backed by
too few samples and widens their maps instead.
"""

from .adaptive import AdaptiveParams
from .data import Dataset, Sample, load_csv, load_iris, normalize
from .errors import (DegenerateMapError, GhsomError, GrowthRefused,
                     InputError, ModelFormatError, UnknownTargetError)
from .growth import (AuditEntry, GhsomParams, GrowthParams, Hierarchy,
                     grow_map, insert_row_or_column, select_error_unit,
                     train_hierarchy)
from .policy import InteractiveParams, case1_veto, case2_insert_check
from .som import (MapGrid, Schedules, Unit, assign_and_score, find_bmu,
                  layer0_stats, map_mqe, train_map)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveParams", "AuditEntry", "Dataset", "DegenerateMapError",
    "GhsomError", "GhsomParams", "GrowthParams", "GrowthRefused", "Hierarchy",
    "InputError", "InteractiveParams", "MapGrid", "ModelFormatError",
    "Sample", "Schedules", "Unit", "UnknownTargetError", "assign_and_score",
    "case1_veto", "case2_insert_check", "find_bmu", "grow_map",
    "insert_row_or_column", "layer0_stats", "load_csv", "load_iris",
    "map_mqe", "normalize", "select_error_unit", "train_hierarchy",
    "__version__",
]
