"""Community detection on weighted term networks and agreement scoring."""

from .fastgreedy import fastgreedy
from .multilevel import multilevel
from .partition import (
    CommunityError,
    Partition,
    concordance,
    modularity,
    read_reference,
    write_partition,
)
from .walktrap import walktrap

DETECTORS = {"walktrap": walktrap, "multilevel": multilevel, "fastgreedy": fastgreedy}

__all__ = [
    "CommunityError",
    "DETECTORS",
    "Partition",
    "concordance",
    "fastgreedy",
    "modularity",
    "multilevel",
    "read_reference",
    "walktrap",
    "write_partition",
]
