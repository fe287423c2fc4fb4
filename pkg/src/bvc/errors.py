"""Exception types shared across the package."""


class BvcError(Exception):
    """Base class for all package errors."""


class OddCycle(BvcError):
    """Edge list contains an odd cycle and is therefore not 2-colorable."""


class DuplicateEdge(BvcError):
    """Edge list contains a repeated edge."""


class InvalidParam(BvcError):
    """A parameter is outside its documented range."""


class RoundCapExceeded(BvcError):
    """Simulation reached the round cap before all nodes halted."""


class ProgramFault(BvcError):
    """A node program raised during init/step/output."""


class ShortAugPathWitness(BvcError):
    """A free right-side node appeared at an odd layer while the matching
    was assumed to admit no short augmenting path."""


class ShorterPathExists(BvcError):
    """An augmenting path shorter than the requested length exists."""


class DisconnectedCluster(BvcError):
    """A cluster has no connected spanning tree inside its own subgraph."""


class PathBudgetExceeded(BvcError):
    """Exhaustive path enumeration exceeded its partial-path budget."""
