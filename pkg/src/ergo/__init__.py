"""Squared-degree exponential random graphs: sampling, degree laws, cuts, spectra and resilience."""

from .errors import CapacityError, ConfigError, ErgoError, InputError, NumericError, OracleViolation, RejectionFailure
from .graph import (
    CutStats,
    DegreeSequence,
    Graph,
    cut_stats,
    degree_stats,
    energy,
    graph_from_edge_list,
    is_connected,
    parse_edge_list,
    read_edge_list,
    write_edge_list,
)

__version__ = "0.1.0"
