"""CAM-based automata toolchain: encoding, placement, cycle simulation and cost."""

__version__ = "0.1.0"

from .nfa import HomogeneousNfa, ReportRecord, StartKind, Ste, SymbolClass, interpret, load_nfa  # noqa: E402
from .regex import compile_regex, parse_regex  # noqa: E402
from .encoder import compile_nfa, select_scheme  # noqa: E402
from .mapper import Placement, place  # noqa: E402
from .simulator import run_e, run_t  # noqa: E402
from .cost import CostParams, cost_report  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "BACKEND", "CostParams", "HomogeneousNfa", "Placement", "ReportRecord", "StartKind", "Ste",
    "SymbolClass", "compile_nfa", "compile_regex", "cost_report", "interpret", "load_nfa",
    "parse_regex", "place", "run_e", "run_t", "select_scheme",
]
