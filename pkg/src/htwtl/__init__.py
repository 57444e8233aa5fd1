"""Model checking and synthesis for hyper time-window temporal logic."""

from .formula import (HyperFormula, Fragment, FragmentKind, FormulaError, FormulaSyntaxError,
                      beta, classify, horizon, is_synchronous, parse_hyper, parse_twtl, pretty)
from .tks import (TKS, GridSpec, TimedTrace, generate_traces, grid_to_tks, parse_grid,
                  parse_model, self_compose, unit_unroll)
from .evaluate import eval_twtl, oracle_eval
from .modelcheck import Mode, Status, Timeout, Verdict, check_twtl_model
from .translate import (async_to_sync, bound_variability, flatten_exists_forall, hyper_to_twtl,
                        inv_trace)
from .driver import CheckOptions, check, enumerate_assignments
from .synthesis import Infeasible, WitnessPlan, synthesize

__version__ = "0.1.0"

__all__ = [
    "HyperFormula", "Fragment", "FragmentKind", "FormulaError", "FormulaSyntaxError",
    "beta", "classify", "horizon", "is_synchronous", "parse_hyper", "parse_twtl", "pretty",
    "TKS", "GridSpec", "TimedTrace", "generate_traces", "grid_to_tks", "parse_grid",
    "parse_model", "self_compose", "unit_unroll", "eval_twtl", "oracle_eval",
    "Mode", "Status", "Timeout", "Verdict", "check_twtl_model",
    "async_to_sync", "bound_variability", "flatten_exists_forall", "hyper_to_twtl", "inv_trace",
    "CheckOptions", "check", "enumerate_assignments", "Infeasible", "WitnessPlan", "synthesize",
]
