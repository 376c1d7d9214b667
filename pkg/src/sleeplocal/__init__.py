"""Simulator and algorithms for the Sleeping LOCAL model."""
from .engine import (STAY_AWAKE, Done, Failure, NodeContext, NodeProgram, ProgramError,
                     RoundCapExceeded, RunMetrics, Sleep, Stage, Sequence, Terminate,
                     concatenate, run, run_naive, wake_at)
from .graph import Graph, GraphFamily, generate, load_edge_list, save_edge_list, square

__version__ = "0.1.0"
