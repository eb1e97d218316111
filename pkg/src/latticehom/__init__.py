"""Lattice homology of plumbing forests over F2[U]/U^n."""

from .charlat import SpinCClass, enumerate_spinc, spinc_of
from .complex import BoxSpec, CharBox, TruncationSpec, build_char_complex, build_complex
from .graph import PlumbingGraph, classify, parse_graph
from .homology import (TOWER, ModuleDecomposition, Summand, compute_homology, decompose_module,
                       poincare_series, reconstruct_from_series, stabilize)

__version__ = "0.1.0"

__all__ = [
    "PlumbingGraph", "parse_graph", "classify",
    "SpinCClass", "enumerate_spinc", "spinc_of",
    "BoxSpec", "CharBox", "TruncationSpec", "build_complex", "build_char_complex",
    "TOWER", "Summand", "ModuleDecomposition", "compute_homology", "decompose_module",
    "stabilize", "poincare_series", "reconstruct_from_series",
]
