"""Simulated blind delegation of IQP sampling and its bias-based verification."""

from ._kernels import BACKEND
from .gf2 import BitMatrix, BitVector
from .hypothesis import HypothesisParams, HypothesisResult, build_instance, run_hypothesis_test
from .mbqc import ExtendedIqpGraph, MeasurementPattern, pattern_from_xprogram
from .protocol import ClientKeys, PublicInfo, QDistribution, blindness_harness, make_server, run_protocol
from .statevec import StateVector
from .xprogram import OutcomeDistribution, XProgram, bias_theoretical, exact_distribution

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BitMatrix",
    "BitVector",
    "ClientKeys",
    "ExtendedIqpGraph",
    "HypothesisParams",
    "HypothesisResult",
    "MeasurementPattern",
    "OutcomeDistribution",
    "PublicInfo",
    "QDistribution",
    "StateVector",
    "XProgram",
    "bias_theoretical",
    "blindness_harness",
    "build_instance",
    "exact_distribution",
    "make_server",
    "pattern_from_xprogram",
    "run_hypothesis_test",
    "run_protocol",
]
