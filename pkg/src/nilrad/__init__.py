"""Einstein nilradicals among two-step nilpotent Lie algebras with
two-dimensional center: pencil invariants, classification, pre-Einstein
derivations and certified nilsoliton metrics."""

from .algebra import MetricData, NilsolitonCertificate, TwoStepAlgebra, nilsoliton_residual
from .canonical import CanonicalSpec, synthesize
from .classifier import Verdict, classify
from .invariants import PencilInvariants, SkewPencil, compute_invariants

__all__ = [
    "CanonicalSpec",
    "MetricData",
    "NilsolitonCertificate",
    "PencilInvariants",
    "SkewPencil",
    "TwoStepAlgebra",
    "Verdict",
    "classify",
    "compute_invariants",
    "nilsoliton_residual",
    "synthesize",
]
