"""Hierarchical pi-calculus terms: normal forms, forests, typing and NDCMA encodings."""

from __future__ import annotations

from .basetypes import BaseForest, TypeEnv
from .hierarchy import phi, t_compatible_term, t_shaped
from .normal_form import NF, Seq, canonical, congruent, normalize
from .semantics import reach, successors
from .syntax import ChanType, Name, parse_term, print_term
from .typesys import infer, typecheck, typably_hierarchical

__version__ = "0.1.0"

__all__ = [
    "BaseForest", "ChanType", "NF", "Name", "Seq", "TypeEnv", "canonical", "congruent",
    "infer", "normalize", "parse_term", "phi", "print_term", "reach", "successors",
    "t_compatible_term", "t_shaped", "typably_hierarchical", "typecheck",
]
