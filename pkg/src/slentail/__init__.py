"""Decision procedures for separation-logic entailments with arrays and lists."""
from .errors import FragmentError, ParseError, ResourceExceeded
from .parser import parse_entailment, parse_heap
from .syntax import Entailment, SymbolicHeap

__all__ = [
    "Entailment",
    "FragmentError",
    "ParseError",
    "ResourceExceeded",
    "SymbolicHeap",
    "parse_entailment",
    "parse_heap",
]
