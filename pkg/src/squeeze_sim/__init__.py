"""Squeezing a cavity field with a single driven three-level atom.

Submodules: ``hilbert`` (truncated Fock space), ``model`` (parameters and
Hamiltonians), ``dynamics`` (time evolution), ``analysis`` (closed forms and
diagnostics), ``cli`` (batch front end).
"""

__version__ = "0.1.0"
