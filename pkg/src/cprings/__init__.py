"""Exact symbolic Toeplitz and Cuntz-Pimsner rings over finitely presented R-systems.

The package is layered bottom-up:

- exactlin: dense exact linear algebra over Q (RREF, subspaces, quotients)
- rsystem: structure-constant presentations of rings, bimodules, pairings
- tensorpow: balanced tensor powers of the module legs and the iterated pairing
- finrank: finite-rank operator calculus (theta operators, Delta, (FS) checks)
- toeplitz: the graded Toeplitz ring, its product, and the Fock representation
- cpring: relative Cuntz-Pimsner quotients, defect-ideal membership, gauge action
- ideals: T-pairs, quotient systems, the graded-ideal correspondence
- graphalg: finite graphs, Leavitt path algebra normal forms (closed-form backend)
- crossedprod: skew Laurent / crossed product backend for automorphism systems
- cli: the `cpr` command line front end
"""

from . import exactlin, rsystem, tensorpow, finrank, toeplitz, cpring, ideals
from . import graphalg, crossedprod

__all__ = [
    "exactlin",
    "rsystem",
    "tensorpow",
    "finrank",
    "toeplitz",
    "cpring",
    "ideals",
    "graphalg",
    "crossedprod",
]

__version__ = "0.1.0"
