"""sobtrace: Sobolev-type trace norms on closed sets, computed at grid scale.

The package provides uniform-norm cube geometry, Whitney decompositions of
cube complements, a linear Whitney-type extension operator, oscillation
packing functionals, measure-based pairwise-difference functionals, and
estimators for the intrinsic trace-norm characterizations they support,
together with a CLI harness for running equivalence experiments.
"""

__version__ = "0.1.0"
