"""Damping of a trapped impurity by a finite Bose-Einstein condensate.

The package computes the bath correlation function of a trapped condensate
from Gross-Pitaevskii dynamics, turns it into a memory kernel and spectral
density, and solves the impurity's equation of motion with memory. Closed
forms for the homogeneous gas and a delayed-return toy model serve as
references.
"""

__version__ = "0.1.0"
