"""Learning unitary post-processing matrices for quantum period finding.

Subpackages cover dense complex linear algebra (``linalg``), the
period-finding circuit simulation (``circuit``), gradient-descent training
of the post-processing matrix (``training``), echo/spectral analysis
(``analysis``), a from-scratch MLP classifier over unitaries
(``classifier``), and binary/CSV persistence plus the command line
(``io``, ``cli``).
"""

__version__ = "0.1.0"

__all__ = [
    "linalg",
    "circuit",
    "training",
    "analysis",
    "classifier",
    "io",
    "cli",
]
