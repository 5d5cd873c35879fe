"""rmtlab: numerics connecting hermitean random-matrix ensembles with the
radial geometry of symmetric spaces (root systems, Killing forms, radial
Laplace-Beltrami operators, spectral statistics, transfer-matrix transport
and Calogero-Sutherland models)."""

__version__ = "0.1.0"
