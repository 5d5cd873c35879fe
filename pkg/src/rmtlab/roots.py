"""Restricted root systems of the classical families A, B, C, D and BC.

Roots are integer vectors in R^n.  A root is *positive* when its first
non-zero component is positive; the module enumerates only positive roots
(the full system is obtained by adjoining the negatives).  Root kinds are
classified by squared length:

    short    |alpha|^2 = 1      e_i
    ordinary |alpha|^2 = 2      e_i - e_j, e_i + e_j
    long     |alpha|^2 = 4      2 e_i

Each kind carries a single multiplicity, so a root system here is really a
root system with multiplicities, the data that fixes the radial geometry of
a symmetric space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("A", "B", "C", "D", "BC")

#: root kinds that can occur in each family (independently of rank)
FAMILY_KINDS = {
    "A": frozenset({"ordinary"}),
    "B": frozenset({"short", "ordinary"}),
    "C": frozenset({"ordinary", "long"}),
    "D": frozenset({"ordinary"}),
    "BC": frozenset({"short", "ordinary", "long"}),
}

_KIND_BY_LENGTH2 = {1: "short", 2: "ordinary", 4: "long"}


class RootSystemError(ValueError):
    pass


@dataclass(frozen=True)
class Root:
    """A single positive root with its kind and multiplicity."""

    vector: tuple
    kind: str
    multiplicity: int

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vector, dtype=float)

    @property
    def length_squared(self) -> int:
        return int(sum(c * c for c in self.vector))


@dataclass(frozen=True)
class RootSystem:
    """Positive roots of one of the families A, B, C, D, BC with multiplicities."""

    family: str
    rank: int
    dim: int
    roots: tuple = field(repr=False)
    multiplicities: dict = field(default_factory=dict)

    def positive_roots(self) -> np.ndarray:
        """All positive roots as a (n_roots, dim) float array."""
        return np.array([r.vector for r in self.roots], dtype=float)

    def roots_of_kind(self, kind: str) -> list:
        return [r for r in self.roots if r.kind == kind]

    @property
    def n_positive(self) -> int:
        return len(self.roots)

    def multiplicity_vector(self) -> np.ndarray:
        """Multiplicity of each positive root, aligned with positive_roots()."""
        return np.array([r.multiplicity for r in self.roots], dtype=float)


def _pair_vectors(n: int):
    """Vectors e_i - e_j and e_i + e_j for i < j (first component positive)."""
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            minus = [0] * n
            minus[i], minus[j] = 1, -1
            plus = [0] * n
            plus[i], plus[j] = 1, 1
            out.append(tuple(minus))
            out.append(tuple(plus))
    return out


def _axis_vectors(n: int, scale: int):
    out = []
    for i in range(n):
        v = [0] * n
        v[i] = scale
        out.append(tuple(v))
    return out


def build_root_system(family: str, rank: int, m_ordinary: int = 0,
                      m_long: int = 0, m_short: int = 0) -> RootSystem:
    """Construct the positive roots of a classical family with multiplicities.

    ``rank`` is the subscript of the family symbol: ``A`` with rank r lives in
    R^(r+1) (roots e_i - e_j), the other families in R^rank.  A non-zero
    multiplicity for a kind the family can never contain is an error; a kind
    that is merely absent at this rank (e.g. ordinary roots at rank 1) is
    silently unused.
    """
    if family not in FAMILIES:
        raise RootSystemError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if rank < 1:
        raise RootSystemError(f"rank must be >= 1, got {rank}")
    if family == "D" and rank < 2:
        raise RootSystemError("family D needs rank >= 2 (D_1 has no roots)")

    mult = {"ordinary": m_ordinary, "long": m_long, "short": m_short}
    for kind, m in mult.items():
        if m < 0:
            raise RootSystemError(f"negative multiplicity for {kind} roots")
        if m != 0 and kind not in FAMILY_KINDS[family]:
            raise RootSystemError(
                f"family {family} has no {kind} roots but m_{kind}={m} was given")

    if family == "A":
        dim = rank + 1
        vectors = [v for v in _pair_vectors(dim) if sum(v) == 0]
    elif family == "B":
        dim = rank
        vectors = _axis_vectors(dim, 1) + (_pair_vectors(dim) if rank >= 2 else [])
    elif family == "C":
        dim = rank
        vectors = _axis_vectors(dim, 2) + (_pair_vectors(dim) if rank >= 2 else [])
    elif family == "D":
        dim = rank
        vectors = _pair_vectors(dim)
    else:  # BC
        dim = rank
        vectors = (_axis_vectors(dim, 1) + _axis_vectors(dim, 2)
                   + (_pair_vectors(dim) if rank >= 2 else []))

    roots = []
    for v in vectors:
        l2 = sum(c * c for c in v)
        kind = _KIND_BY_LENGTH2[l2]
        roots.append(Root(vector=v, kind=kind, multiplicity=mult[kind]))

    present = {r.kind for r in roots}
    mult_present = {k: m for k, m in mult.items() if k in present}
    return RootSystem(family=family, rank=rank, dim=dim,
                      roots=tuple(roots), multiplicities=mult_present)


def weyl_reflect(mu, alpha) -> np.ndarray:
    """Reflect mu in the hyperplane orthogonal to alpha:

        mu' = mu - 2 (alpha . mu) / (alpha . alpha) * alpha
    """
    mu = np.asarray(mu, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    a2 = alpha @ alpha
    if a2 == 0.0:
        raise RootSystemError("cannot reflect in the zero vector")
    return mu - (2.0 * (alpha @ mu) / a2) * alpha


def rho_vector(rs: RootSystem) -> np.ndarray:
    """Half the multiplicity-weighted sum of positive roots,

        rho = 1/2 sum_{alpha > 0} m_alpha alpha.
    """
    rho = np.zeros(rs.dim)
    for r in rs.roots:
        rho += 0.5 * r.multiplicity * r.as_array()
    return rho


def in_chamber(rs: RootSystem, q, tol: float = 0.0) -> bool:
    """True when q pairs strictly positively with every positive root."""
    q = np.asarray(q, dtype=float)
    if q.shape != (rs.dim,):
        raise RootSystemError(f"point has shape {q.shape}, expected ({rs.dim},)")
    pr = rs.positive_roots()
    return bool(np.all(pr @ q > tol))


def positive_root_count(family: str, rank: int) -> int:
    """Closed-form number of positive roots."""
    n = rank
    if family == "A":
        return (n + 1) * n // 2
    if family in ("B", "C"):
        return n * n
    if family == "D":
        return n * (n - 1)
    if family == "BC":
        return n * n + n
    raise RootSystemError(f"unknown family {family!r}")
