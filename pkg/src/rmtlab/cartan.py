"""Catalog of the classical symmetric-space triplets and their radial geometry.

Every row of the catalog is a triplet of spaces (positive, zero and negative
curvature) sharing one restricted root system with multiplicities
(m_ordinary, m_long, m_short).  The radial part of the metric is encoded in
the Jacobian

    J0(q)     = prod_alpha (q.alpha)^m_alpha                  flat
    Jminus(q) = prod_alpha (sinh(a q.alpha)/a)^m_alpha        negative curvature
    Jplus(q)  = prod_alpha (sin(a q.alpha)/a)^m_alpha         positive curvature

over positive roots, and the radial Laplace-Beltrami operator is

    D f = J^{-1} sum_d  d/dq_d ( J  d f/dq_d )

summed over the independent radial axes.  The operator is discretized in
flux form with the Jacobian evaluated at half-grid points, which keeps the
discrete operator self-adjoint with respect to the weight J.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .roots import RootSystem, build_root_system, rho_vector

CURVATURES = (1, 0, -1)


class CartanError(ValueError):
    pass


class ChamberError(CartanError):
    """Radial point not strictly inside the Weyl chamber."""


class CurvatureDomainError(CartanError):
    """Radial point outside the domain of the positive-curvature Jacobian."""


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricSpaceEntry:
    """One symmetric space: a catalog row pinned to one curvature sign.

    The triplet returned by catalog_lookup shares compact_name,
    noncompact_name, the restricted root family and the multiplicities;
    only curvature and ensemble_tag differ across the three entries.
    """

    cartan_class: str
    curvature: int
    compact_name: str
    noncompact_name: str
    restricted_family: str
    rank: int
    m_ordinary: int
    m_long: int
    m_short: int
    ensemble_tag: str
    parameters: dict = field(default_factory=dict)

    def root_system(self) -> RootSystem:
        return build_root_system(self.restricted_family, self.rank,
                                 m_ordinary=self.m_ordinary,
                                 m_long=self.m_long,
                                 m_short=self.m_short)

    def rho(self) -> np.ndarray:
        return rho_vector(self.root_system())

    def multiplicities(self) -> tuple:
        return (self.m_ordinary, self.m_long, self.m_short)

    @property
    def space_name(self) -> str:
        if self.curvature > 0:
            return self.compact_name
        if self.curvature < 0:
            return self.noncompact_name
        return f"flat tangent space of {self.noncompact_name}"


CARTAN_CLASSES = ("A", "AI", "AII", "AIII", "B", "C", "CI", "CII",
                  "D", "DIII-even", "DIII-odd", "BDI")

_NEEDS_PQ = {"AIII", "CII", "BDI"}


def _restricted_family(cls, N=None, p=None, q=None):
    """(family, rank, (m_o, m_l, m_s)) for the class at given parameters."""
    if cls in ("A", "AI", "AII"):
        mo = {"A": 2, "AI": 1, "AII": 4}[cls]
        return "A", N - 1, (mo, 0, 0)
    if cls == "AIII":
        nu = p - q
        if nu > 0:
            return "BC", q, (2, 1, 2 * nu)
        return "C", q, (2, 1, 0)
    if cls == "B":
        return "B", N, (2, 0, 2)
    if cls == "C":
        return "C", N, (2, 2, 0)
    if cls == "CI":
        return "C", N, (1, 1, 0)
    if cls == "CII":
        nu = p - q
        if nu > 0:
            return "BC", q, (4, 3, 4 * nu)
        return "C", q, (4, 3, 0)
    if cls == "D":
        return "D", N, (2, 0, 0)
    if cls == "DIII-even":
        return "C", N, (4, 1, 0)
    if cls == "DIII-odd":
        return "BC", N, (4, 1, 4)
    if cls == "BDI":
        nu = p - q
        if nu > 0:
            return "B", q, (1, 0, nu)
        return "D", q, (1, 0, 0)
    raise CartanError(f"unknown Cartan class {cls!r}")


def _space_names(cls, N=None, p=None, q=None):
    """(compact, noncompact) coset names of the row."""
    if cls == "A":
        return f"SU({N})", f"SL({N},C)/SU({N})"
    if cls == "AI":
        return f"SU({N})/SO({N})", f"SL({N},R)/SO({N})"
    if cls == "AII":
        return f"SU({2*N})/USp({2*N})", f"SU*({2*N})/USp({2*N})"
    if cls == "AIII":
        return (f"SU({p+q})/(SU({p})xSU({q})xU(1))",
                f"SU({p},{q})/(SU({p})xSU({q})xU(1))")
    if cls == "B":
        return f"SO({2*N+1})", f"SO({2*N+1},C)/SO({2*N+1})"
    if cls == "C":
        return f"USp({2*N})", f"Sp({2*N},C)/USp({2*N})"
    if cls == "CI":
        return (f"USp({2*N})/(SU({N})xU(1))",
                f"Sp({2*N},R)/(SU({N})xU(1))")
    if cls == "CII":
        return (f"USp({2*p+2*q})/(USp({2*p})xUSp({2*q}))",
                f"USp({2*p},{2*q})/(USp({2*p})xUSp({2*q}))")
    if cls == "D":
        return f"SO({2*N})", f"SO({2*N},C)/SO({2*N})"
    if cls == "DIII-even":
        return (f"SO({4*N})/(SU({2*N})xU(1))",
                f"SO*({4*N})/(SU({2*N})xU(1))")
    if cls == "DIII-odd":
        return (f"SO({4*N+2})/(SU({2*N+1})xU(1))",
                f"SO*({4*N+2})/(SU({2*N+1})xU(1))")
    if cls == "BDI":
        return (f"SO({p+q})/(SO({p})xSO({q}))",
                f"SO({p},{q})/(SO({p})xSO({q}))")
    raise CartanError(f"unknown Cartan class {cls!r}")


def _ensemble_tags(cls, N=None, p=None, q=None):
    """Display tags of the random-matrix realizations attached to each
    curvature sign (circular / Gaussian-like / transfer and friends);
    blank where no standard realization is attached."""
    nu = (p - q) if (p is not None and q is not None) else 0
    table = {
        "A": ("C+_{2,0,0}", "G0_{2,0,0}", "T-_{2,0,0}"),
        "AI": ("C+_{1,0,0}", "G0_{1,0,0}", "T-_{1,0,0}"),
        "AII": ("C+_{4,0,0}", "G0_{4,0,0}", "T-_{4,0,0}"),
        "AIII": ("S+_{2,1,0}", f"chi0_{{2,1,{2*nu}}}", "T-_{2,1,0}"),
        "B": ("", "P0_{2,0,2}", ""),
        "C": ("B+_{2,2,0}", "B0_{2,2,0}", "T-_{2,2,0}"),
        "CI": ("B+_{1,1,0}", "B0_{1,1,0}", "T-_{1,1,0}"),
        "CII": ("", f"chi0_{{4,3,{4*nu}}}", "T-_{4,3,0}"),
        "D": ("B+_{2,0,0}", "B0_{2,0,0}", "T-_{2,0,0}"),
        "DIII-even": ("B+_{4,1,0}", "B0_{4,1,0}", "T-_{4,1,0}"),
        "DIII-odd": ("", "P0_{4,1,4}", ""),
        "BDI": ("", f"chi0_{{1,0,{nu}}}", "T-_{1,0,0}"),
    }
    return table[cls]


def catalog_lookup(cartan_class: str, N=None, p=None, q=None) -> tuple:
    """The (positive, zero, negative)-curvature entries of one catalog row.

    Classes AIII, CII, BDI take a split (p, q) with p >= q >= 1; the others
    take a single size parameter N.
    """
    cls = cartan_class.replace("_", "-")
    if cls not in CARTAN_CLASSES:
        raise CartanError(f"unknown Cartan class {cartan_class!r}; "
                          f"expected one of {CARTAN_CLASSES}")
    if cls in _NEEDS_PQ:
        if p is None or q is None:
            raise CartanError(f"class {cls} needs a split (p, q)")
        if not (p >= q >= 1):
            raise CartanError(f"class {cls} needs p >= q >= 1, got ({p}, {q})")
        if cls == "BDI" and p == q and q < 2:
            raise CartanError("BDI with p = q needs q >= 2 (D_1 is empty)")
        params = {"p": int(p), "q": int(q)}
    else:
        if N is None:
            raise CartanError(f"class {cls} needs a size parameter N")
        if cls in ("A", "AI", "AII") and N < 2:
            raise CartanError(f"class {cls} needs N >= 2")
        if cls == "D" and N < 2:
            raise CartanError("class D needs N >= 2 (D_1 is empty)")
        if N < 1:
            raise CartanError(f"class {cls} needs N >= 1")
        params = {"N": int(N)}

    family, rank, (mo, ml, ms) = _restricted_family(cls, N=N, p=p, q=q)
    compact, noncompact = _space_names(cls, N=N, p=p, q=q)
    tags = _ensemble_tags(cls, N=N, p=p, q=q)
    entries = []
    for curv, tag in zip(CURVATURES, tags):
        entries.append(SymmetricSpaceEntry(
            cartan_class=cls, curvature=curv,
            compact_name=compact, noncompact_name=noncompact,
            restricted_family=family, rank=rank,
            m_ordinary=mo, m_long=ml, m_short=ms,
            ensemble_tag=tag, parameters=dict(params)))
    return tuple(entries)


def catalog_rows(N: int = 4, pq: tuple = (5, 3)) -> list:
    """All twelve catalog rows instantiated at concrete sizes."""
    rows = []
    for cls in CARTAN_CLASSES:
        if cls in _NEEDS_PQ:
            rows.append(catalog_lookup(cls, p=pq[0], q=pq[1]))
        else:
            rows.append(catalog_lookup(cls, N=N))
    return rows


# ---------------------------------------------------------------------------
# radial Jacobians
# ---------------------------------------------------------------------------

def _as_root_system(space):
    """Accept a SymmetricSpaceEntry or a bare RootSystem; return
    (root_system, curvature or None)."""
    if isinstance(space, SymmetricSpaceEntry):
        return space.root_system(), space.curvature
    if isinstance(space, RootSystem):
        return space, None
    raise CartanError(f"expected SymmetricSpaceEntry or RootSystem, "
                      f"got {type(space).__name__}")


def log_radial_jacobian(space, q, curvature=None, a: float = 1.0,
                        tol: float = 1e-12):
    """log J at one point or a batch of points (last axis = coordinates).

    `space` is a SymmetricSpaceEntry (curvature defaults to the entry's) or
    a RootSystem (curvature must be given).  Computed in log space, one term
    per positive root: m_alpha * log of (q.alpha), sinh(a q.alpha)/a or
    sin(a q.alpha)/a.  All pairings are strictly positive inside the
    chamber, so every factor is positive and no sign bookkeeping survives;
    a pairing at or below zero raises ChamberError.
    """
    rs, default_curv = _as_root_system(space)
    if curvature is None:
        curvature = default_curv
    if curvature not in CURVATURES:
        raise CartanError(f"curvature must be one of {CURVATURES}")
    if a <= 0:
        raise CartanError("scale parameter a must be positive")
    q = np.asarray(q, dtype=float)
    squeeze = q.ndim == 1
    if q.shape[-1] != rs.dim:
        raise CartanError(f"point dimension {q.shape[-1]} != ambient {rs.dim}")
    pair = q @ rs.positive_roots().T
    if np.any(pair <= tol):
        raise ChamberError("point not strictly inside the Weyl chamber")
    if curvature == 0:
        terms = np.log(pair)
    elif curvature == -1:
        terms = np.log(np.sinh(a * pair) / a)
    else:
        if np.any(a * pair >= np.pi - tol):
            raise CurvatureDomainError(
                "a * (q.alpha) must stay below pi at positive curvature")
        terms = np.log(np.sin(a * pair) / a)
    out = terms @ rs.multiplicity_vector()
    return float(out) if squeeze else out


def radial_jacobian(space, q, curvature=None, a: float = 1.0):
    """J(q) in the requested curvature; strictly positive inside the chamber."""
    return np.exp(log_radial_jacobian(space, q, curvature=curvature, a=a))


# ---------------------------------------------------------------------------
# radial Laplace-Beltrami operator on tensor grids
# ---------------------------------------------------------------------------

@dataclass
class RadialGridFunction:
    """Function sampled on a uniform tensor-product grid inside the chamber."""

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(ax, dtype=float) for ax in self.axes)
        object.__setattr__(self, "axes", axes)
        vals = np.asarray(self.values)
        if vals.shape != tuple(len(ax) for ax in axes):
            raise CartanError(f"values shape {vals.shape} does not match axes")
        for ax in axes:
            if len(ax) < 1:
                raise CartanError("each axis needs at least 1 point")
            if len(ax) >= 2:
                d = np.diff(ax)
                if d[0] <= 0 or np.abs(d - d[0]).max() > 1e-9 * abs(d[0]):
                    raise CartanError("grid axes must be uniform and increasing")
        object.__setattr__(self, "values", vals)

    @property
    def spacings(self) -> tuple:
        return tuple(ax[1] - ax[0] for ax in self.axes)

    def meshgrid(self) -> np.ndarray:
        """Coordinates of every node, shape grid_shape + (n_axes,)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def interior(self) -> "RadialGridFunction":
        sl = tuple(slice(1, -1) for _ in self.axes)
        return RadialGridFunction(axes=tuple(ax[1:-1] for ax in self.axes),
                                  values=self.values[sl])


def radial_laplace_beltrami(space, f: RadialGridFunction, curvature=None,
                            a: float = 1.0) -> RadialGridFunction:
    """Apply J^{-1} sum_d d_d(J d_d .); the result lives on the grid shrunk
    by one node on each side of every axis.

    Second-order flux discretization with J at half-grid points:

        (D f)_i = sum_d [ J_{i+e_d/2}(f_{i+e_d} - f_i)
                          - J_{i-e_d/2}(f_i - f_{i-e_d}) ] / (J_i h_d^2)

    Only Jacobian ratios enter, so the overall J scale cancels node-wise and
    the evaluation stays overflow-safe even at high rank.
    """
    rs, default_curv = _as_root_system(space)
    if curvature is None:
        curvature = default_curv
    if curvature not in CURVATURES:
        raise CartanError(f"curvature must be one of {CURVATURES}")
    n_ax = len(f.axes)
    if n_ax != rs.dim:
        raise CartanError(f"grid has {n_ax} axes but the root system lives "
                          f"in dimension {rs.dim}")
    if any(len(ax) < 3 for ax in f.axes):
        raise CartanError("each axis needs at least 3 points to apply the "
                          "second-order stencil")
    Q = f.meshgrid()
    log_j = log_radial_jacobian(rs, Q, curvature, a=a)

    interior = tuple(slice(1, -1) for _ in range(n_ax))
    log_j0 = log_j[interior]
    vals = np.asarray(f.values, dtype=float)
    out = np.zeros_like(vals[interior])

    for d, h in enumerate(f.spacings):
        shift = np.zeros(rs.dim)
        shift[d] = 0.5 * h
        log_plus = log_radial_jacobian(rs, Q + shift, curvature, a=a)[interior]
        log_minus = log_radial_jacobian(rs, Q - shift, curvature, a=a)[interior]
        up = tuple(slice(2, None) if k == d else slice(1, -1) for k in range(n_ax))
        dn = tuple(slice(None, -2) if k == d else slice(1, -1) for k in range(n_ax))
        f0 = vals[interior]
        flux = (np.exp(log_plus - log_j0) * (vals[up] - f0)
                - np.exp(log_minus - log_j0) * (f0 - vals[dn]))
        out += flux / (h * h)

    return RadialGridFunction(axes=tuple(ax[1:-1] for ax in f.axes), values=out)


# ---------------------------------------------------------------------------
# weight exponents of the flat / positive-curvature radial measures
# ---------------------------------------------------------------------------

def laguerre_parameter(entry_or_mults) -> float:
    """(m_short + m_long - 1)/2: the exponent controlling the radial weight
    near the q = 0 wall for rank-1 chiral-type rows (Laguerre-like flat
    limit)."""
    ms, ml = _short_long(entry_or_mults)
    return 0.5 * (ms + ml - 1.0)


def jacobi_parameters(entry_or_mults) -> tuple:
    """((m_short + m_long - 1)/2, (m_long - 1)/2): the weight exponents at
    the two chamber walls q = 0 and q = pi/(2a) of a positive-curvature
    rank-1 row (Jacobi-like spectrum)."""
    ms, ml = _short_long(entry_or_mults)
    return 0.5 * (ms + ml - 1.0), 0.5 * (ml - 1.0)


def _short_long(entry_or_mults):
    if isinstance(entry_or_mults, SymmetricSpaceEntry):
        return entry_or_mults.m_short, entry_or_mults.m_long
    ms, ml = entry_or_mults
    return ms, ml
