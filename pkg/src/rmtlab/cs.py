"""Calogero-Sutherland models built from root systems, and the operator
mapping onto radial Laplace-Beltrami operators.

A CS model describes n particles q = (q^1, ..., q^n) with Hamiltonian

    H = -1/2 sum_i d^2/d(q^i)^2  +  sum_{alpha in R+} g_alpha^2 v(q.alpha)

where R+ are the positive roots of a root system and the pair potential is
one of

    inverse_square:  v(xi) = xi^-2          (flat,     curvature  0)
    hyperbolic:      v(xi) = sinh^-2(xi)    (negative, curvature -1)
    trigonometric:   v(xi) = sin^-2(xi)     (positive, curvature +1)

Coupling constants are constant on Weyl orbits, i.e. one g^2 per root kind
(short / ordinary / long).  For the special "root values"

    g_alpha^2 = m_alpha (m_alpha + 2 m_{2alpha} - 2) |alpha|^2 / 8

(m_{2alpha} is the multiplicity of the doubled root when 2 alpha is again a
root, which happens only for the short roots of BC, and 0 otherwise) the
Hamiltonian is equivalent to the radial Laplace-Beltrami operator of the
symmetric space with the same root data:

    H = -1/2 J^{1/2} (Delta'_B + sign * rho^2) J^{-1/2},

with J the radial Jacobian of matching curvature, rho = 1/2 sum m_alpha
alpha, and sign = +1 (hyperbolic), -1 (trigonometric), while rho^2 is
dropped in the flat case.  The sign structure follows from the rank-1
computation: with u = log J^{1/2},

    J^{1/2} Delta'_B J^{-1/2} = Laplacian - sum_i [(d_i u)^2 + d_i^2 u],

and for J = sinh^m the bracket is rho^2 + m(m-2) sinh^-2 / 4 per root,
so adding rho^2 before conjugating cancels the constant and the potential
term carries the root-value coupling.  (Some references quote the identity
without the overall minus sign; applied to f = exp(-q^2) at the free point
m = 2 only the form above reproduces -1/2 Laplacian, which fixes it.)

The equivalence holds *only* at the root values (Olshanetsky-Perelomov),
so `op_mapping_residual` refuses other couplings.  The residual of the
discretized identity is O(h^2), which is what tests and the `cs-check`
CLI verify by halving h.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .roots import RootSystem, rho_vector
from .cartan import (RadialGridFunction, log_radial_jacobian,
                     radial_laplace_beltrami)

__all__ = [
    "CSError", "POTENTIALS", "CSModel", "root_value_couplings",
    "potential_values", "cs_apply", "mapping_sides", "op_mapping_residual",
]

#: potential kind -> curvature of the matching symmetric-space Jacobian
POTENTIALS = {"inverse_square": 0, "hyperbolic": -1, "trigonometric": 1}

_SINGULAR_TOL = 1e-12


class CSError(ValueError):
    pass


@dataclass(frozen=True)
class CSModel:
    """A root system, a pair-potential kind and one coupling g^2 per root
    kind.  Couplings constant across a root kind is exactly invariance
    under the Weyl group, which permutes roots of equal length."""

    root_system: RootSystem
    potential: str
    couplings: dict = field(repr=False)

    def __post_init__(self):
        if self.potential not in POTENTIALS:
            raise CSError(f"unknown potential {self.potential!r}; expected "
                          f"one of {tuple(POTENTIALS)}")
        kinds = {r.kind for r in self.root_system.roots}
        if set(self.couplings) != kinds:
            raise CSError(f"couplings must carry exactly the root kinds "
                          f"{sorted(kinds)}, got {sorted(self.couplings)}")
        for kind, g2 in self.couplings.items():
            if not math.isfinite(g2):
                raise CSError(f"coupling for {kind} roots is not finite")

    @property
    def curvature(self) -> int:
        return POTENTIALS[self.potential]

    def coupling_per_root(self) -> np.ndarray:
        """g^2 for each positive root, aligned with positive_roots()."""
        return np.array([self.couplings[r.kind]
                         for r in self.root_system.roots])


def root_value_couplings(root_system: RootSystem) -> dict:
    """The couplings for which the model maps onto Delta'_B,

        g^2 = m (m + 2 m_2 - 2) |alpha|^2 / 8  per root kind,

    where m_2 is the multiplicity of 2*alpha when that is again a root
    (short roots of BC have a long partner at twice the vector) and 0
    otherwise -- absence of a doubled root is the generic case, not an
    error."""
    doubled = {}
    vectors = {r.vector: r.multiplicity for r in root_system.roots}
    for r in root_system.roots:
        twice = tuple(2 * c for c in r.vector)
        doubled[r.kind] = vectors.get(twice, 0)
    out = {}
    for r in root_system.roots:
        m = r.multiplicity
        out[r.kind] = m * (m + 2 * doubled[r.kind] - 2) * r.length_squared / 8.0
    return out


def _pair_potential(pair: np.ndarray, potential: str) -> np.ndarray:
    """v(q.alpha) elementwise; raises on singular arguments.  The
    trigonometric potential is only defined on the fundamental cell
    0 < q.alpha < pi (the sin^-2 singularities tile the rest)."""
    if potential == "trigonometric":
        if np.any(pair <= _SINGULAR_TOL) or np.any(pair >= np.pi - _SINGULAR_TOL):
            raise CSError("singular node: q.alpha must stay inside the "
                          "fundamental cell (0, pi) for the trigonometric "
                          "potential")
        return 1.0 / np.sin(pair) ** 2
    if np.any(np.abs(pair) <= _SINGULAR_TOL):
        raise CSError("singular node: q.alpha = 0 on the grid")
    if potential == "inverse_square":
        return 1.0 / pair ** 2
    return 1.0 / np.sinh(pair) ** 2


def potential_values(model: CSModel, q) -> np.ndarray:
    """sum_alpha g_alpha^2 v(q.alpha) at one point or a batch (last axis =
    coordinates).  Evaluated wherever non-singular; only the grid operator
    `cs_apply` insists on the trigonometric fundamental cell, so Weyl
    images of a point (which flip pairings) remain evaluable through the
    evenness of xi^-2 and sinh^-2."""
    rs = model.root_system
    q = np.asarray(q, dtype=float)
    squeeze = q.ndim == 1
    if q.shape[-1] != rs.dim:
        raise CSError(f"point dimension {q.shape[-1]} != ambient {rs.dim}")
    pair = q @ rs.positive_roots().T
    if model.potential == "trigonometric":
        if np.any(np.abs(np.sin(pair)) <= _SINGULAR_TOL):
            raise CSError("singular node: sin(q.alpha) = 0")
        terms = 1.0 / np.sin(pair) ** 2
    else:
        terms = _pair_potential(np.abs(pair), model.potential)
    out = terms @ model.coupling_per_root()
    return float(out) if squeeze else out


def cs_apply(model: CSModel, f: RadialGridFunction) -> RadialGridFunction:
    """Apply H = -1/2 sum_i d_i^2 + V to a grid function; second-order
    central differences, so the result lives on the grid shrunk by one
    node on each side of every axis (same convention as
    radial_laplace_beltrami, which keeps the two sides comparable)."""
    rs = model.root_system
    n_ax = len(f.axes)
    if n_ax != rs.dim:
        raise CSError(f"grid has {n_ax} axes but the root system lives in "
                      f"dimension {rs.dim}")
    if any(len(ax) < 3 for ax in f.axes):
        raise CSError("each axis needs at least 3 points for the stencil")
    interior = tuple(slice(1, -1) for _ in range(n_ax))
    vals = np.asarray(f.values, dtype=float)
    f0 = vals[interior]
    out = np.zeros_like(f0)
    for d, h in enumerate(f.spacings):
        up = tuple(slice(2, None) if k == d else slice(1, -1)
                   for k in range(n_ax))
        dn = tuple(slice(None, -2) if k == d else slice(1, -1)
                   for k in range(n_ax))
        out -= 0.5 * (vals[up] - 2.0 * f0 + vals[dn]) / (h * h)
    Q = f.meshgrid()[interior]
    pair = Q @ rs.positive_roots().T
    v = _pair_potential(pair, model.potential) @ model.coupling_per_root()
    out += v * f0
    return RadialGridFunction(axes=tuple(ax[1:-1] for ax in f.axes),
                              values=out)


def _require_root_values(model: CSModel):
    target = root_value_couplings(model.root_system)
    for kind, g2 in target.items():
        if abs(model.couplings[kind] - g2) > 1e-12 * max(1.0, abs(g2)):
            raise CSError(
                f"mapping undefined off root values: coupling for {kind} "
                f"roots is {model.couplings[kind]}, root value is {g2}")


def mapping_sides(model: CSModel, f: RadialGridFunction):
    """Both sides of the operator identity on the interior grid:

        lhs = (H f)                       from cs_apply,
        rhs = -1/2 J^{1/2} (Delta'_B + sign rho^2) (J^{-1/2} f),

    sign = +1 hyperbolic / -1 trigonometric / rho dropped flat.  Requires
    couplings at the root values and the grid strictly inside the Weyl
    chamber (J > 0)."""
    _require_root_values(model)
    rs = model.root_system
    lhs = cs_apply(model, f)

    log_j = log_radial_jacobian(rs, f.meshgrid(), curvature=model.curvature)
    g = RadialGridFunction(f.axes, f.values * np.exp(-0.5 * log_j))
    lb = radial_laplace_beltrami(rs, g, curvature=model.curvature)
    interior = tuple(slice(1, -1) for _ in f.axes)
    inner = lb.values
    if model.potential != "inverse_square":
        sign = 1.0 if model.potential == "hyperbolic" else -1.0
        rho = rho_vector(rs)
        inner = inner + sign * float(rho @ rho) * g.values[interior]
    rhs = -0.5 * np.exp(0.5 * log_j[interior]) * inner
    return lhs.values, rhs


def op_mapping_residual(model: CSModel, f: RadialGridFunction,
                        curvature=None) -> float:
    """Max relative residual max|lhs - rhs| / max|lhs| of the identity on
    the interior grid.  O(h^2) in the grid spacing; `curvature`, when
    given, must agree with the model's potential (it is implied by it)."""
    if curvature is not None and curvature != model.curvature:
        raise CSError(f"curvature {curvature} contradicts the "
                      f"{model.potential} potential "
                      f"(curvature {model.curvature})")
    lhs, rhs = mapping_sides(model, f)
    scale = np.max(np.abs(lhs))
    if scale == 0.0:
        raise CSError("test function produced identically zero H f")
    return float(np.max(np.abs(lhs - rhs)) / scale)
