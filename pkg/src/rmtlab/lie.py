"""Finite-dimensional Lie-algebra numerics: structure constants, Killing
forms, compactness tests, secular (characteristic-polynomial) coefficients
and quadratic Casimir operators.

Conventions
-----------
Structure constants are stored as ``c[i, j, k]``, the coefficient of X_k in
[X_i, X_j].  The Killing form is

    g_ij = sum_{r,s} c[i, s, r] c[j, r, s] = tr(ad X_i  ad X_j),

negative definite exactly for compact semisimple algebras.  Degenerate forms
(non-semisimple algebras such as the Euclidean algebra of the plane) are
reported through their signature instead of being rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ZERO_EIG_REL = 1e-10  # relative threshold separating zero Killing eigenvalues


class LieAlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class StructureConstants:
    """Structure constants c[i,j,k] of a real Lie algebra basis."""

    c: np.ndarray
    name: str = ""
    basis: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise LieAlgebraError(f"expected a (d,d,d) array, got shape {c.shape}")
        object.__setattr__(self, "c", c)
        self.validate()

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def validate(self, tol: float = 1e-12):
        c = self.c
        scale = max(1.0, np.abs(c).max())
        anti = np.abs(c + c.transpose(1, 0, 2)).max()
        if anti > tol * scale:
            raise LieAlgebraError(f"structure constants not antisymmetric ({anti:.2e})")
        # Jacobi: sum over cyclic permutations of [[X_i,X_j],X_k] vanishes
        cc = np.einsum("ijm,mkn->ijkn", c, c)
        jac = cc + cc.transpose(1, 2, 0, 3) + cc.transpose(2, 0, 1, 3)
        worst = np.abs(jac).max()
        if worst > 10 * tol * scale * scale * self.dim:
            raise LieAlgebraError(f"Jacobi identity violated ({worst:.2e})")

    def adjoint(self, i: int) -> np.ndarray:
        """Matrix of ad X_i acting on the algebra (column j -> [X_i, X_j])."""
        return self.c[i].T.copy()


def killing_form(sc: StructureConstants) -> np.ndarray:
    """Killing metric g_ij = tr(ad X_i ad X_j) from structure constants."""
    return np.einsum("isr,jrs->ij", sc.c, sc.c)


def signature(g: np.ndarray) -> tuple:
    """(n_plus, n_minus, n_zero) of a symmetric form, with a relative
    zero threshold of 1e-10."""
    g = np.asarray(g, dtype=float)
    ev = np.linalg.eigvalsh(0.5 * (g + g.T))
    scale = max(np.abs(ev).max(), 1e-300)
    zero = np.abs(ev) <= _ZERO_EIG_REL * scale
    return (int(np.sum((ev > 0) & ~zero)),
            int(np.sum((ev < 0) & ~zero)),
            int(np.sum(zero)))


def is_compact_type(sc: StructureConstants) -> bool:
    """True when the Killing form is negative definite.

    Raises for a degenerate form: compactness is a statement about
    semisimple algebras only.
    """
    g = killing_form(sc)
    n_plus, n_minus, n_zero = signature(g)
    if n_zero > 0:
        raise LieAlgebraError(
            "Killing form is degenerate (algebra not semisimple); "
            f"signature ({n_plus},{n_minus},{n_zero})")
    ev = np.linalg.eigvalsh(g)
    return bool(np.all(ev < -1e-10))


def weyl_unitary_trick(sc: StructureConstants, indices) -> StructureConstants:
    """Multiply the basis elements in ``indices`` by i and return the new
    (real) structure constants.

    This is the analytic continuation between a non-compact real form and
    its compact partner; the result must come out real or the index set was
    not a valid choice.
    """
    phase = np.ones(sc.dim, dtype=complex)
    phase[list(indices)] = 1j
    c_new = sc.c * phase[:, None, None] * phase[None, :, None] / phase[None, None, :]
    if np.abs(c_new.imag).max() > 1e-12 * max(1.0, np.abs(c_new).max()):
        raise LieAlgebraError("rotation produced complex structure constants")
    return StructureConstants(c=c_new.real, name=sc.name + "+rotated", basis=sc.basis)


def from_representation(matrices, tol: float = 1e-9) -> StructureConstants:
    """Recover structure constants from a faithful matrix representation by
    expanding every commutator in the given basis (trace inner product)."""
    mats = [np.asarray(m, dtype=complex) for m in matrices]
    d = len(mats)
    gram = np.array([[np.trace(a.conj().T @ b) for b in mats] for a in mats])
    c = np.zeros((d, d, d))
    for i in range(d):
        for j in range(d):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            rhs = np.array([np.trace(m.conj().T @ comm) for m in mats])
            coef = np.linalg.solve(gram, rhs)
            resid = comm - sum(coef[k] * mats[k] for k in range(d))
            if np.abs(resid).max() > tol * max(1.0, np.abs(comm).max()):
                raise LieAlgebraError("commutator does not close on the basis")
            if np.abs(coef.imag).max() > tol:
                raise LieAlgebraError("complex structure constants from a real basis")
            c[i, j] = coef.real
    return StructureConstants(c=c)


# ---------------------------------------------------------------------------
# secular equation and Casimir operators
# ---------------------------------------------------------------------------

def secular_coefficients(rep_matrices, t) -> np.ndarray:
    """Coefficients phi_k of det(sum_i t^i rho(X_i) - lam I) expanded as

        sum_{k=0}^{n} (-lam)^(n-k) phi_k(t)

    evaluated at the supplied t.  phi_0 = 1; the higher phi_k are the
    invariant polynomials whose functionally independent members count the
    rank of the algebra.

    The determinant is sampled at n+1 interpolation nodes and the polynomial
    in lam recovered exactly (it has degree n).
    """
    mats = [np.asarray(m, dtype=complex) for m in rep_matrices]
    t = np.asarray(t, dtype=float)
    if len(t) != len(mats):
        raise LieAlgebraError(f"{len(mats)} basis matrices but {len(t)} parameters")
    T = sum(ti * m for ti, m in zip(t, mats))
    n = T.shape[0]
    scale = max(1.0, np.linalg.norm(T, ord="fro"))
    # Chebyshev-type nodes avoid an ill-conditioned interpolation
    nodes = scale * np.cos(np.pi * (2 * np.arange(n + 1) + 1) / (2 * (n + 1)))
    vals = np.array([np.linalg.det(T - lam * np.eye(n)) for lam in nodes])
    coeffs = np.polynomial.polynomial.polyfit(nodes, vals, n)  # sum c_j lam^j
    phi = np.array([(-1.0) ** (n - k) * coeffs[n - k] for k in range(n + 1)])
    if np.abs(phi.imag).max() > 1e-9 * max(1.0, np.abs(phi).max()):
        return phi
    phi = phi.real.copy()
    phi[np.abs(phi) < 1e-12 * scale ** n] = 0.0
    return phi


def count_independent_invariants(rep_matrices, rng=None, delta: float = 1e-6) -> int:
    """Numerical count of functionally independent secular coefficients:
    the rank of the Jacobian of t -> (phi_1..phi_n) at a generic point."""
    rng = np.random.default_rng(rng)
    d = len(rep_matrices)
    t0 = rng.normal(size=d)
    base = secular_coefficients(rep_matrices, t0)[1:]
    jac = np.zeros((len(base), d))
    for a in range(d):
        dt = np.zeros(d)
        dt[a] = delta
        plus = secular_coefficients(rep_matrices, t0 + dt)[1:]
        minus = secular_coefficients(rep_matrices, t0 - dt)[1:]
        jac[:, a] = (np.real(plus) - np.real(minus)) / (2 * delta)
    s = np.linalg.svd(jac, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > 1e-6 * max(1.0, s[0])))


def quadratic_casimir(sc: StructureConstants, rep_matrices) -> np.ndarray:
    """C = g^{ij} rho(X_i) rho(X_j) in the given representation."""
    g = killing_form(sc)
    if signature(g)[2] > 0:
        raise LieAlgebraError("Killing form degenerate; Casimir needs g^{-1}")
    ginv = np.linalg.inv(g)
    mats = [np.asarray(m, dtype=complex) for m in rep_matrices]
    d = sc.dim
    n = mats[0].shape[0]
    C = np.zeros((n, n), dtype=complex)
    for i in range(d):
        for j in range(d):
            C += ginv[i, j] * (mats[i] @ mats[j])
    return C


def casimir_commutes(sc: StructureConstants, rep_matrices, tol: float = 1e-10) -> bool:
    C = quadratic_casimir(sc, rep_matrices)
    scale = max(1.0, np.abs(C).max())
    for m in rep_matrices:
        m = np.asarray(m, dtype=complex)
        if np.abs(C @ m - m @ C).max() > tol * scale * max(1.0, np.abs(m).max()):
            return False
    return True


# ---------------------------------------------------------------------------
# fixture algebras
# ---------------------------------------------------------------------------

_SQ2 = np.sqrt(2.0)


def _eps_structure(coef: float) -> np.ndarray:
    """c[i,j,k] = coef * epsilon_{ijk}."""
    c = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        c[i, j, k] = coef
        c[j, i, k] = -coef
    return c


def so3() -> StructureConstants:
    """Rotation algebra with [L_i, L_j] = (1/2) eps_{ijk} L_k.

    Killing form: -(1/2) * identity.
    """
    return StructureConstants(c=_eps_structure(0.5), name="so(3)",
                              basis=("L1", "L2", "L3"))


def so3_normalized() -> StructureConstants:
    """Rotation algebra rescaled so all structure constants are -1/sqrt(2);
    Killing form becomes exactly -identity."""
    return StructureConstants(c=_eps_structure(-1.0 / _SQ2), name="so(3) normalized",
                              basis=("S1", "S2", "S3"))


def so21() -> StructureConstants:
    """Lorentz algebra so(2,1) in the basis order (S3, S1, S2):

        [S3, S1] = +(1/sqrt2) S2,  [S1, S2] = -(1/sqrt2) S3,
        [S2, S3] = -(1/sqrt2) S1.

    Killing form: diag(+1, +1, -1) in this order.
    """
    c = np.zeros((3, 3, 3))
    for (i, j, k), coef in [((0, 1, 2), 1 / _SQ2),
                            ((1, 2, 0), -1 / _SQ2),
                            ((2, 0, 1), -1 / _SQ2)]:
        c[i, j, k] = coef
        c[j, i, k] = -coef
    return StructureConstants(c=c, name="so(2,1)", basis=("S3", "S1", "S2"))


def euclidean_e2() -> StructureConstants:
    """Euclidean algebra of the plane, basis (J, P1, P2):

        [P1, P2] = 0,  [J, P1] = -(1/sqrt2) P2,  [J, P2] = +(1/sqrt2) P1.

    The generators are normalized so the single non-zero Killing entry is
    exactly -1: the form is diag(-1, 0, 0), degenerate because translations
    are an abelian ideal.
    """
    c = np.zeros((3, 3, 3))
    for (i, j, k), coef in [((0, 1, 2), -1 / _SQ2),
                            ((0, 2, 1), 1 / _SQ2)]:
        c[i, j, k] = coef
        c[j, i, k] = -coef
    return StructureConstants(c=c, name="e(2)", basis=("J", "P1", "P2"))


def su2_ladder_basis() -> StructureConstants:
    """su(2) complexified ladder basis (J3, J+, J-) with

        [J3, J+] = (1/sqrt2) J+,  [J3, J-] = -(1/sqrt2) J-,
        [J+, J-] = (1/sqrt2) J3.

    The Killing matrix in this (non-hermitean) basis is the permutation-like
    [[1,0,0],[0,0,1],[0,1,0]]: the metric entries depend on the basis even
    though the algebra is compact.
    """
    c = np.zeros((3, 3, 3))
    for (i, j, k), coef in [((0, 1, 1), 1 / _SQ2),
                            ((0, 2, 2), -1 / _SQ2),
                            ((1, 2, 0), 1 / _SQ2)]:
        c[i, j, k] = coef
        c[j, i, k] = -coef
    return StructureConstants(c=c, name="su(2) ladder", basis=("J3", "J+", "J-"))


def so3_defining_rep() -> list:
    """The 3x3 antisymmetric generators with [L_i, L_j] = (1/2) eps L_k."""
    L1 = 0.5 * np.array([[0, 0, 0], [0, 0, 1], [0, -1, 0]], dtype=float)
    L2 = 0.5 * np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], dtype=float)
    L3 = 0.5 * np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], dtype=float)
    return [L1, L2, L3]


def so3_spin_rep(s: int) -> list:
    """Spin-s generators scaled to the [X_i, X_j] = (1/2) eps X_k convention.

    Built from the standard angular-momentum ladder construction and then
    multiplied by -i/2.
    """
    if s < 1 or int(s) != s:
        raise LieAlgebraError("spin must be a positive integer here")
    m = np.arange(s, -s - 1, -1, dtype=float)
    dim = len(m)
    Sz = np.diag(m)
    Sp = np.zeros((dim, dim))
    for k in range(dim - 1):
        mm = m[k + 1]
        Sp[k, k + 1] = np.sqrt(s * (s + 1) - mm * (mm + 1))
    Sm = Sp.T
    Sx = 0.5 * (Sp + Sm)
    Sy = -0.5j * (Sp - Sm)
    return [-0.5j * Sx, -0.5j * Sy, -0.5j * Sz]


def su2_pauli_rep() -> list:
    """Pauli matrices over two: the defining representation of su(2)."""
    s1 = np.array([[0, 1], [1, 0]], dtype=complex)
    s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
    s3 = np.array([[1, 0], [0, -1]], dtype=complex)
    return [0.5 * s1, 0.5 * s2, 0.5 * s3]


def gell_mann_matrices() -> list:
    """The eight 3x3 Gell-Mann matrices."""
    l1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    l2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
    l3 = np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex)
    l4 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    l5 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)
    l6 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    l7 = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex)
    l8 = np.array([[1, 0, 0], [0, 1, 0], [0, 0, -2]], dtype=complex) / np.sqrt(3)
    return [l1, l2, l3, l4, l5, l6, l7, l8]


def su3_symmetric_split() -> tuple:
    """The canonical decomposition su(3) = K + P under the real/imaginary
    involution: X_j = (i/2) lambda_j with K = {X2, X5, X7} (real antisymmetric,
    an so(3) subalgebra) and P the remaining five generators.

    Returns (K_matrices, P_matrices); the closure relations [K,K] in K,
    [K,P] in P, [P,P] in K hold exactly.
    """
    X = [0.5j * lam for lam in gell_mann_matrices()]
    K = [X[1], X[4], X[6]]
    P = [X[0], X[2], X[3], X[5], X[7]]
    return K, P
