"""Random-matrix samplers: Gaussian, circular, chiral, and transfer slices.

Gaussian ensembles are drawn from the weight exp(-beta*N/(2 v^2) tr H^2),
where tr runs over the N distinct levels (for beta=4 the quaternion trace,
i.e. half the trace of the 2N x 2N complex embedding).  The per-component
variances realizing that weight exactly are

    beta=1 (real symmetric):    H_ii ~ v^2/N,    H_ij ~ v^2/(2N)
    beta=2 (hermitean):         H_ii ~ v^2/(2N), Re/Im H_ij ~ v^2/(4N)
    beta=4 (quaternion self-dual, embedded as [[A, B], [-conj(B), conj(A)]]
            with A hermitean and B complex antisymmetric):
                                A_ii ~ v^2/(4N), Re/Im A_ij, B_ij ~ v^2/(8N)

Under this convention the exact second moment over the N distinct levels is
<sum lambda^2> = v^2/beta + (N-1) v^2/2 for every beta, and the macroscopic
density converges to a semicircle of radius sqrt(2)*v.

Circular ensembles: beta=2 is Haar on U(N) (QR of a complex Ginibre matrix
with the R-diagonal phases normalized away); beta=1 is S = U^T U (symmetric
unitary); beta=4 is S = U^R U with U^R = J U^T J^T the quaternion dual
(self-dual unitary, Kramers-doubled eigenphases).

Chiral ensembles: H = [[0, W], [W^+, 0]] with a Gaussian p x q block W;
the spectrum is +/- pairs plus exactly nu = p - q zero modes.

Transfer slices (beta=2): M = diag(u,u') Gamma diag(v,v') with independent
Haar blocks and Gamma = [[sqrt(1+L), sqrt(L)], [sqrt(L), sqrt(1+L)]],
L = diag(lambda).  The thin-slice law draws lambda_i ~ Exponential(mean
delta_s) per channel: composing slices then gives d<sum lambda>/ds =
N + 2<sum lambda> exactly, the first-moment law of the scaling equation
(any lambda law with this mean and o(delta_s) variance has the same
diffusion limit).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .util import derive_seed, indexed_map

KINDS = ("gaussian", "circular", "chiral", "transfer_slice")
BETAS = (1, 2, 4)


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    beta: int
    N: int = None
    p: int = None
    q: int = None
    v: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EnsembleError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.beta not in BETAS:
            raise EnsembleError(f"beta must be one of {BETAS}, got {self.beta!r}")
        if self.kind == "chiral":
            if self.p is None or self.q is None:
                raise EnsembleError("chiral ensembles need block sizes p and q")
            if not (self.p >= self.q >= 1):
                raise EnsembleError(f"chiral needs p >= q >= 1, got ({self.p}, {self.q})")
        else:
            if self.N is None or self.N < 1:
                raise EnsembleError(f"{self.kind} needs a matrix size N >= 1")
        if self.kind == "transfer_slice" and self.beta != 2:
            raise EnsembleError("transfer slices are implemented for beta = 2 only")
        if not (self.v > 0):
            raise EnsembleError(f"scale v must be positive, got {self.v}")

    @property
    def nu(self) -> int:
        """Number of zero modes of the chiral block structure."""
        if self.kind != "chiral":
            raise EnsembleError("nu is defined for chiral ensembles only")
        return self.p - self.q

    def rng(self, draw_index: int = 0) -> np.random.Generator:
        return np.random.default_rng(derive_seed(self.seed, draw_index))


@dataclass(frozen=True)
class Spectrum:
    """Sorted levels; Kramers-degenerate beta=4 levels are stored once with
    degeneracy_stride = 2."""

    levels: np.ndarray
    degeneracy_stride: int = 1

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1:
            raise EnsembleError("levels must be a 1-d array")
        if lv.size > 1 and np.any(np.diff(lv) < 0):
            raise EnsembleError("levels must be sorted ascending")
        if self.degeneracy_stride not in (1, 2):
            raise EnsembleError("degeneracy_stride must be 1 or 2")
        object.__setattr__(self, "levels", lv)

    @property
    def n(self) -> int:
        return self.levels.size


# ---------------------------------------------------------------------------
# Gaussian ensembles
# ---------------------------------------------------------------------------

def sample_gaussian(spec: EnsembleSpec, draw_index: int = 0) -> np.ndarray:
    """One draw; beta=4 returns the 2N x 2N complex self-dual embedding."""
    if spec.kind != "gaussian":
        raise EnsembleError(f"spec kind is {spec.kind!r}, expected 'gaussian'")
    rng = spec.rng(draw_index)
    n, v = spec.N, spec.v
    if spec.beta == 1:
        g = rng.standard_normal((n, n))
        return (g + g.T) * (0.5 * v / np.sqrt(n))
    if spec.beta == 2:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return (g + g.conj().T) * (0.5 * v / np.sqrt(2.0 * n))
    # beta = 4
    s = 0.5 * v / np.sqrt(4.0 * n)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = (g + g.conj().T) * s
    f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = (f - f.T) * s
    return np.block([[a, b], [-b.conj(), a.conj()]])


# ---------------------------------------------------------------------------
# circular ensembles
# ---------------------------------------------------------------------------

def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed U(n) matrix: QR of a complex Ginibre matrix with the
    triangular factor's diagonal phases normalized to 1."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    qm, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return qm * (d / np.abs(d))


def _quaternion_dual(u: np.ndarray) -> np.ndarray:
    """U^R = J U^T J^T with J = [[0, I], [-I, 0]] on a 2N-dim space."""
    n2 = u.shape[0]
    if n2 % 2:
        raise EnsembleError("quaternion dual needs even dimension")
    n = n2 // 2
    ut = u.T
    return np.block([[ut[n:, n:], -ut[n:, :n]], [-ut[:n, n:], ut[:n, :n]]])


def sample_circular(spec: EnsembleSpec, draw_index: int = 0) -> np.ndarray:
    """One unitary draw; beta=4 returns the 2N x 2N self-dual matrix."""
    if spec.kind != "circular":
        raise EnsembleError(f"spec kind is {spec.kind!r}, expected 'circular'")
    rng = spec.rng(draw_index)
    if spec.beta == 2:
        return haar_unitary(spec.N, rng)
    if spec.beta == 1:
        u = haar_unitary(spec.N, rng)
        return u.T @ u
    u = haar_unitary(2 * spec.N, rng)
    return _quaternion_dual(u) @ u


# ---------------------------------------------------------------------------
# chiral ensembles
# ---------------------------------------------------------------------------

def sample_chiral(spec: EnsembleSpec, draw_index: int = 0) -> np.ndarray:
    """H = [[0, W], [W^+, 0]]; beta=4 uses the quaternion embedding of W,
    giving a 2(p+q)-dimensional matrix with Kramers-doubled levels."""
    if spec.kind != "chiral":
        raise EnsembleError(f"spec kind is {spec.kind!r}, expected 'chiral'")
    rng = spec.rng(draw_index)
    p, q, v = spec.p, spec.q, spec.v
    scale = v / np.sqrt(p + q)
    if spec.beta == 1:
        w = rng.standard_normal((p, q)) * scale
    elif spec.beta == 2:
        w = (rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))) \
            * (scale / np.sqrt(2.0))
    else:
        s = scale / 2.0
        w1 = (rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))) * s
        w2 = (rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))) * s
        w = np.block([[w1, w2], [-w2.conj(), w1.conj()]])
    dim_p, dim_q = w.shape
    h = np.zeros((dim_p + dim_q, dim_p + dim_q), dtype=complex)
    h[:dim_p, dim_p:] = w
    h[dim_p:, :dim_p] = w.conj().T
    return h


# ---------------------------------------------------------------------------
# transfer-matrix slices
# ---------------------------------------------------------------------------

def sigma_z(n: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


def sample_transfer_slice(spec: EnsembleSpec, delta_s: float,
                          draw_index: int = 0) -> np.ndarray:
    """One thin flux-conserving slice, M = diag(u,u') Gamma diag(v,v')."""
    if spec.kind != "transfer_slice":
        raise EnsembleError(f"spec kind is {spec.kind!r}, expected 'transfer_slice'")
    if not (delta_s > 0):
        raise EnsembleError(f"delta_s must be positive, got {delta_s}")
    rng = spec.rng(draw_index)
    n = spec.N
    lam = rng.exponential(scale=delta_s, size=n)
    return _assemble_transfer(lam,
                              haar_unitary(n, rng), haar_unitary(n, rng),
                              haar_unitary(n, rng), haar_unitary(n, rng))


def _assemble_transfer(lam, u, up, v, vp) -> np.ndarray:
    n = lam.size
    croot = np.sqrt(1.0 + lam)
    sroot = np.sqrt(lam)
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    m[:n, :n] = (u * croot) @ v
    m[:n, n:] = (u * sroot) @ vp
    m[n:, :n] = (up * sroot) @ v
    m[n:, n:] = (up * croot) @ vp
    return m


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def _dedouble(levels: np.ndarray, circular: bool, tol: float) -> np.ndarray:
    """Collapse Kramers pairs (levels sorted); returns one level per pair."""
    if levels.size % 2:
        raise EnsembleError("Kramers spectrum must have even length")
    scale = max(np.abs(levels).max(), 1.0)

    def pair_gap(lv):
        return np.abs(lv[0::2] - lv[1::2]).max()

    if pair_gap(levels) > tol * scale and circular:
        # a degenerate pair can split across the -pi/pi branch cut; rotate
        rolled = np.sort(np.where(levels < levels[0] + tol * scale,
                                  levels + 2 * np.pi, levels))
        if pair_gap(rolled) <= tol * scale:
            lv = rolled
            out = 0.5 * (lv[0::2] + lv[1::2])
            out = np.sort(np.where(out > np.pi, out - 2 * np.pi, out))
            return out
    if pair_gap(levels) > tol * scale:
        raise EnsembleError("expected Kramers-degenerate pairs, found split "
                            f"of {pair_gap(levels):.3e}")
    return 0.5 * (levels[0::2] + levels[1::2])


def eigenvalues(matrix: np.ndarray, kind: str = "gaussian",
                kramers: bool = False, tol: float = 1e-8) -> Spectrum:
    """Sorted spectrum; circular input yields eigenphases in (-pi, pi].

    kramers=True checks the double degeneracy (to 1e-10 relative) and stores
    each level once with stride 2.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise EnsembleError("matrix must be square")
    scale = max(np.abs(m).max(), 1.0)
    if kind == "circular":
        if np.abs(m @ m.conj().T - np.eye(m.shape[0])).max() > tol * scale:
            raise EnsembleError("matrix is not unitary within tolerance")
        # Schur of a normal matrix is diagonal; stable route to eigenphases
        t, _ = schur(m, output="complex")
        phases = np.sort(np.angle(np.diagonal(t)))
        levels = phases
    else:
        if np.abs(m - m.conj().T).max() > tol * scale:
            raise EnsembleError("matrix is not hermitean within tolerance")
        levels = np.linalg.eigvalsh(m)
    if kramers:
        return Spectrum(_dedouble(levels, kind == "circular", 1e-10),
                        degeneracy_stride=2)
    return Spectrum(levels)


def sample_spectrum(spec: EnsembleSpec, draw_index: int = 0) -> Spectrum:
    """Draw one matrix and diagonalize it; beta=4 spectra are de-doubled."""
    if spec.kind == "gaussian":
        h = sample_gaussian(spec, draw_index)
        return eigenvalues(h, "gaussian", kramers=spec.beta == 4)
    if spec.kind == "circular":
        s = sample_circular(spec, draw_index)
        return eigenvalues(s, "circular", kramers=spec.beta == 4)
    if spec.kind == "chiral":
        h = sample_chiral(spec, draw_index)
        return eigenvalues(h, "gaussian", kramers=spec.beta == 4)
    raise EnsembleError("transfer slices carry no spectrum of their own; "
                        "use the scaling-equation module")


def sample_spectra(spec: EnsembleSpec, n_draws: int, workers=None) -> list:
    """n_draws independent spectra; parallel across draws, order-stable."""
    return indexed_map(lambda i: sample_spectrum(spec, i), n_draws, workers)


def semicircle_radius(v: float) -> float:
    """Support radius of the large-N macroscopic density, R = sqrt(2) v.

    From the per-component variances above, each level's variance tends to
    v^2/2 for every beta; a semicircle of radius R has variance R^2/4,
    hence R = sqrt(2) v.
    """
    return np.sqrt(2.0) * v


def semicircle_density(x, v: float = 1.0):
    """Unit-mass semicircle rho(x) = 2 sqrt(R^2 - x^2) / (pi R^2)."""
    r = semicircle_radius(v)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < r
    out[inside] = 2.0 * np.sqrt(r * r - x[inside] ** 2) / (np.pi * r * r)
    return out


def mean_square_levels(spec: EnsembleSpec) -> float:
    """Exact ensemble average of sum_i lambda_i^2 over the N distinct levels
    of a Gaussian draw: v^2/beta + (N-1) v^2/2 (Gaussian moments of the
    per-component variance table)."""
    if spec.kind != "gaussian":
        raise EnsembleError("second-moment formula applies to gaussian kind")
    v2 = spec.v ** 2
    return v2 / spec.beta + 0.5 * (spec.N - 1) * v2
