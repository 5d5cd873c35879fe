"""Transmission-eigenvalue flow of a disordered wire.

State: N channels with transmission eigenvalues T_i = 1/(1 + lambda_i),
lambda_i = sinh^2 x_i >= 0, dimensionless length s = L/l, and
gamma = beta N + 2 - beta.  Conductance G/G0 = sum_i T_i.

The length evolution of P({lambda_i}, s) is the Fokker-Planck equation

    dP/ds = (2/gamma) sum_i d_i [ lambda_i (1 + lambda_i) J d_i (P/J) ],
    J = prod_{i<j} |lambda_j - lambda_i|^beta.

Expanding the divergence form gives the equivalent Ito process used by the
Monte Carlo oracle:

    d lambda_i = A_i ds + sqrt(2 B_i) dW_i,
    B_i = (2/gamma) lambda_i (1 + lambda_i),
    A_i = B_i'(lambda_i) + beta B_i sum_{j != i} 1/(lambda_i - lambda_j).

First-moment identity (integrator oracle, exact for every beta): pairing the
interaction terms, B_i/(l_i - l_j) + B_j/(l_j - l_i) = (2/gamma)(1 + l_i + l_j),
so d<sum lambda>/ds = (2/gamma) [N + 2 sum + beta ((N-1) sum + N(N-1)/2)]
                    = N + 2 <sum lambda>        (gamma cancels exactly),
hence <sum lambda>(s) = (N/2)(e^{2s} - 1).

For beta = 2 the solution is known in closed form: with lambda = sinh^2 x,

    P({x_n}, s) = C(s) prod_{i<j}(sinh^2 x_j - sinh^2 x_i) prod_k sinh 2x_k
                  x Det[ I_m(x_n) ],
    I_m(x) = int_0^inf dk e^{-k^2 s / 4N} tanh(pi k/2) k^{2m-1}
             P_{(ik-1)/2}(cosh 2x),         m, n = 1..N,

where P with degree (ik-1)/2 = -1/2 + i(k/2) is the conical Legendre
function of the first kind.  It is evaluated through the integral
representation

    P_{-1/2+i tau}(cosh xi)
        = (2/pi) int_0^xi cos(tau t) / sqrt(2 cosh xi - 2 cosh t) dt,

where substituting sinh(t/2) = sinh(xi/2) sin(theta) removes the endpoint
singularity:

    = (2/pi) int_0^{pi/2} cos(tau t(theta)) / sqrt(1 + sinh^2(xi/2) sin^2 theta)
      d theta,   t(theta) = 2 asinh(sinh(xi/2) sin theta).

A third, independent route multiplies thin-slice transfer matrices from the
ensembles module and reads lambda off Q = (M^dag M + (M^dag M)^{-1} - 2)/4;
the inverse is obtained without inversion from the flux identity
(M^dag M)^{-1} = Sigma_z M^dag M Sigma_z.

Finally, conjugating the generator by J^{1/2} (now in x coordinates, with
the full Jacobian prod|sinh^2 x_j - sinh^2 x_i|^beta prod sinh 2x_k) turns
the flow into imaginary-time Schroedinger evolution; for beta = 2 the pair
interactions cancel and the Hamiltonian decouples into
H0 = -(1/2 gamma) (d^2/dx^2 + 1/sinh^2 2x) per channel plus a constant
U = -rho^2/(2 gamma) fixed by the half-sum of restricted roots.  The
radial Laplace-Beltrami operator is taken from the cartan module, making
the check a cross-module identity.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import cartan
from .ensembles import EnsembleSpec, sample_transfer_slice, sigma_z
from .util import indexed_map, rng_for

_EPS_STAGGER = 1e-8
_COLLISION_TOL = 1e-12


class DmpkError(ValueError):
    pass


def gamma_factor(beta: int, N: int) -> int:
    if beta not in (1, 2, 4):
        raise DmpkError(f"beta must be 1, 2 or 4, got {beta}")
    if N < 1:
        raise DmpkError("need at least one channel")
    return beta * N + 2 - beta


@dataclass(frozen=True)
class DMPKState:
    N: int
    beta: int
    s: float
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        gamma_factor(self.beta, self.N)  # validates beta, N
        if lam.shape != (self.N,):
            raise DmpkError(f"expected {self.N} eigenvalues, got {lam.shape}")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise DmpkError("lambda_i must be finite and non-negative")
        if self.s < 0:
            raise DmpkError("wire length s must be non-negative")
        object.__setattr__(self, "lambdas", lam)

    @property
    def gamma(self) -> int:
        return gamma_factor(self.beta, self.N)

    @property
    def transmissions(self) -> np.ndarray:
        return 1.0 / (1.0 + self.lambdas)


def lambda_T_x_maps(value, source: str, target: str):
    """Exact algebraic maps among T = 1/(1+lambda), lambda = sinh^2 x."""
    names = ("T", "lambda", "x")
    if source not in names or target not in names:
        raise DmpkError(f"coordinates must be one of {names}")
    v = np.asarray(value, dtype=float)
    scalar = v.ndim == 0
    v = np.atleast_1d(v)
    if source == "T":
        if np.any(v <= 0) or np.any(v > 1):
            raise DmpkError("T must lie in (0, 1]")
        lam = (1.0 - v) / v
    elif source == "lambda":
        if np.any(v < 0):
            raise DmpkError("lambda must be non-negative")
        lam = v
    else:
        if np.any(v < 0):
            raise DmpkError("x must be non-negative")
        lam = np.sinh(v) ** 2
    if target == "T":
        out = 1.0 / (1.0 + lam)
    elif target == "lambda":
        out = lam
    else:
        out = np.arcsinh(np.sqrt(lam))
    return float(out[0]) if scalar else out


def conductance(state) -> float:
    """Landauer conductance G/G0 = sum_i T_i."""
    lam = state.lambdas if isinstance(state, DMPKState) else np.asarray(state)
    return float(np.sum(1.0 / (1.0 + lam)))


def mean_conductance(states) -> tuple:
    g = np.array([conductance(s) for s in states])
    return float(g.mean()), float(g.std(ddof=1) / math.sqrt(g.size))


# ---------------------------------------------------------------------------
# conical Legendre function
# ---------------------------------------------------------------------------

def _theta_panels():
    """Composite Gauss-Legendre grid on [0, pi/2], geometrically refined
    toward 0 where the integrand concentrates for large xi (peak width
    ~ 1/sinh(xi/2), down to ~4e-9 at xi = 40)."""
    base_x, base_w = np.polynomial.legendre.leggauss(24)
    edges = np.concatenate([[0.0], 1e-9 * 2.0 ** np.arange(31)])
    edges = np.append(edges[edges < 1.0], 1.0) * 0.5 * np.pi
    theta, wgt = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        theta.append(0.5 * (b - a) * (base_x + 1.0) + a)
        wgt.append(0.5 * (b - a) * base_w)
    return np.concatenate(theta), np.concatenate(wgt)


_GL_THETA, _GL_W = _theta_panels()


def conical_legendre(tau, xi):
    """P_{-1/2 + i tau}(cosh xi) for tau >= 0, xi >= 0 (P_nu(1) = 1).

    Integral representation with the endpoint singularity removed by the
    substitution sinh(t/2) = sinh(xi/2) sin(theta); composite Gauss-Legendre
    refined toward theta = 0.
    """
    tau_a = np.asarray(tau, dtype=float)
    xi_a = np.asarray(xi, dtype=float)
    if np.any(tau_a < 0):
        raise DmpkError("tau must be non-negative")
    if np.any(xi_a < 0):
        raise DmpkError("xi must be non-negative")
    scalar = tau_a.ndim == 0 and xi_a.ndim == 0
    tau_b, xi_b = np.broadcast_arrays(tau_a, xi_a)
    shape = tau_b.shape
    tau_f, xi_f = tau_b.ravel(), xi_b.ravel()
    out = np.empty(tau_f.size)
    chunk = max(1, 4_000_000 // _GL_THETA.size)
    for lo in range(0, tau_f.size, chunk):
        sl = slice(lo, lo + chunk)
        r = np.sinh(0.5 * xi_f[sl])[:, None] * np.sin(_GL_THETA)
        t = 2.0 * np.arcsinh(r)
        integrand = np.cos(tau_f[sl][:, None] * t) / np.sqrt(1.0 + r * r)
        out[sl] = (2.0 / np.pi) * (integrand @ _GL_W)
    val = out.reshape(shape)
    return float(val) if scalar else val


# ---------------------------------------------------------------------------
# exact beta = 2 density
# ---------------------------------------------------------------------------

def _k_quadrature(N: int, s: float, k_max: float = None, n_nodes: int = 800):
    """Composite Gauss rule on [0, k_max].  The k-integrals I_m(x) decay to
    ~e^{-x^2 N/s}, so the truncation floor e^{-k_max^2 s/4N} must sit below
    that out to the largest x of interest: k_max = 16 sqrt(N/s) keeps the
    evaluation clean to x ~ 8 s/N (verified by doubling tests)."""
    if k_max is None:
        k_max = 16.0 * math.sqrt(N / s)
    panels = 20
    per = n_nodes // panels
    base_x, base_w = np.polynomial.legendre.leggauss(per)
    edges = np.linspace(0.0, k_max, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * (base_x + 1.0) + a)
        weights.append(0.5 * (b - a) * base_w)
    return np.concatenate(nodes), np.concatenate(weights)


def exact_beta2_density(N: int, s: float, x, k_max: float = None,
                        n_nodes: int = 400):
    """Unnormalized exact beta=2 solution P({x_n}, s) at chamber points.

    x has shape (N,) or (n_points, N); coordinates must be positive and
    distinct but may come in any order (the density is symmetric, rows are
    sorted internally).  Prefactors are accumulated in log space; the
    determinant uses slogdet.
    The overall orientation (the row order of the determinant) is fixed so
    the density is positive on the chamber: factor (-1)^{N(N-1)/2}.  Far in
    the tails, where the true density is smaller than ~1e-16 times the
    determinant entries, the value is float-cancellation noise; callers
    integrating moments should window accordingly.
    """
    if not (1 <= N <= 4):
        raise DmpkError("exact density implemented for N <= 4")
    if s <= 0:
        raise DmpkError("need s > 0")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[1] != N:
        raise DmpkError(f"points must have {N} coordinates")
    pts = np.sort(pts, axis=1)
    if np.any(pts[:, 0] <= 0):
        raise DmpkError("coordinates must be strictly positive")
    if N > 1 and np.any(np.diff(pts, axis=1) <= 0):
        raise DmpkError("coordinates must be distinct")
    k, w = _k_quadrature(N, s, k_max, n_nodes)
    gauss = np.exp(-k * k * s / (4.0 * N)) * np.tanh(0.5 * np.pi * k)
    # conical values for every (k-node, coordinate) pair
    conic = conical_legendre(0.5 * k[:, None], 2.0 * pts.ravel()[None, :])
    conic = conic.reshape(k.size, pts.shape[0], N)
    powers = k[:, None] ** (2 * np.arange(1, N + 1) - 1)  # (k, m)
    integ = np.einsum("k,km,kpn->pmn", w * gauss, powers, conic)
    sign, logabs = np.linalg.slogdet(integ)
    sh2 = np.sinh(pts) ** 2
    logpref = np.sum(np.log(np.sinh(2.0 * pts)), axis=1)
    for i in range(N):
        for j in range(i + 1, N):
            logpref += np.log(sh2[:, j] - sh2[:, i])
    parity = -1.0 if (N * (N - 1) // 2) % 2 else 1.0
    out = parity * sign * np.exp(logpref + logabs)
    return out if np.asarray(x).ndim > 1 else float(out[0])


def exact_beta2_transport_moments(N: int, s: float, x_max: float = 6.0,
                                  n_grid: int = 260) -> dict:
    """Numerically normalized moments of the exact beta=2 density:
    mean conductance <G/G0> and <sum lambda> by tensor-grid quadrature
    (the density is a symmetric function, so the ordered chamber can be
    replaced by the full box).  Values below 1e-8 of the peak are zeroed —
    out there the closed form is cancellation noise, not density.
    N <= 2 is enough for the cross-checks."""
    if N not in (1, 2):
        raise DmpkError("moment quadrature implemented for N in {1, 2}")
    xs = np.linspace(x_max / n_grid, x_max, n_grid)
    k, w = _k_quadrature(N, s)
    gauss = np.exp(-k * k * s / (4.0 * N)) * np.tanh(0.5 * np.pi * k)
    conic = conical_legendre(0.5 * k[:, None], 2.0 * xs[None, :])
    powers = k[:, None] ** (2 * np.arange(1, N + 1) - 1)
    imat = np.einsum("k,km,kx->mx", w * gauss, powers, conic)  # (m, x)
    sh2 = np.sinh(xs) ** 2
    tvals = 1.0 / np.cosh(xs) ** 2
    if N == 1:
        dens = np.sinh(2.0 * xs) * imat[0]
        dens[np.abs(dens) < 1e-8 * np.max(np.abs(dens))] = 0.0
        norm = np.trapezoid(dens, xs)
        return {"g_mean": float(np.trapezoid(dens * tvals, xs) / norm),
                "sum_lambda_mean": float(np.trapezoid(dens * sh2, xs) / norm)}
    det = imat[0][:, None] * imat[1][None, :] - imat[1][:, None] * imat[0][None, :]
    vand = sh2[None, :] - sh2[:, None]
    pref = np.outer(np.sinh(2.0 * xs), np.sinh(2.0 * xs))
    dens = -pref * vand * det  # orientation as in exact_beta2_density
    dens[np.abs(dens) < 1e-8 * np.max(np.abs(dens))] = 0.0
    gsum = tvals[:, None] + tvals[None, :]
    lsum = sh2[:, None] + sh2[None, :]
    norm = np.trapezoid(np.trapezoid(dens, xs, axis=1), xs)
    g_mean = np.trapezoid(np.trapezoid(dens * gsum, xs, axis=1), xs) / norm
    l_mean = np.trapezoid(np.trapezoid(dens * lsum, xs, axis=1), xs) / norm
    return {"g_mean": float(g_mean), "sum_lambda_mean": float(l_mean)}


def expected_sum_lambda(N: int, s: float) -> float:
    """First-moment solution of the flow: (N/2)(e^{2s} - 1), every beta."""
    return 0.5 * N * math.expm1(2.0 * s)


# ---------------------------------------------------------------------------
# Monte Carlo oracle (Euler-Maruyama)
# ---------------------------------------------------------------------------

def _euler_step(lam: np.ndarray, dw: np.ndarray, dt: float, beta: int,
                gamma: int) -> np.ndarray:
    """One weak-order-1 step for sorted walker rows (n_walkers, N).

    The drift kick of a nearly colliding pair, dt * beta * B / gap, is
    unbounded, and an explicit step would catapult the pair apart (with the
    negative excursion rectified at lambda = 0, injecting spurious mass).
    Instead the mutual repulsion of each *adjacent* pair is split into

      - a bounded symmetric part, beta (B_j - B_i)/(lam_j - lam_i)
        = beta (2/gamma)(1 + lam_i + lam_j), applied explicitly to both
        members (this is exactly the term that survives in the first-moment
        telescoping, so d<sum lambda>/ds = N + 2<sum lambda> is preserved),
      - the gap repulsion, integrated *implicitly*: the updated gap solves
        g' = g_hat + dt beta (B_i + B_j)/g', i.e. g' = (g_hat +
        sqrt(g_hat^2 + 4 dt beta (B_i + B_j)))/2, which is positive for any
        noise realization and collapses to the diffusive separation scale
        sqrt(dt beta (B_i+B_j)) when the pair touches.

    Adjacent pairs are swept in even/odd order (Lie splitting); interactions
    of non-adjacent pairs are bounded by the enclosed adjacent gaps and stay
    explicit.  Reflection at lambda = 0 plus sorting close the step (walkers
    are exchangeable; the ordered vector is the state).
    """
    n = lam.shape[1]
    b = (2.0 / gamma) * lam * (1.0 + lam)
    a = (2.0 / gamma) * (1.0 + 2.0 * lam)
    if n > 1:
        diff = lam[:, :, None] - lam[:, None, :]
        idx = np.arange(n)
        diff[:, idx, idx] = 1.0
        inv = 1.0 / diff
        inv[:, idx, idx] = 0.0
        adj = np.arange(n - 1)
        inv[:, adj, adj + 1] = 0.0
        inv[:, adj + 1, adj] = 0.0
        a = a + beta * b * inv.sum(axis=2)
        sym = (beta / gamma) * (1.0 + lam[:, :-1] + lam[:, 1:])
        a[:, :-1] += sym
        a[:, 1:] += sym
    prop = lam + a * dt + np.sqrt(2.0 * b * dt) * dw
    if n > 1:
        for parity in (0, 1):
            i = np.arange(parity, n - 1, 2)
            csum = prop[:, i] + prop[:, i + 1]
            ghat = prop[:, i + 1] - prop[:, i]
            c = dt * beta * (b[:, i] + b[:, i + 1])
            gnew = 0.5 * (ghat + np.sqrt(ghat * ghat + 4.0 * c))
            prop[:, i] = 0.5 * (csum - gnew)
            prop[:, i + 1] = 0.5 * (csum + gnew)
    return np.sort(np.abs(prop), axis=1)


def _violated(lam: np.ndarray) -> bool:
    if not np.all(np.isfinite(lam)):
        return True
    if lam.shape[1] > 1 and np.min(np.diff(lam, axis=1)) < _COLLISION_TOL:
        return True
    return False


def _advance_block(lam, dt, rng, beta, gamma, depth=0):
    """One step for every row; a backstop re-integrates any row that still
    manages to produce a collision or a non-finite value with two half
    steps and fresh noise (the implicit pair update makes this rare)."""
    prop = _euler_step(lam, rng.standard_normal(lam.shape), dt, beta, gamma)
    bad = ~np.isfinite(prop).all(axis=1)
    if lam.shape[1] > 1:
        bad |= (np.diff(prop, axis=1) < _COLLISION_TOL).any(axis=1)
    if bad.any():
        if depth >= 20:
            raise DmpkError(
                f"{int(bad.sum())} walker rows still pathological after "
                "20 dt halvings; the configuration is too singular for "
                "this step size")
        sub = _advance_block(lam[bad], 0.5 * dt, rng, beta, gamma, depth + 1)
        prop[bad] = _advance_block(sub, 0.5 * dt, rng, beta, gamma, depth + 1)
    return prop


def mc_dmpk_evolve(N: int, beta: int, s_final: float, n_walkers: int,
                   dt: float, seed: int = 0, workers: int = None) -> list:
    """Empirical ensemble of DMPKState at s_final from the Ito process.

    Ballistic initial condition lambda_i(0) = i*eps (eps-staggered to keep
    the chamber interior); walker blocks run in parallel with per-block
    seeds and a fixed-order reduction.
    """
    gamma = gamma_factor(beta, N)
    if s_final <= 0:
        raise DmpkError("need s_final > 0")
    if dt > 1e-3 * s_final:
        raise DmpkError("dt must not exceed 1e-3 * s_final")
    if n_walkers < 1:
        raise DmpkError("need at least one walker")
    n_steps = int(math.ceil(s_final / dt))
    step = s_final / n_steps
    block_size = 512
    n_blocks = (n_walkers + block_size - 1) // block_size

    def run_block(b):
        nb = min(block_size, n_walkers - b * block_size)
        rng = rng_for(seed, b)
        lam = np.tile(np.arange(1, N + 1) * _EPS_STAGGER, (nb, 1))
        for _ in range(n_steps):
            lam = _advance_block(lam, step, rng, beta, gamma)
        return lam

    blocks = indexed_map(run_block, n_blocks, workers)
    lam_all = np.vstack(blocks)
    return [DMPKState(N, beta, s_final, row) for row in lam_all]


# ---------------------------------------------------------------------------
# transfer-matrix slice product
# ---------------------------------------------------------------------------

def flux_defect(m: np.ndarray) -> float:
    """Max-norm violation of current conservation M Sigma_z M^dag = Sigma_z."""
    n = m.shape[0] // 2
    sz = sigma_z(n)
    return float(np.max(np.abs(m @ sz @ m.conj().T - sz)))


class _ProductAccumulator:
    """Stabilized product of transfer slices kept as U diag(sig) V^dag."""

    def __init__(self, n: int, refresh_every: int = 32,
                 cond_limit: float = 1e14):
        self.u = np.eye(2 * n, dtype=complex)
        self.sig = np.ones(2 * n)
        self.vh = np.eye(2 * n, dtype=complex)
        self.pending = np.eye(2 * n, dtype=complex)
        self.count = 0
        self.refresh_every = refresh_every
        self.cond_limit = cond_limit

    def absorb(self, m: np.ndarray):
        self.pending = m @ self.pending
        self.count += 1
        if self.count % self.refresh_every == 0:
            self._refresh()

    def _refresh(self):
        a = (self.pending @ self.u) * self.sig  # column scaling
        u2, s2, v2h = np.linalg.svd(a)
        self.u, self.sig, self.vh = u2, s2, v2h @ self.vh
        self.pending = np.eye(self.u.shape[0], dtype=complex)
        if self.sig[0] / self.sig[-1] > self.cond_limit:
            raise DmpkError(
                f"transfer product condition number {self.sig[0]/self.sig[-1]:.2e} "
                "exceeds 1e14; shorten the wire or use the SDE oracle")

    def matrix(self) -> np.ndarray:
        self._refresh()
        return (self.u * self.sig) @ self.vh


def _haar_batch(z: np.ndarray) -> np.ndarray:
    """haar_unitary applied to a stack of Ginibre matrices (..., n, n)."""
    qm, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return qm * (d / np.abs(d))[..., None, :]


def _lambdas_from_mm(mm: np.ndarray, n: int) -> np.ndarray:
    """Eigenvalues of Q = (M^dag M + (M^dag M)^{-1} - 2)/4 for a stack of
    M^dag M, inverse via the flux identity (M^dag M)^{-1} = Sz M^dag M Sz,
    doubled spectrum collapsed pairwise."""
    sz = np.concatenate([np.ones(n), -np.ones(n)])
    flipped = sz[:, None] * mm * sz[None, :]
    q = 0.25 * (mm + flipped - 2.0 * np.eye(2 * n))
    w = np.linalg.eigvalsh(0.5 * (q + np.swapaxes(q.conj(), -2, -1)))
    if np.min(w) < -1e-10:
        raise DmpkError(f"Q eigenvalue {np.min(w):.3e} below -1e-10")
    w = np.clip(w, 0.0, None)
    return 0.5 * (w[..., 0::2] + w[..., 1::2])


def _lambdas_from_product(m: np.ndarray, n: int) -> np.ndarray:
    """Transmission parameters of a single transfer product, via the
    flux-identity form of Q = (M^dag M + (M^dag M)^{-1} - 2)/4."""
    return _lambdas_from_mm((m.conj().T @ m)[None], n)[0]


def mc_transfer_product(N: int, n_slices: int, delta_s: float, seed: int = 0,
                        n_samples: int = 1, workers: int = None,
                        refresh_every: int = 32, cond_limit: float = 1e14) -> list:
    """Ensemble of DMPKState from products of beta=2 thin transfer slices.

    Wire i consumes the same random streams as the sequential loop
    `sample_transfer_slice(spec, delta_s, i*n_slices + j)` for j in order;
    only the linear algebra (QR, products, stabilizing SVDs) is batched
    across wires, so results match the one-wire-at-a-time route and do not
    depend on the worker count.
    """
    if n_slices < 0 or delta_s <= 0:
        raise DmpkError("need n_slices >= 0 and delta_s > 0")
    spec = EnsembleSpec(kind="transfer_slice", beta=2, N=N, seed=seed)
    s_final = n_slices * delta_s
    two_n = 2 * N
    eye = np.eye(two_n, dtype=complex)
    block_size = 256
    n_blocks = (n_samples + block_size - 1) // block_size

    def run_block(b):
        nb = min(block_size, n_samples - b * block_size)
        base = b * block_size
        u = np.tile(eye, (nb, 1, 1))
        sig = np.ones((nb, two_n))
        vh = np.tile(eye, (nb, 1, 1))
        pending = np.tile(eye, (nb, 1, 1))

        def refresh():
            nonlocal u, sig, vh, pending
            a = (pending @ u) * sig[:, None, :]
            u2, s2, v2h = np.linalg.svd(a)
            u, sig, vh = u2, s2, v2h @ vh
            pending[:] = eye
            worst = np.max(sig[:, 0] / sig[:, -1])
            if worst > cond_limit:
                raise DmpkError(
                    f"transfer product condition number {worst:.2e} exceeds "
                    f"{cond_limit:.0e}; shorten the wire or use the SDE oracle")

        lam = np.empty((nb, N))
        z = np.empty((nb, 4, N, N), dtype=complex)
        for j in range(n_slices):
            for i in range(nb):
                rng = spec.rng((base + i) * n_slices + j)
                lam[i] = rng.exponential(scale=delta_s, size=N)
                for t in range(4):
                    z[i, t] = rng.standard_normal((N, N)) \
                        + 1j * rng.standard_normal((N, N))
            q4 = _haar_batch(z.reshape(-1, N, N)).reshape(nb, 4, N, N)
            croot = np.sqrt(1.0 + lam)[:, None, :]
            sroot = np.sqrt(lam)[:, None, :]
            slc = np.empty((nb, two_n, two_n), dtype=complex)
            slc[:, :N, :N] = (q4[:, 0] * croot) @ q4[:, 2]
            slc[:, :N, N:] = (q4[:, 0] * sroot) @ q4[:, 3]
            slc[:, N:, :N] = (q4[:, 1] * sroot) @ q4[:, 2]
            slc[:, N:, N:] = (q4[:, 1] * croot) @ q4[:, 3]
            pending = slc @ pending
            if (j + 1) % refresh_every == 0:
                refresh()
        refresh()
        m = (u * sig[:, None, :]) @ vh
        sz = np.concatenate([np.ones(N), -np.ones(N)])
        defect = np.max(np.abs(m * sz[None, None, :] @
                               np.swapaxes(m.conj(), -2, -1) - np.diag(sz)))
        if defect > 1e-8:
            raise DmpkError(f"flux conservation violated: {defect:.2e}")
        mm = np.swapaxes(m.conj(), -2, -1) @ m
        return _lambdas_from_mm(mm, N)

    rows = np.vstack(indexed_map(run_block, n_blocks, workers))
    return [DMPKState(N, 2, s_final, np.sort(row)) for row in rows]


# ---------------------------------------------------------------------------
# Schroedinger decoupling check
# ---------------------------------------------------------------------------

_CHECK_ENTRIES = {(1, 1): ("CI", {"N": 1}), (2, 1): ("AIII", {"p": 1, "q": 1}),
                  (4, 1): ("DIII-even", {"N": 1}),
                  (1, 2): ("CI", {"N": 2}), (2, 2): ("AIII", {"p": 2, "q": 2}),
                  (4, 2): ("DIII-even", {"N": 2})}


def _test_functions(axes):
    """Smooth localized test functions (product Gaussians, one width per
    axis) with analytic Laplacians, centered inside the grid."""
    mids = np.array([0.5 * (ax[0] + ax[-1]) for ax in axes])
    spans = np.array([ax[-1] - ax[0] for ax in axes])
    out = []
    for shift, scale in [(0.15, 16.0), (-0.10, 9.0), (0.05, 25.0)]:
        c = mids + shift * spans
        w = scale / spans ** 2

        def f(q, c=c, w=w):
            return np.exp(-np.sum(w * (q - c) ** 2, axis=-1))

        def lap(q, c=c, w=w):
            d = q - c
            return (np.sum(4.0 * w * w * d * d - 2.0 * w, axis=-1)
                    * np.exp(-np.sum(w * d * d, axis=-1)))
        out.append((f, lap))
    return out


def schrodinger_decoupled_check(beta: int, x_grid, n_particles: int = 1) -> dict:
    """Verify (numerically) that conjugating the flow generator by J^{1/2}
    yields -H0 + U with the per-channel H0 = -(1/2 gamma)(d^2 + 1/sinh^2 2x)
    and constant U = -rho^2/(2 gamma).

    For beta = 2 the pair interactions cancel (the returned u_spread is at
    finite-difference level); for beta = 1 they do not, and u_spread
    measures the leftover interaction on a 2-particle grid.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size < 9:
        raise DmpkError("need a 1-d grid with at least 9 points")
    if x_grid[0] <= 0:
        raise DmpkError("grid touches x = 0")
    key = (beta, n_particles)
    if key not in _CHECK_ENTRIES:
        raise DmpkError("check supports beta in {1,2,4}, n_particles in {1,2}")
    name, kw = _CHECK_ENTRIES[key]
    entry = cartan.catalog_lookup(name, **kw)[2]  # negative curvature
    gamma = gamma_factor(beta, n_particles)
    rho = entry.rho()
    u_expected = -float(rho @ rho) / (2.0 * gamma)

    if n_particles == 1:
        axes = [x_grid]
    else:
        # chamber convention x_1 > x_2 > 0: first axis sits above the second
        span = x_grid[-1] - x_grid[0]
        axes = [x_grid + span + 1.0, x_grid]
    mesh = np.meshgrid(*axes, indexing="ij")
    q = np.stack(mesh, axis=-1)
    log_j = cartan.log_radial_jacobian(entry, q.reshape(-1, n_particles))
    log_j = log_j.reshape(q.shape[:-1])

    interior = tuple(slice(1, -1) for _ in range(n_particles))
    max_resid = 0.0
    u_fields = []
    for f, lap in _test_functions(axes):
        vals = f(q)
        grid_fn = cartan.RadialGridFunction(tuple(axes),
                                            vals * np.exp(-0.5 * log_j))
        lb = cartan.radial_laplace_beltrami(entry, grid_fn).values
        lhs = np.exp(0.5 * log_j[interior]) * lb / (2.0 * gamma)
        sinh_term = np.sum(1.0 / np.sinh(2.0 * q) ** 2, axis=-1)
        h0 = -(lap(q) + sinh_term * vals) / (2.0 * gamma)
        rhs = -h0[interior] + u_expected * vals[interior]
        resid = np.max(np.abs(lhs - rhs)) / np.max(np.abs(vals))
        max_resid = max(max_resid, resid)
        mask = np.abs(vals[interior]) > 0.5 * np.max(np.abs(vals))
        u_field = (lhs + h0[interior])[mask] / vals[interior][mask]
        u_fields.append(u_field)
    u_all = np.concatenate(u_fields)
    return {"beta": beta, "n_particles": n_particles,
            "max_residual": float(max_resid),
            "u_mean": float(u_all.mean()),
            "u_spread": float(u_all.std() / abs(u_all.mean())),
            "u_variation": float(u_all.max() - u_all.min()),
            "u_expected": u_expected}
