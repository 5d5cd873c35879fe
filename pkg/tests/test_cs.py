import numpy as np
import pytest

from rmtlab import cs
from rmtlab.cartan import RadialGridFunction
from rmtlab.cs import (CSModel, cs_apply, mapping_sides, op_mapping_residual,
                       potential_values, root_value_couplings)
from rmtlab.roots import build_root_system, rho_vector, weyl_reflect


def gaussian_grid(centers, h, n=9, width=40.0):
    """Tensor grid of n points per axis around `centers`, spacing h, with a
    product Gaussian bump sampled on it."""
    centers = tuple(centers)
    axes = tuple(c + h * np.arange(-(n // 2), n // 2 + 1) for c in centers)
    Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    f = np.exp(-width * np.sum((Q - np.array(centers)) ** 2, axis=-1))
    return RadialGridFunction(axes, f)


def fit_slope(hs, residuals):
    return np.polyfit(np.log(hs), np.log(residuals), 1)[0]


# ---------------------------------------------------------------------------
# root-value couplings
# ---------------------------------------------------------------------------

# (family, build kwargs, expected g^2 per kind)
ROOT_VALUES = [
    # C_N with m_o = beta, m_l = 1: g_o = beta(beta-2)/4, g_l = -1/2
    ("C", dict(rank=3, m_ordinary=1, m_long=1), {"ordinary": -0.25, "long": -0.5}),
    ("C", dict(rank=3, m_ordinary=2, m_long=1), {"ordinary": 0.0, "long": -0.5}),
    ("C", dict(rank=3, m_ordinary=4, m_long=1), {"ordinary": 2.0, "long": -0.5}),
    # short BC root has a doubled partner: m (m + 2 m_2 - 2) |a|^2 / 8
    ("BC", dict(rank=1, m_short=4, m_long=3), {"short": 4.0, "long": 1.5}),
    # multiplicity 2 with no doubled root is the free case
    ("A", dict(rank=2, m_ordinary=2), {"ordinary": 0.0}),
    ("D", dict(rank=3, m_ordinary=2), {"ordinary": 0.0}),
    # B has no doubled roots either: lookup silently returns 0
    ("B", dict(rank=2, m_ordinary=1, m_short=1), {"ordinary": -0.25, "short": -0.125}),
]


@pytest.mark.parametrize("family,kwargs,expected", ROOT_VALUES)
def test_root_value_couplings(family, kwargs, expected):
    got = root_value_couplings(build_root_system(family, **kwargs))
    assert set(got) == set(expected)
    for kind, g2 in expected.items():
        assert got[kind] == pytest.approx(g2, abs=1e-15)


def test_negative_couplings_are_legitimate():
    rs = build_root_system("C", 2, m_ordinary=1, m_long=1)
    g2 = root_value_couplings(rs)
    assert g2["long"] == -0.5
    CSModel(rs, "hyperbolic", g2)  # no positivity validation anywhere


# ---------------------------------------------------------------------------
# model validation
# ---------------------------------------------------------------------------

def test_model_validation():
    rs = build_root_system("C", 2, m_ordinary=2, m_long=1)
    good = root_value_couplings(rs)
    with pytest.raises(cs.CSError, match="unknown potential"):
        CSModel(rs, "coulomb", good)
    with pytest.raises(cs.CSError, match="root kinds"):
        CSModel(rs, "hyperbolic", {"ordinary": 0.0})
    with pytest.raises(cs.CSError, match="root kinds"):
        CSModel(rs, "hyperbolic", dict(good, short=1.0))
    with pytest.raises(cs.CSError, match="not finite"):
        CSModel(rs, "hyperbolic", dict(good, long=np.inf))


# ---------------------------------------------------------------------------
# the potential
# ---------------------------------------------------------------------------

def test_c2_potential_term_by_term():
    # at q = (1.0, 0.4) the pairings are 2q1 = 2.0, 2q2 = 0.8 (long) and
    # q1 -+ q2 = 0.6, 1.4 (ordinary)
    rs = build_root_system("C", 2, m_ordinary=4, m_long=1)
    g2 = root_value_couplings(rs)
    model = CSModel(rs, "hyperbolic", g2)
    expected = (g2["long"] * (np.sinh(2.0) ** -2 + np.sinh(0.8) ** -2)
                + g2["ordinary"] * (np.sinh(0.6) ** -2 + np.sinh(1.4) ** -2))
    assert potential_values(model, [1.0, 0.4]) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("potential", ["inverse_square", "hyperbolic"])
def test_weyl_symmetry_of_potential(potential):
    rs = build_root_system("C", 3, m_ordinary=1, m_long=1)
    model = CSModel(rs, potential, root_value_couplings(rs))
    rng = np.random.default_rng(5)
    pts = np.sort(rng.uniform(0.3, 2.0, size=(100, 3)), axis=1)[:, ::-1]
    pts += np.array([0.9, 0.45, 0.0])  # strictly inside the chamber
    v = potential_values(model, pts)
    for alpha in rs.positive_roots():
        reflected = np.array([weyl_reflect(p, alpha) for p in pts])
        vr = potential_values(model, reflected)
        assert np.max(np.abs(vr - v) / np.abs(v)) < 1e-10


def test_trigonometric_weyl_symmetry_single_reflection():
    rs = build_root_system("C", 2, m_ordinary=2, m_long=1)
    model = CSModel(rs, "trigonometric", root_value_couplings(rs))
    q = np.array([1.1, 0.4])
    for alpha in rs.positive_roots():
        assert potential_values(model, weyl_reflect(q, alpha)) == pytest.approx(
            potential_values(model, q), rel=1e-10)


def test_small_argument_flat_limit():
    # sinh(xi) -> xi, so the two potentials agree when every pairing < 0.02
    rs = build_root_system("C", 2, m_ordinary=4, m_long=1)
    g2 = root_value_couplings(rs)
    flat = CSModel(rs, "inverse_square", g2)
    hyp = CSModel(rs, "hyperbolic", g2)
    q = np.array([0.0075, 0.0025])  # pairings: 0.015, 0.005, 0.005, 0.01
    vf, vh = potential_values(flat, q), potential_values(hyp, q)
    assert abs(vh - vf) / abs(vf) < 1e-3


# ---------------------------------------------------------------------------
# the grid Hamiltonian
# ---------------------------------------------------------------------------

def test_free_hamiltonian_on_plane_wave():
    rs = build_root_system("A", 1, m_ordinary=2)  # root values give g^2 = 0
    model = CSModel(rs, "hyperbolic", root_value_couplings(rs))
    k = np.array([0.7, -0.3])
    residuals = []
    for h in (4e-3, 2e-3):
        axes = tuple(c + h * np.arange(-4, 5) for c in (1.6, 0.4))
        Q = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        f = RadialGridFunction(axes, np.cos(Q @ k))
        out = cs_apply(model, f)
        want = 0.5 * (k @ k) * f.values[1:-1, 1:-1]
        residuals.append(np.max(np.abs(out.values - want)) / np.max(np.abs(want)))
    assert residuals[1] < 1e-5
    assert residuals[0] / residuals[1] == pytest.approx(4.0, rel=0.2)


def test_singular_nodes_rejected():
    rs = build_root_system("C", 1, m_long=1)
    model = CSModel(rs, "hyperbolic", root_value_couplings(rs))
    axes = (np.linspace(-0.01, 0.01, 5),)  # contains q = 0, so 2q = 0
    f = RadialGridFunction(axes, np.ones(5))
    with pytest.raises(cs.CSError, match="singular"):
        cs_apply(model, f)
    trig = CSModel(rs, "trigonometric", root_value_couplings(rs))
    axes = (np.linspace(1.4, 1.8, 5),)  # 2q crosses pi
    with pytest.raises(cs.CSError, match="fundamental cell"):
        cs_apply(trig, RadialGridFunction(axes, np.ones(5)))


def test_grid_validation():
    rs = build_root_system("C", 2, m_ordinary=2, m_long=1)
    model = CSModel(rs, "hyperbolic", root_value_couplings(rs))
    with pytest.raises(cs.CSError, match="axes"):
        cs_apply(model, RadialGridFunction((np.linspace(1, 2, 5),), np.ones(5)))
    with pytest.raises(cs.CSError, match="3 points"):
        cs_apply(model, RadialGridFunction(
            (np.linspace(1, 2, 2), np.linspace(0.2, 0.4, 5)), np.ones((2, 5))))
    with pytest.raises(cs.CSError, match="dimension"):
        potential_values(model, [1.0, 0.5, 0.2])


# ---------------------------------------------------------------------------
# the operator mapping
# ---------------------------------------------------------------------------

def test_mapping_free_fermion_point():
    # multiplicity 2 turns the interaction off; both sides must then reduce
    # to -1/2 Laplacian, which pins the overall sign of the identity
    rs = build_root_system("A", 1, m_ordinary=2)
    model = CSModel(rs, "hyperbolic", root_value_couplings(rs))
    assert op_mapping_residual(model, gaussian_grid((1.9, 0.7), 1e-3)) < 1e-4


MAPPING_CASES = [
    ("A", dict(rank=1, m_ordinary=1), "hyperbolic", (1.9, 0.7)),
    ("A", dict(rank=1, m_ordinary=2), "inverse_square", (1.9, 0.7)),
    ("A", dict(rank=1, m_ordinary=4), "inverse_square", (1.9, 0.7)),
    ("C", dict(rank=2, m_ordinary=2, m_long=1), "hyperbolic", (1.3, 0.5)),
    ("C", dict(rank=2, m_ordinary=1, m_long=1), "hyperbolic", (1.3, 0.5)),
    ("C", dict(rank=2, m_ordinary=4, m_long=1), "trigonometric", (1.1, 0.5)),
    ("BC", dict(rank=1, m_short=4, m_long=3), "hyperbolic", (1.1,)),
]


@pytest.mark.parametrize("family,kwargs,potential,center", MAPPING_CASES)
def test_mapping_residual_is_second_order(family, kwargs, potential, center):
    rs = build_root_system(family, **kwargs)
    model = CSModel(rs, potential, root_value_couplings(rs))
    hs = (4e-3, 2e-3, 1e-3)
    residuals = [op_mapping_residual(model, gaussian_grid(center, h))
                 for h in hs]
    assert residuals[-1] < 1e-4
    assert 1.7 < fit_slope(hs, residuals) < 2.3


def test_mapping_rejects_off_root_values():
    rs = build_root_system("C", 2, m_ordinary=2, m_long=1)
    g2 = dict(root_value_couplings(rs))
    g2["ordinary"] += 0.1
    model = CSModel(rs, "hyperbolic", g2)
    with pytest.raises(cs.CSError, match="mapping undefined off root values"):
        op_mapping_residual(model, gaussian_grid((1.3, 0.5), 2e-3))


def test_mapping_curvature_cross_check():
    rs = build_root_system("A", 1, m_ordinary=1)
    model = CSModel(rs, "hyperbolic", root_value_couplings(rs))
    f = gaussian_grid((1.9, 0.7), 2e-3)
    assert (op_mapping_residual(model, f, curvature=-1)
            == op_mapping_residual(model, f))
    with pytest.raises(cs.CSError, match="contradicts"):
        op_mapping_residual(model, f, curvature=1)


def test_rho_shift_sits_on_either_side():
    # moving the constant rho^2/2 from one side of the identity to the
    # other (adding it to both H f and the Delta'_B side) cannot change
    # the residual
    rs = build_root_system("BC", 1, m_short=4, m_long=3)
    model = CSModel(rs, "hyperbolic", root_value_couplings(rs))
    f = gaussian_grid((1.1,), 2e-3)
    lhs, rhs = mapping_sides(model, f)
    rho = rho_vector(rs)
    shift = 0.5 * float(rho @ rho) * f.values[1:-1]
    base = np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs))
    shifted = np.max(np.abs((lhs + shift) - (rhs + shift))) / np.max(np.abs(lhs))
    assert shifted == pytest.approx(base, rel=1e-10)
    assert op_mapping_residual(model, f) == pytest.approx(base, rel=1e-12)
