import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from boundcount2d import ConfigurationError
from boundcount2d.bound import regularized
from boundcount2d.bskernel import build_a, build_K, build_Kprime
from boundcount2d.oracle import (
    Trajectory,
    bs_count,
    bs_coupling_diagnostic,
    converged_count,
    fd_hamiltonian,
    fd_negative_count,
    lowest_eigenpairs,
    radial_count,
    trajectories,
    trajectory_rows,
    write_trajectories_csv,
)
from boundcount2d.potential import make_family, sample


def bessel_count(depth, radius, g=1.0):
    """Bound states of a circular well from the zero-energy matching conditions.

    Inside J_m(k r), outside r^-|m| (or a constant for m = 0): a new level appears
    in channel m when kR crosses a zero of J_{m-1} (J_1 for m = 0); m = 0 always
    holds one state and m != 0 counts twice.
    """
    kr = math.sqrt(g * depth) * radius
    total = 1 + int(np.sum(jn_zeros(1, 50) < kr))
    m = 1
    while True:
        c = int(np.sum(jn_zeros(m - 1, 50) < kr))
        if c == 0:
            return total
        total += 2 * c
        m += 1


@pytest.mark.parametrize("depth,radius,g", [
    (2.0, 1.5, 0.5), (2.0, 1.5, 1.0), (2.0, 1.5, 5.0), (100.0, 1.0, 1.0), (0.2, 1.0, 1.0), (7.3, 0.9, 3.1),
])
def test_radial_count_matches_bessel_thresholds(depth, radius, g):
    spec = make_family("circular_well", {"depth": depth, "radius": radius})
    assert radial_count(spec, g=g) == bessel_count(depth, radius, g)


def test_radial_count_ring_and_repulsive():
    ring = make_family("sum_of_terms", {"terms": [
        {"family": "circular_well", "params": {"depth": 3.0, "radius": 2.0}},
        {"family": "circular_well", "params": {"depth": -3.0, "radius": 1.0}},
    ]})
    assert radial_count(ring, g=5.0) == 14
    bump = make_family("circular_well", {"depth": -1.0, "radius": 1.0})
    assert radial_count(bump) == 0


def test_radial_count_rejects_off_centre():
    spec = make_family("circular_well", {"depth": 1.0, "radius": 1.0, "center": [0.5, 0.0]})
    with pytest.raises(ConfigurationError):
        radial_count(spec)


def test_free_box_spectrum_is_exact():
    # the 5-point Dirichlet Laplacian has eigenvalues (4/h^2)(sin^2 a_i + sin^2 a_j)
    zero = make_family("sum_of_terms", {"terms": [], "constant": 0.0})
    L, n = 1.0, 40
    h = 2 * L / (n + 1)
    vals, _ = lowest_eigenpairs(fd_hamiltonian(zero, L, n), 5, -1.0)
    s = np.sin(np.arange(1, 4) * math.pi / (2 * (n + 1))) ** 2
    want = np.sort((4 / h**2) * (s[:, None] + s[None, :]).ravel())[:5]
    np.testing.assert_allclose(vals, want, rtol=1e-10)


def test_constant_shift_moves_spectrum():
    shifted = make_family("sum_of_terms", {"terms": [], "constant": -50.0})
    count = fd_negative_count(shifted, 1.0, 40)
    # (4/h^2) sin^2 terms: only levels below 50 are negative
    h = 2 / 41
    s = np.sin(np.arange(1, 41) * math.pi / 82) ** 2
    lam = (4 / h**2) * (s[:, None] + s[None, :]).ravel()
    assert count.count == int(np.sum(lam - 50.0 < -count.tol_E))


def test_fd_validation():
    spec = make_family("circular_well", {"depth": 1.0, "radius": 1.0})
    with pytest.raises(ConfigurationError):
        fd_negative_count(spec, 2.0, 16)
    with pytest.raises(ConfigurationError):
        fd_negative_count(spec, 0.0, 64)


@pytest.mark.slow
@pytest.mark.parametrize("g", [1.0, 5.0])
def test_fd_agrees_with_bessel(g):
    spec = make_family("circular_well", {"depth": 2.0, "radius": 1.5})
    res = converged_count(spec, 3.2, 64, g)
    assert res.converged
    assert res.count == bessel_count(2.0, 1.5, g)
    assert np.all(res.eigenvalues < 0)


def test_moderate_well_binds_in_the_box():
    spec = make_family("circular_well", {"depth": 1.5, "radius": 1.0})
    res = fd_negative_count(spec, 8.0, 128)
    assert res.count >= 1


@pytest.mark.slow
def test_trajectories_monotone_with_feynman_hellmann():
    spec = make_family("circular_well", {"depth": 2.0, "radius": 1.5})
    g_list = np.linspace(0.5, 5.0, 10)
    res = trajectories(spec, g_list, 3.2, 64)
    assert res["monotone"]
    assert res["fh_max_rel_error"] < 0.05
    assert len(res["branches"]) >= 4
    for br in res["branches"]:
        assert np.all(np.diff(br.E) < 0)
    # thresholds are ascending in branch order of appearance, and below the last coupling
    th = [t for t in res["g_thresholds"] if t is not None]
    assert all(0 < t < 5.0 for t in th)


def test_trajectory_validation():
    spec = make_family("circular_well", {"depth": 1.0, "radius": 1.0})
    with pytest.raises(ConfigurationError):
        trajectories(spec, [1.0, 0.5, 2.0, 3.0], 3.0, 40)
    with pytest.raises(ConfigurationError):
        trajectories(spec, [1.0, 2.0], 3.0, 40)


def test_zero_crossing_interpolates():
    tr = Trajectory(0, g=[1.0, 2.0, 3.0], E=[0.5, -0.5, -2.0], fh_derivative=[-1.0, -1.0, -1.5])
    assert tr.zero_crossing() == pytest.approx(1.5)


def test_trajectory_csv_sorted(tmp_path):
    a = Trajectory(1, g=[2.0, 1.0], E=[-1.0, -0.5], fh_derivative=[0.0, 0.0])
    b = Trajectory(0, g=[3.0], E=[-2.0], fh_derivative=[0.0])
    rows = trajectory_rows([a, b])
    assert [(r[1], r[0]) for r in rows] == [(0, 3.0), (1, 1.0), (1, 2.0)]
    path = tmp_path / "t.csv"
    write_trajectories_csv([a, b], path)
    assert path.read_text().splitlines()[0] == "g,branch_id,E"


@pytest.mark.slow
@pytest.mark.parametrize("g", [1.0, 5.0])
def test_deflated_kernel_estimate_close_to_fd(g):
    spec = make_family("circular_well", {"depth": 2.0, "radius": 1.5})
    field = regularized(sample(spec, 48))
    K = build_K(field)
    kp = build_Kprime(K, build_a(field, K.active))
    fd = converged_count(spec, 3.2, 64, g)
    assert abs(bs_count(kp, g) - fd.count) <= 1
    thresholds = bs_coupling_diagnostic(kp)
    assert thresholds == sorted(thresholds)
    assert bs_count(kp, g) == 1 + sum(t <= g for t in thresholds)
