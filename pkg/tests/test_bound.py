import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundcount2d import ConfigurationError
from boundcount2d.bound import (
    REPORT_FIELDS,
    assemble_bounds,
    bound_terms,
    bound_terms_fft,
    compute_bound,
    g_scaling_check,
    k0_invariance_scan,
    minimize_scale,
    n_I_rewrite,
    regularized,
)
from boundcount2d.bskernel import build_a, build_K
from boundcount2d.potential import Grid2D, SampledField, make_family, sample
from boundcount2d.quadrature import pair_integral_logsq

from conftest import random_field

GRID = Grid2D(2.0, 12)
seeds = st.integers(0, 2**32 - 1)


def dense_terms(field, k0=1.0):
    K = build_K(field, k0)
    return bound_terms(K, build_a(field, K.active))


@given(seeds, st.floats(0.1, 10))
def test_fft_path_matches_dense(seed, k0):
    field = random_field(GRID, seed)
    np.testing.assert_allclose(bound_terms_fft(field, k0), dense_terms(field, k0), rtol=1e-10, atol=1e-12)


@given(seeds)
def test_trace_terms_from_eigenvalues(seed):
    field = random_field(GRID, seed)
    K = build_K(field)
    a = build_a(field, K.active)
    t1, t2, t3 = bound_terms(K, a)
    lam, vec = np.linalg.eigh(K.entries)
    proj = vec.T @ a.a
    assert t1 == pytest.approx(np.sum(lam**2), rel=1e-11)
    assert t2 == pytest.approx(np.sum(lam**2 * proj**2), rel=1e-10)
    assert t3 == pytest.approx(np.sum(lam * proj**2), rel=1e-9, abs=1e-12)


@given(seeds)
def test_cauchy_schwarz(seed):
    t1, t2, t3 = dense_terms(random_field(GRID, seed))
    assert t2 >= t3 * t3
    rep = assemble_bounds((t1, t2, t3))
    assert rep.N_total_bound <= 1.0 + rep.N_I_bound
    assert rep.N_total_bound >= 1.0


@given(seeds)
def test_k0_invariance(seed):
    scan = k0_invariance_scan(random_field(GRID, seed), [0.1, 0.5, 1.0, 2.0, 10.0])
    assert scan["deviation_total"] <= 1e-10
    assert scan["deviation_N_I"] <= 1e-10
    # the individual terms do move
    assert scan["deviation_T1"] > 1e-3


def test_k0_scan_needs_range():
    with pytest.raises(ConfigurationError):
        k0_invariance_scan(random_field(GRID, 0), [1.0, 2.0, 3.0])


@given(seeds, st.floats(1e-3, 1e3))
def test_coupling_scaling(seed, g):
    terms = dense_terms(random_field(GRID, seed))
    one = assemble_bounds(terms, 1.0)
    rep = assemble_bounds(terms, g)
    assert rep.N_total_bound - 1.0 == pytest.approx(g * g * (one.N_total_bound - 1.0), rel=1e-12)
    assert rep.N_I_bound == pytest.approx(g * g * one.N_I_bound, rel=1e-12)


def test_g_scaling_check():
    res = g_scaling_check(dense_terms(random_field(GRID, 3)), [0.1, 1.0, 10.0, 100.0])
    assert res["deviation"] <= 1e-12
    with pytest.raises(ConfigurationError):
        g_scaling_check((1.0, 0.5, 0.1), [0.0, 1.0])


@given(seeds)
def test_t1_is_log_square_integral_with_diagonal_correction(seed):
    # tr K^2 uses (disk mean of ln)^2 on the diagonal; the ln^2 rule uses the disk
    # mean of ln^2, larger by exactly 1/4.
    field = random_field(GRID, seed)
    t1 = dense_terms(field)[0]
    wv = GRID.w * field.values
    want = (pair_integral_logsq(field, field) - 0.25 * np.sum(wv**2)) / (4 * math.pi**2)
    assert t1 == pytest.approx(want, rel=1e-11)


@given(seeds)
def test_triple_integral_form(seed):
    field = random_field(GRID, seed)
    t1, t2, _ = dense_terms(field)
    assert n_I_rewrite(field) == pytest.approx(t1 - t2, rel=1e-10, abs=1e-12)


def test_scale_minimum_has_closed_form():
    field = regularized(sample(make_family("gaussian_wells", {"wells": [{"depth": 5.0, "width": 1.0}]}), 32))
    t1, _, t3 = dense_terms(field)
    res = minimize_scale(field)
    assert res["bound"] == pytest.approx(1.0 + t1 - t3 * t3, rel=1e-8)
    # the minimizing scale removes T3
    assert dense_terms(field, res["k0_opt"])[2] == pytest.approx(0.0, abs=1e-4)


def test_zero_potential_gives_one():
    spec = make_family("sum_of_terms", {"terms": [], "constant": 0.0})
    rep = compute_bound(spec, n=16)
    assert rep.N_total_bound == 1.0
    assert rep.N_I_bound == 0.0


def test_repulsive_potential_gives_one():
    spec = make_family("gaussian_wells", {"wells": [{"depth": -2.0, "width": 1.0}]})
    rep = compute_bound(spec, n=16)
    assert rep.N_total_bound == 1.0
    assert rep.attractive is False


def test_regularization_defaults():
    field = random_field(GRID, 0)
    reg = regularized(field)
    assert reg.epsilon_floor == (1e-10 * field.values.max(), 1.0 / GRID.L)
    assert regularized(field, eps=None) is field


def test_methods_agree_and_bad_method():
    spec = make_family("circular_well", {"depth": 2.0, "radius": 1.0})
    dense = compute_bound(spec, n=24, method="dense")
    fft = compute_bound(spec, n=24, method="fft")
    assert dense.N_total_bound == pytest.approx(fft.N_total_bound, rel=1e-10)
    with pytest.raises(ConfigurationError):
        compute_bound(spec, n=24, method="qr")


def test_report_csv_header_matches_fields():
    rep = compute_bound(make_family("circular_well", {"depth": 2.0, "radius": 1.0}), n=16, g=2.0)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert tuple(rows[0]) == REPORT_FIELDS == tuple(rep.to_dict())
    assert float(rows[1][4]) == rep.N_total_bound
    assert rep.attractive


def test_bound_converges_with_grid():
    spec = make_family("gaussian_wells", {"wells": [{"depth": 1.0, "width": 1.0}]})
    vals = [compute_bound(spec, n=n).N_total_bound for n in (32, 48, 64)]
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) < 1e-3
