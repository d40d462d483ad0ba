import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amrcontrol.dynamics import IntegratorConfig, simulate_dimensionless
from amrcontrol.equilibria import find_equilibria
from amrcontrol.model import DimensionlessParams, Thresholds, compute_thresholds, rhs_dimensionless
from amrcontrol.scenarios import PHASE_PORTRAITS, phase_portrait_params
from amrcontrol.stability import (
    REGION_PATTERN,
    Jacobian2,
    MarginalSpectrum,
    classify,
    classify_all,
    classify_region,
    classify_region_params,
    jacobian_at,
    jacobian_raw,
    jacobian_threshold_form,
    region_atlas,
    sweep_params,
)

from conftest import random_params


def fd_jacobian(dp, pt, eps=1e-7):
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = eps * max(1.0, abs(pt[j]))
        J[:, j] = (rhs_dimensionless(pt + e, dp) - rhs_dimensionless(pt - e, dp)) / (2 * e[j])
    return J


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(20)
    for _ in range(500):
        dp = random_params(rng)
        pt = rng.uniform(0.05, 0.45, size=2)
        A = jacobian_at(dp, pt).as_array()
        F = fd_jacobian(dp, pt)
        scale = np.max(np.abs(A))
        assert np.max(np.abs(A - F)) <= 1e-6 * scale


def test_raw_and_threshold_jacobians_agree():
    rng = np.random.default_rng(21)
    for _ in range(500):
        dp = random_params(rng)
        pt = rng.uniform(0, 0.5, size=2)
        a = jacobian_raw(dp, pt).as_array()
        b = jacobian_threshold_form(dp, pt).as_array()
        assert np.allclose(a, b, rtol=1e-9, atol=1e-12 * np.max(np.abs(a)))


def test_full_transfer_block_uses_raw_form():
    dp = DimensionlessParams(1.0, 0.2, 0.01, 0.1, 0.2, 0.5, 1.0)
    pt = np.array([0.2, 0.1])
    assert np.allclose(jacobian_at(dp, pt).as_array(), fd_jacobian(dp, pt), rtol=1e-6)


def test_extinction_eigenvalues():
    dp = phase_portrait_params("R1")
    th = compute_thresholds(dp)
    J = jacobian_at(dp, (0.0, 0.0))
    assert J.j12 == 0.0
    expect = sorted([dp.gamma * th.h_r2 * (th.R_s - 1) / th.h_s, dp.gamma * (th.R_r - 1)])
    got = sorted(v.real for v in J.eigenvalues)
    assert got == pytest.approx(expect, rel=1e-9)


def test_resistant_only_eigenvalues():
    dp = phase_portrait_params("R3")
    th = compute_thresholds(dp)
    p1 = find_equilibria(dp)[1]
    J = jacobian_at(dp, (p1.point.x, p1.point.y))
    assert J.j12 == 0.0
    # lower-triangular at x = 0, so the eigenvalues are the diagonal entries
    assert J.j22 == pytest.approx(-dp.gamma * (th.R_r - 1), rel=1e-9)
    assert J.j11 == pytest.approx(dp.gamma * th.h_r2 / th.h_s
                                  * (th.R_s - 1 - (th.R_s + th.h_s) * (th.R_r - 1) / th.R_r), rel=1e-9)


@settings(max_examples=300)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_eigenvalues_match_numpy(entries):
    J = Jacobian2(*entries)
    ours = np.sort_complex(np.array(J.eigenvalues))
    ref = np.sort_complex(np.linalg.eigvals(J.as_array()))
    scale = max(1.0, np.max(np.abs(entries)))
    assert np.max(np.abs(ours - ref)) <= 1e-9 * scale


def test_eigenvalues_no_cancellation():
    # det tiny compared to trace^2: the small eigenvalue must keep relative accuracy
    J = Jacobian2(-1.0, 1e-9, 1e-9, -1e-12)
    small = min(J.eigenvalues, key=lambda z: abs(z)).real
    tr, det = J.trace, J.determinant
    big = tr / 2 - np.sqrt(tr * tr / 4 - det)
    assert small == pytest.approx(det / big, rel=1e-12)


def test_fig_a_extinction_stable():
    dp = phase_portrait_params("R1")
    v = classify_all(dp)
    assert v[0].label == "LAS" and v[0].theorem_label == "LAS"
    assert v[1].label == "nonexistent" and v[2].label == "nonexistent"


def test_fig_c_resistant_only_stable():
    dp = phase_portrait_params("R3")
    th = compute_thresholds(dp)
    assert (th.R_s + th.h_s) / (1 + th.h_s) == pytest.approx(1.00893, abs=1e-5)
    v = classify_all(dp)
    assert v[1].label == "LAS"
    assert v[0].label.startswith("unstable")


@pytest.mark.parametrize("tag", list(PHASE_PORTRAITS))
def test_portrait_sets_classified(tag):
    th = compute_thresholds(phase_portrait_params(tag))
    assert classify_region(th) == tag
    d = PHASE_PORTRAITS[tag]
    assert classify_region(Thresholds(d["R_r"], d["R_s"], d["h_s"], d["h_r1"], d["h_r2"])) == tag


def test_simple_region_labels():
    def T(rs, rr, hs):
        return Thresholds(R_r=rr, R_s=rs, h_s=hs, h_r1=1.0, h_r2=1.0)

    assert classify_region(T(1.05, 0.71, 1.31)) == "R5"
    assert classify_region(T(0.5, 0.5, 1.0)) == "R1"
    assert classify_region(T(1.0, 0.5, 1.0)) == "boundary"
    assert classify_region(T(1.5, 1.0 + 1e-12, 1.0)) == "boundary"


def test_marginal_spectrum_raised():
    dp = DimensionlessParams(1.0, 0.1, 0.01, 0.1, 0.2, 0.5, 0.5)
    dp = dp.replace(beta_s=dp.removal)  # R_s = 1 exactly
    p0 = find_equilibria(dp)[0]
    assert classify(dp, p0).label == "marginal"
    with pytest.raises(MarginalSpectrum):
        classify(dp, p0, raise_on_marginal=True)


def test_grid_sweep_matches_pattern():
    for h_s in (0.3, 1.31, 12.0):
        for R_s, R_r, _, region in region_atlas(h_s, grid=30):
            if region == "boundary":
                continue
            dp = sweep_params(R_s, R_r, h_s)
            assert classify_region_params(dp) == region
            verdicts = classify_all(dp)
            got = tuple("unstable" if v.label.startswith("unstable") else v.label for v in verdicts)
            assert got == REGION_PATTERN[region], (R_s, R_r, h_s, got)
            assert sum(v.label == "LAS" for v in verdicts) == 1


def test_atlas_shape():
    rows = region_atlas(1.31, grid=200)
    assert len(rows) == 40000
    lookup = {(round(r[0], 12), round(r[1], 12)): r[3] for r in rows}
    assert lookup[(1.05, 0.71)] == "R5"
    assert set(r[3] for r in rows) == {"R1", "R2", "R3", "R4", "R5", "boundary"}


def test_basin_cross_check():
    rng = np.random.default_rng(22)
    for tag in PHASE_PORTRAITS:
        dp = phase_portrait_params(tag)
        verdicts = classify_all(dp)
        eqs = find_equilibria(dp)
        target = next(e for e, v in zip(eqs, verdicts) if v.label == "LAS")
        lam = max(v.real for v in next(v for v in verdicts if v.label == "LAS").eigenvalues)
        horizon = 40.0 / abs(lam)
        pt = np.array([target.point.x, target.point.y])
        cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)
        for _ in range(20):
            # x = 0 is invariant, so interior targets need x > 0 at the start
            lo = 1e-6 if target.kind == "Pstar" else 0.0
            start = np.maximum(pt + rng.uniform(-1e-3, 1e-3, size=2), lo)
            fin = simulate_dimensionless(dp, tuple(start), horizon, cfg).final
            assert np.linalg.norm(fin - pt) < 1e-4, (tag, start, fin, pt)


def test_p1_line_below_unit_square_not_a_boundary():
    # for R_s < 1 the line R_r = (R_s+h_s)/(1+h_s) runs inside R1
    h_s = 0.5
    R_s = 0.4
    line = (R_s + h_s) / (1 + h_s)
    assert classify_region(Thresholds(R_r=line, R_s=R_s, h_s=h_s, h_r1=1.0, h_r2=1.0)) == "R1"
