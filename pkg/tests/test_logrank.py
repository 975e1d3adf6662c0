import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdir.errors import NoEvents
from mdir.logrank import BatchKernel, chi2_critical, chi2_test, compute_sigma, compute_sn, compute_t_vec
from mdir.survcore import PooledRisk, build_risk_table, ingest
from mdir.weights import WeightSet, make_crossing, make_menu, make_rg

TWO = make_menu()
FOUR = WeightSet.checked([make_rg(0, 0), make_crossing(), make_rg(1, 1), make_rg(1, 3)])


def exact_moments(records, weights):
    """Exact oracle in the difference-of-hazards form.

    T_i = sqrt(n/(n1 n2)) sum w(F(t-)) * Y1 Y2 / Y * (dN1/Y1 - dN2/Y2), with
    terms where either risk set is empty dropped; covariance from the
    hypergeometric variance. Everything but the final square root is rational.
    """
    labels = sorted({str(g) for *_, g in records})
    n = len(records)
    n1 = sum(1 for *_, g in records if str(g) == labels[0])
    n2 = n - n1
    surv = Fraction(1)
    t_acc = [Fraction(0)] * len(weights)
    s_acc = [[Fraction(0)] * len(weights) for _ in weights]
    for t in sorted({Fraction(r[0]) for r in records}):
        at = [(s, str(g) == labels[0]) for x, s, g in records if Fraction(x) >= t]
        y, y1 = len(at), sum(1 for _, g1 in at if g1)
        y2 = y - y1
        here = [(s, str(g) == labels[0]) for x, s, g in records if Fraction(x) == t]
        d = sum(s for s, _ in here)
        d1 = sum(s for s, g1 in here if g1)
        d2 = d - d1
        f = 1 - surv
        ws = [sum(c * f**k for k, c in enumerate(w.coeffs)) for w in weights]
        if d and y1 and y2:
            diff = Fraction(y1 * y2, y) * (Fraction(d1, y1) - Fraction(d2, y2))
            var = Fraction(y1 * y2, y * y) * d
            for i, wi in enumerate(ws):
                t_acc[i] += wi * diff
                for j, wj in enumerate(ws):
                    s_acc[i][j] += wi * wj * var
        surv *= 1 - Fraction(d, y)
    scale = Fraction(n, n1 * n2)
    t_vec = np.array([math.sqrt(scale) * float(v) for v in t_acc])
    sigma = np.array([[float(scale * v) for v in row] for row in s_acc])
    return t_vec, sigma


records_strategy = st.lists(
    st.tuples(st.integers(1, 10), st.integers(0, 1), st.sampled_from(["a", "b"])),
    min_size=3,
    max_size=25,
).filter(lambda rs: len({g for *_, g in rs}) == 2 and any(s for _, s, _ in rs))


def test_four_subject_values(four_subjects):
    rt = build_risk_table(four_subjects)
    assert compute_t_vec(rt, WeightSet([make_rg(0, 0)]))[0] == pytest.approx(2 / 3, abs=1e-14)
    assert compute_t_vec(rt, WeightSet([make_crossing()]))[0] == pytest.approx(1 / 3, abs=1e-14)
    np.testing.assert_allclose(compute_sigma(rt, TWO), [[13 / 18, 13 / 36], [13 / 36, 11 / 36]], atol=1e-14)


def test_four_subject_single_direction_statistic(four_subjects):
    res = compute_sn(build_risk_table(four_subjects), WeightSet([make_rg(0, 0)]))
    assert res.s_n == pytest.approx(8 / 13, abs=1e-14)
    assert res.df_used == 1


def test_no_events_raises():
    rt = build_risk_table(ingest([(1.0, 0, "A"), (2.0, 0, "B")]))
    with pytest.raises(NoEvents):
        compute_sn(rt, TWO)


def test_identical_groups_give_zero():
    recs = [(t, 1, g) for t in (1.0, 2.0, 3.0) for g in "AB"]
    res = compute_sn(build_risk_table(ingest(recs)), TWO)
    assert res.s_n == pytest.approx(0.0, abs=1e-15)
    assert not np.any(res.t_vec)


def test_dependent_menu_uses_rank():
    ws = WeightSet([make_rg(0, 0), make_rg(0, 0).scaled(2)])
    assert not ws.verified_independent
    rt = build_risk_table(ingest([(1.0, 1, "A"), (2.0, 1, "B"), (3.0, 1, "A"), (4.0, 0, "B"), (5.0, 1, "B")]))
    res = compute_sn(rt, ws)
    single = compute_sn(rt, WeightSet([make_rg(0, 0)]))
    assert res.rank == 1 and res.df_used == 1
    assert res.s_n == pytest.approx(single.s_n, rel=1e-10)


def test_chi2_test_and_critical(four_subjects):
    stat = compute_sn(build_risk_table(four_subjects), TWO)
    out = chi2_test(stat, 0.05)
    assert out.p_chi2 == pytest.approx(math.exp(-stat.s_n / 2), rel=1e-12)
    assert chi2_critical(0.05, 2) == pytest.approx(5.991464547107979, rel=1e-10)
    with pytest.raises(ValueError):
        chi2_test(stat, 1.5)


@settings(max_examples=150, deadline=None)
@given(records_strategy)
def test_matches_exact_oracle(records):
    rt = build_risk_table(ingest([(float(t), s, g) for t, s, g in records]))
    t_exp, s_exp = exact_moments(records, FOUR.weights)
    np.testing.assert_allclose(compute_t_vec(rt, FOUR), t_exp, atol=1e-12)
    np.testing.assert_allclose(compute_sigma(rt, FOUR), s_exp, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(records_strategy)
def test_invariants(records):
    data = ingest([(float(t), s, g) for t, s, g in records])
    rt = build_risk_table(data)
    res = compute_sn(rt, FOUR)
    # label swap: T flips sign, Sigma and S unchanged
    swapped = compute_sn(build_risk_table(data.swapped()), FOUR)
    np.testing.assert_allclose(swapped.t_vec, -res.t_vec, atol=1e-12)
    np.testing.assert_allclose(swapped.sigma_hat, res.sigma_hat, atol=1e-12)
    assert swapped.s_n == pytest.approx(res.s_n, rel=1e-9, abs=1e-12)
    # strictly increasing time transform
    mono = ingest([(math.exp(t) * 3.0 + 1.0, s, g) for t, s, g in records])
    assert compute_sn(build_risk_table(mono), FOUR).s_n == pytest.approx(res.s_n, rel=1e-9, abs=1e-12)
    # PSD and the directional lower bound
    assert np.linalg.eigvalsh(res.sigma_hat).min() >= -1e-12
    for d in res.per_direction:
        assert res.s_n >= d.studentized_sq - 1e-9 * max(1.0, res.s_n)
    assert res.s_n >= 0


@settings(max_examples=100, deadline=None)
@given(records_strategy)
def test_batch_kernel_matches_scalar_path(records):
    data = ingest([(float(t), s, g) for t, s, g in records])
    res = compute_sn(build_risk_table(data), FOUR)
    pooled = PooledRisk(data)
    kernel = BatchKernel(pooled, FOUR.weights)
    t, sigma = kernel.moments(pooled.sorted_labels(data.group))
    np.testing.assert_allclose(t[0], res.t_vec, atol=1e-12)
    np.testing.assert_allclose(sigma[0], res.sigma_hat, atol=1e-12)
    assert kernel.statistic(pooled.sorted_labels(data.group))[0] == pytest.approx(res.s_n, rel=1e-8, abs=1e-10)


def test_gtsg_two_direction_statistic(gtsg):
    res = compute_sn(build_risk_table(gtsg), TWO)
    # frozen regression value for the bundled fixture
    assert res.s_n == pytest.approx(13.4387, abs=1e-4)
    assert res.df_used == 2
