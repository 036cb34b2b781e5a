"""Flip plans, flip statistics, decision rules and the flip test."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from signflip import (
    DesignError,
    Gaussian,
    NumericalError,
    Poisson,
    StatVector,
    build_design,
    decide,
    effective_contributions,
    fit_null,
    flip_statistics_quadratic,
    flip_statistics_scalar,
    flip_test,
    make_flip_plan,
    p_value,
    score_contributions,
)
from oracles import oracle_p_greater, oracle_reject_greater


# ------------------------------------------------------------------ #
# flip plans
# ------------------------------------------------------------------ #

def test_exhaustive_plan_enumerates_all_sign_vectors():
    plan = make_flip_plan(3, 8, mode="exhaustive")
    assert plan.signs.shape == (8, 3)
    assert_array_equal(plan.signs[0], [1, 1, 1])
    assert len({tuple(row) for row in plan.signs}) == 8
    assert set(np.unique(plan.signs)) == {-1, 1}


def test_plan_determinism_across_calls():
    for mode in ("with-replacement", "without-replacement"):
        a = make_flip_plan(50, 200, mode=mode, seed=123)
        b = make_flip_plan(50, 200, mode=mode, seed=123)
        assert_array_equal(a.signs, b.signs)
        c = make_flip_plan(50, 200, mode=mode, seed=124)
        assert not np.array_equal(a.signs, c.signs)


def test_plan_entry_means_concentrate():
    plan = make_flip_plan(50, 200, mode="with-replacement", seed=9)
    # binomial concentration for (w-1)*n iid signs
    assert abs(plan.signs[1:].mean()) < 4.0 / np.sqrt(199 * 50)


def test_without_replacement_rows_distinct_and_non_identity():
    plan = make_flip_plan(6, 64, mode="without-replacement", seed=2)
    rows = {tuple(r) for r in plan.signs}
    assert len(rows) == 64
    assert tuple([1] * 6) in rows  # only as the first row
    assert not any(np.all(r == 1) for r in plan.signs[1:])


def test_without_replacement_large_n_path():
    plan = make_flip_plan(30, 64, mode="without-replacement", seed=5)
    rows = {tuple(r) for r in plan.signs}
    assert len(rows) == 64
    assert not any(np.all(r == 1) for r in plan.signs[1:])
    again = make_flip_plan(30, 64, mode="without-replacement", seed=5)
    assert_array_equal(plan.signs, again.signs)


def test_plan_validation_errors():
    with pytest.raises(DesignError):
        make_flip_plan(4, 1)
    with pytest.raises(DesignError):
        make_flip_plan(3, 9, mode="without-replacement")  # w > 2^n
    with pytest.raises(DesignError):
        make_flip_plan(21, 2**21, mode="exhaustive")  # n too large
    with pytest.raises(DesignError):
        make_flip_plan(3, 7, mode="exhaustive")  # w != 2^n
    with pytest.raises(DesignError):
        make_flip_plan(3, 4, mode="bootstrap")


def test_first_row_is_identity_in_all_modes():
    for mode, w in (("with-replacement", 17), ("without-replacement", 9),
                    ("exhaustive", 16)):
        plan = make_flip_plan(4, w, mode=mode, seed=3)
        assert_array_equal(plan.signs[0], np.ones(4, dtype=np.int8))


# ------------------------------------------------------------------ #
# effective scores
# ------------------------------------------------------------------ #

def test_effective_scores_gaussian_centering_identity():
    rng = np.random.default_rng(61)
    x = rng.normal(size=30)
    y = rng.normal(size=30)
    design = build_design({"x": x}, tested=["x"], intercept=True)
    fam = Gaussian()
    nf = fit_null(y, design, fam)
    scores = score_contributions(y, nf, design, fam)
    eff = effective_contributions(scores)
    expected = (x - x.mean()) * (y - nf.mu_hat)
    assert np.max(np.abs(eff.nu_star[:, 0] - expected)) < 1e-10
    assert_allclose(eff.projector, [[x.mean()]], rtol=1e-12)


def test_effective_equals_basic_when_orthogonal():
    from signflip import InfoBlocks, ScoreSet

    rng = np.random.default_rng(67)
    half = rng.normal(size=15)
    x = np.concatenate([half, -half])  # centered up to summation rounding
    y = rng.normal(size=30)
    design = build_design({"x": x}, tested=["x"], intercept=True)
    fam = Gaussian()
    nf = fit_null(y, design, fam)
    scores = score_contributions(y, nf, design, fam)
    eff = effective_contributions(scores)
    assert abs(scores.info.I12[0, 0]) < 1e-15
    assert np.max(np.abs(eff.nu_star - scores.nu)) < 1e-14

    # with I12 exactly zero the projection is the identity, bit for bit
    info0 = InfoBlocks(
        I11=scores.info.I11,
        I12=np.zeros_like(scores.info.I12),
        I22=scores.info.I22,
        i_star=scores.info.I11,
    )
    eff0 = effective_contributions(
        ScoreSet(nu=scores.nu, nu_nuis=scores.nu_nuis, info=info0)
    )
    assert_array_equal(eff0.nu_star, scores.nu)


def test_effective_scores_scale_linearly_in_misspecification():
    from dataclasses import replace
    from signflip import ScoreSet

    rng = np.random.default_rng(71)
    x, z = rng.normal(size=40), rng.normal(size=40)
    y = rng.poisson(np.exp(0.2 + 0.4 * z)).astype(float)
    design = build_design({"x": x, "z": z}, tested=["x"], nuisance=["z"],
                          intercept=True)
    fam = Poisson()
    nf = fit_null(y, design, fam)
    base = effective_contributions(score_contributions(y, nf, design, fam))

    c1, c2 = 3.0, 7.0
    nf_scaled = replace(nf, W_hat=c2 * nf.W_hat)
    scores = score_contributions(y, nf_scaled, design, fam)
    scaled = ScoreSet(nu=c1 * scores.nu, nu_nuis=c1 * scores.nu_nuis,
                      info=scores.info)
    eff = effective_contributions(scaled)
    assert_allclose(eff.nu_star, c1 * base.nu_star, rtol=1e-12)


def test_observed_effective_score_equals_observed_score_at_mle():
    rng = np.random.default_rng(73)
    x, z = rng.normal(size=120), rng.normal(size=120)
    y = rng.poisson(np.exp(0.1 + 0.6 * z)).astype(float)
    design = build_design({"x": x, "z": z}, tested=["x"], nuisance=["z"],
                          intercept=True)
    fam = Poisson()
    nf = fit_null(y, design, fam)
    scores = score_contributions(y, nf, design, fam)
    eff = effective_contributions(scores)
    n = design.n
    assert np.max(np.abs(eff.nu_star.sum(axis=0) - scores.nu.sum(axis=0))
                  ) / np.sqrt(n) < 1e-8


# ------------------------------------------------------------------ #
# flip statistics
# ------------------------------------------------------------------ #

def test_chunked_signed_sums_are_position_addressed(monkeypatch):
    # partitioning the flip rows must not change the result; exact on
    # integer contributions, where every summation order agrees
    import signflip.engine as engine

    rng = np.random.default_rng(77)
    contribs = rng.integers(-9, 10, size=12).astype(float)
    plan = make_flip_plan(12, 300, seed=15)
    whole = flip_statistics_scalar(contribs, plan).values
    monkeypatch.setattr(engine, "_CHUNK", 7)
    chunked = flip_statistics_scalar(contribs, plan).values
    assert_array_equal(whole, chunked)


def test_scalar_statistics_zero_contributions():
    plan = make_flip_plan(5, 12, seed=1)
    sv = flip_statistics_scalar(np.zeros(5), plan)
    assert_array_equal(sv.values, np.zeros(12))


def test_scalar_statistics_hand_enumeration_n2():
    plan = make_flip_plan(2, 4, mode="exhaustive")
    sv = flip_statistics_scalar(np.array([1.0, -1.0]), plan)
    root2 = np.sqrt(2.0)
    assert_allclose(sv.values, [0.0, root2, -root2, 0.0], atol=1e-15)


def test_identity_flip_is_observed_statistic():
    rng = np.random.default_rng(79)
    plan = make_flip_plan(24, 100, seed=4)
    # integer contributions: every summation order is exact, so the
    # identity-flip value equals the observed sum bit for bit
    ints = rng.integers(-9, 10, size=24).astype(float)
    sv = flip_statistics_scalar(ints, plan)
    assert sv.values[0] == ints.sum() / np.sqrt(24.0)
    floats = rng.normal(size=24)
    sv = flip_statistics_scalar(floats, plan)
    assert abs(sv.values[0] - floats.sum() / np.sqrt(24.0)) < 1e-14


def test_quadratic_reduces_to_squared_scalar_for_d1():
    rng = np.random.default_rng(83)
    contribs = rng.normal(size=16)
    plan = make_flip_plan(16, 64, seed=6)
    sv1 = flip_statistics_scalar(contribs, plan)
    sv2 = flip_statistics_quadratic(contribs[:, None], np.eye(1), plan)
    assert_allclose(sv2.values, sv1.values**2, rtol=0, atol=0)
    assert np.all(sv2.values >= 0)


def test_quadratic_identity_vhat_invariant_to_column_permutation():
    rng = np.random.default_rng(89)
    contribs = rng.normal(size=(20, 3))
    plan = make_flip_plan(20, 50, seed=8)
    a = flip_statistics_quadratic(contribs, np.eye(3), plan)
    b = flip_statistics_quadratic(contribs[:, [2, 0, 1]], np.eye(3), plan)
    assert_allclose(a.values, b.values, rtol=1e-12, atol=1e-12)


def test_quadratic_rao_statistic_at_identity_flip():
    rng = np.random.default_rng(97)
    n, d = 80, 2
    X = rng.normal(size=(n, d))
    Z = rng.normal(size=(n, 1))
    y = rng.poisson(np.exp(0.2 + 0.3 * Z[:, 0])).astype(float)
    table = {"x1": X[:, 0], "x2": X[:, 1], "z": Z[:, 0]}
    design = build_design(table, tested=["x1", "x2"], nuisance=["z"],
                          intercept=True)
    fam = Poisson()
    nf = fit_null(y, design, fam)
    scores = score_contributions(y, nf, design, fam)
    eff = effective_contributions(scores)
    from signflip.glm import solve_spd

    i_star = scores.info.i_star
    vhat = solve_spd(i_star, np.eye(d))
    vhat = 0.5 * (vhat + vhat.T)
    plan = make_flip_plan(n, 10, seed=10)
    sv = flip_statistics_quadratic(eff.nu_star, vhat, plan, "inv-effective-info")
    s = eff.nu_star.sum(axis=0) / np.sqrt(n)
    rao = float(s @ solve_spd(i_star, s))
    assert abs(sv.values[0] - rao) < 1e-10


def test_quadratic_rejects_bad_vhat():
    plan = make_flip_plan(6, 8, seed=2)
    contribs = np.ones((6, 2))
    with pytest.raises(NumericalError, match="semi-definite"):
        flip_statistics_quadratic(contribs, np.array([[1.0, 0.0], [0.0, -1.0]]),
                                  plan)
    with pytest.raises(NumericalError, match="symmetric"):
        flip_statistics_quadratic(contribs, np.array([[1.0, 0.5], [0.0, 1.0]]),
                                  plan)


# ------------------------------------------------------------------ #
# decisions and p-values
# ------------------------------------------------------------------ #

def test_decide_greater_w20_rejects_only_unique_max():
    vals = np.concatenate([[5.0], np.linspace(-1, 4, 19)])
    res = decide(StatVector(vals, "scalar"), 0.05, "greater")
    assert res.reject
    tied = vals.copy()
    tied[1] = 5.0
    res = decide(StatVector(tied, "scalar"), 0.05, "greater")
    assert not res.reject


def test_decide_all_equal_never_rejects():
    vals = np.full(40, 2.5)
    for alternative in ("greater", "less", "two-sided-abs", "two-sided-tails"):
        res = decide(StatVector(vals, "scalar"), 0.25, alternative)
        assert not res.reject
        if alternative != "two-sided-tails":
            assert p_value(StatVector(vals, "scalar"), alternative) == 1.0


def test_decide_and_p_value_agree_without_ties():
    rng = np.random.default_rng(101)
    w = 37
    for _ in range(10_000):
        vals = rng.normal(size=w)
        sv = StatVector(vals, "scalar")
        alpha = float(rng.uniform(0.02, 0.5))
        threshold = np.floor(alpha * w + 1e-9) / w
        assert decide(sv, alpha, "greater").reject == (
            p_value(sv, "greater") <= threshold
        )


def test_decide_matches_first_principles_oracle():
    rng = np.random.default_rng(103)
    for _ in range(2000):
        w = int(rng.integers(5, 60))
        vals = rng.normal(size=w)
        alpha = float(rng.uniform(0.01, 0.6))
        sv = StatVector(vals, "scalar")
        assert decide(sv, alpha, "greater").reject == oracle_reject_greater(
            list(vals), alpha
        )
        assert p_value(sv, "greater") == oracle_p_greater(list(vals))


def test_two_sided_tails_requires_multiples_of_one_over_w():
    vals = np.linspace(-1, 1, 20)
    sv = StatVector(vals, "scalar")
    with pytest.raises(DesignError, match="multiples"):
        decide(sv, 0.1, "two-sided-tails", alpha1=0.033, alpha2=0.05)
    res = decide(sv, 0.1, "two-sided-tails", alpha1=0.05, alpha2=0.05)
    assert res.alternative == "two-sided-tails"


def test_two_sided_tails_union_of_one_sided_rules():
    rng = np.random.default_rng(107)
    w = 40
    for _ in range(500):
        vals = rng.normal(size=w)
        sv = StatVector(vals, "scalar")
        tails = decide(sv, 0.1, "two-sided-tails", alpha1=0.05, alpha2=0.05)
        lo = decide(sv, 0.05, "less")
        hi = decide(sv, 0.05, "greater")
        assert tails.reject == (lo.reject or hi.reject)


def test_p_value_counting_and_bounds():
    vals = np.concatenate([[10.0], np.arange(99, dtype=float)])
    sv = StatVector(vals, "scalar")
    assert p_value(StatVector(np.concatenate([[1000.0], np.arange(99.0)]),
                              "scalar"), "greater") == 0.01
    assert p_value(sv, "greater") >= 1 / 100
    with pytest.raises(DesignError):
        p_value(sv, "two-sided-tails")


def test_scale_equivariance_of_scalar_statistics_and_decisions():
    rng = np.random.default_rng(109)
    contribs = rng.normal(size=30)
    plan = make_flip_plan(30, 100, seed=11)
    base = flip_statistics_scalar(contribs, plan)
    scaled = flip_statistics_scalar(3.5 * contribs, plan)
    assert_allclose(scaled.values, 3.5 * base.values, rtol=1e-12)
    for alternative in ("greater", "less", "two-sided-abs"):
        assert p_value(base, alternative) == p_value(scaled, alternative)
        assert (
            decide(base, 0.07, alternative).reject
            == decide(scaled, 0.07, alternative).reject
        )


# ------------------------------------------------------------------ #
# flip_test orchestration
# ------------------------------------------------------------------ #

def test_flip_test_centered_x_basic_equals_effective():
    rng = np.random.default_rng(113)
    half = rng.normal(size=20)
    x = np.concatenate([half, -half])  # exactly centered
    y = rng.normal(size=40)
    design = build_design({"x": x}, tested=["x"], intercept=True)
    fam = Gaussian()
    basic = flip_test(y, design, fam, method="basic", w=500, seed=21)
    eff = flip_test(y, design, fam, method="effective", w=500, seed=21)
    assert basic.p_value == eff.p_value
    assert basic.reject == eff.reject


def test_flip_test_misspecification_hooks_leave_decision_unchanged():
    rng = np.random.default_rng(127)
    x, z = rng.normal(size=50), rng.normal(size=50)
    y = rng.poisson(np.exp(0.1 + 0.5 * z)).astype(float)
    design = build_design({"x": x, "z": z}, tested=["x"], nuisance=["z"],
                          intercept=True)
    fam = Poisson()
    base = flip_test(y, design, fam, w=300, seed=31)
    scaled = flip_test(y, design, fam, w=300, seed=31, score_scale=5.0,
                       weight_scale=2.0)
    assert base.p_value == scaled.p_value
    assert base.reject == scaled.reject


def test_flip_test_provenance_and_validation():
    rng = np.random.default_rng(131)
    x = rng.normal(size=20)
    y = rng.normal(size=20)
    design = build_design({"x": x}, tested=["x"], intercept=True)
    res = flip_test(y, design, Gaussian(), w=64, seed=17)
    assert res.w == 64 and res.seed == 17
    assert res.method == "flip-effective"
    assert 1 / 64 <= res.p_value <= 1.0
    with pytest.raises(DesignError):
        flip_test(y, design, Gaussian(), method="oracle")
    x2 = rng.normal(size=20)
    design2 = build_design({"x": x, "x2": x2}, tested=["x", "x2"], intercept=True)
    with pytest.raises(DesignError, match="vhat"):
        flip_test(y, design2, Gaussian(), vhat="bogus", w=16)


def test_flip_test_multivariate_paths():
    rng = np.random.default_rng(137)
    n = 60
    X = rng.normal(size=(n, 3))
    z = rng.normal(size=n)
    y = rng.poisson(np.exp(0.2 + 0.4 * z)).astype(float)
    table = {f"x{j}": X[:, j] for j in range(3)}
    table["z"] = z
    design = build_design(table, tested=[f"x{j}" for j in range(3)],
                          nuisance=["z"], intercept=True)
    for vhat in ("identity", "inv-effective-info"):
        res = flip_test(y, design, Poisson(), w=200, seed=41, vhat=vhat)
        assert res.statistic >= 0.0
        assert 1 / 200 <= res.p_value <= 1.0


# ------------------------------------------------------------------ #
# distributional invariants (Monte Carlo)
# ------------------------------------------------------------------ #

def test_flip_statistics_uncorrelated_and_normal_under_null():
    # cov(T_j, T_k) = 0 over the joint randomness of data and flips;
    # plans are redrawn per dataset (see decisions ledger).
    rng = np.random.default_rng(139)
    n, reps = 100, 10_000
    t2 = np.empty(reps)
    t3 = np.empty(reps)
    for r in range(reps):
        contribs = rng.standard_normal(n)
        plan = make_flip_plan(n, 5, seed=r)
        sv = flip_statistics_scalar(contribs, plan)
        t2[r], t3[r] = sv.values[1], sv.values[2]
    corr = np.corrcoef(t2, t3)[0, 1]
    assert abs(corr) < 4.0 / np.sqrt(reps)

    z = (t2 - t2.mean()) / t2.std()
    skew = np.mean(z**3)
    kurt = np.mean(z**4) - 3.0
    assert abs(skew) < 0.1
    assert abs(kurt) < 0.2


def test_effective_score_nuisance_orthogonality():
    # exact part: the weighted projection identity (X_D - Z proj)' W Z = 0
    rng = np.random.default_rng(149)
    n = 100
    x, z = rng.normal(size=n), rng.normal(size=n)
    y = rng.poisson(np.exp(0.3 + 0.5 * z)).astype(float)
    design = build_design({"x": x, "z": z}, tested=["x"], nuisance=["z"],
                          intercept=True)
    fam = Poisson()
    nf = fit_null(y, design, fam)
    scores = score_contributions(y, nf, design, fam)
    eff = effective_contributions(scores)
    x_star = design.X_tested - design.X_nuisance @ eff.projector.T
    cross = x_star.T @ (nf.W_hat[:, None] * design.X_nuisance) / n
    assert np.max(np.abs(cross)) < 1e-8

    # statistical part: Monte-Carlo mean of the sample covariance
    def mc_mean_cov(family_name, reps=400):
        covs = []
        for r in range(reps):
            xx, zz = rng.normal(size=n), rng.normal(size=n)
            if family_name == "gaussian":
                fam_r, yy = Gaussian(), 0.5 * zz + rng.normal(size=n)
            else:
                fam_r, yy = Poisson(), rng.poisson(np.exp(0.2 + 0.4 * zz)).astype(float)
            des = build_design({"x": xx, "z": zz}, tested=["x"], nuisance=["z"],
                               intercept=True)
            fit = fit_null(yy, des, fam_r)
            sc = score_contributions(yy, fit, des, fam_r)
            ef = effective_contributions(sc)
            a = ef.nu_star[:, 0]
            b = sc.nu_nuis[:, 1]  # the z column
            covs.append(np.mean(a * b) - a.mean() * b.mean())
        return np.asarray(covs)

    covs = mc_mean_cov("gaussian")
    assert abs(covs.mean()) < 4.0 * covs.std() / np.sqrt(covs.size)
    covs = mc_mean_cov("poisson")
    assert abs(covs.mean()) < 5.0 / np.sqrt(n)


def test_exhaustive_mode_exact_rejection_probability():
    # Prop 1 with the full enumeration: rate is exactly floor(a 2^n)/2^n
    rng = np.random.default_rng(151)
    n, alpha, reps = 8, 0.05, 20_000
    w = 2**n
    target = np.floor(alpha * w) / w
    rejects = 0
    for r in range(reps):
        contribs = rng.standard_normal(n)
        plan = make_flip_plan(n, w, mode="exhaustive", seed=r)
        sv = flip_statistics_scalar(contribs, plan)
        rejects += decide(sv, alpha, "greater").reject
    rate = rejects / reps
    se = np.sqrt(target * (1 - target) / reps)
    assert abs(rate - target) < 3.0 * se
