import math

import numpy as np
import pytest

from qslie.freealg import parse_word
from qslie.semimartingale import (
    CompiledSeries,
    ConfigError,
    DriverPath,
    InvariantConfig,
    LinearSystem,
    StrongErrorConfig,
    brownian_increments,
    commuting_exactness,
    expm,
    expv,
    invariant_study,
    iterated_integrals,
    ito_integrals,
    lie_series_step,
    quasi_shuffle_numeric_check,
    scheme_series,
    simulate_brownian,
    strat_integrals,
    strong_error_study,
)
from qslie.strichartz import strat_lie_series

W = parse_word

A1 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.0, 0.0]])
A2 = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.2]])
LX = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
LY = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])


def test_increment_moments():
    n = 100_000
    dW = brownian_increments(1, 1.0, 1, seed=7, paths=range(n))[:, 0, 0]
    se_mean = 1.0 / math.sqrt(n)
    assert abs(dW.mean()) < 4 * se_mean
    se_var = math.sqrt(2.0 / n)
    assert abs(dW.var() - 1.0) < 4 * se_var


def test_path_is_reproducible_and_slice_independent():
    a = simulate_brownian(2, 1.0, 4096, seed=3, path_index=11)
    b = simulate_brownian(2, 1.0, 4096, seed=3, path_index=11)
    assert np.array_equal(a.increments, b.increments)
    part = brownian_increments(2, 1.0, 4096, 3, [11], start=2000, stop=2100)[0]
    assert np.array_equal(part, a.increments[2000:2100])
    c = simulate_brownian(2, 1.0, 4096, seed=3, path_index=12)
    assert not np.array_equal(a.increments, c.increments)


def test_invalid_sizes():
    with pytest.raises(ValueError):
        simulate_brownian(1, 1.0, 100, 0, 0)
    with pytest.raises(ValueError):
        simulate_brownian(0, 1.0, 64, 0, 0)
    with pytest.raises(ValueError):
        simulate_brownian(1, -1.0, 64, 0, 0)


def test_coarsening_sums_fine_increments():
    p = simulate_brownian(2, 1.0, 64, 0, 0)
    c = p.coarsen(8)
    assert c.n_steps == 8
    assert np.allclose(c.values()[-1], p.values()[-1], atol=1e-14)


def test_single_letters_and_quadratic_variation():
    p = simulate_brownian(2, 1.0, 1024, 1, 0)
    t = iterated_integrals(p, [W("1"), W("[1,1]"), W("e")], 1024)
    assert t[W("[1,1]")][0] == 1.0
    assert t[W("e")][0] == 1.0
    assert math.isclose(t[W("1")][0], p.increments[:, 0].sum(), rel_tol=1e-12)


def test_ito_integrals_brute_force():
    rng = np.random.default_rng(0)
    dW = rng.standard_normal((6, 2))
    t = ito_integrals(dW, 0.1, [W("1.2"), W("1.[2,2]"), W("2.1.1")])
    w1, w2 = np.cumsum(dW[:, 0]) - dW[:, 0], np.cumsum(dW[:, 1]) - dW[:, 1]
    assert math.isclose(t[W("1.2")], np.sum(w1 * dW[:, 1]))
    assert math.isclose(t[W("1.[2,2]")], np.sum(w1 * 0.1))
    i21 = np.cumsum(w2 * dW[:, 0]) - w2 * dW[:, 0]
    assert math.isclose(t[W("2.1.1")], np.sum(i21 * dW[:, 0]))


def test_non_continuous_words_rejected():
    p = simulate_brownian(2, 1.0, 16, 0, 0)
    with pytest.raises(ValueError):
        iterated_integrals(p, [W("[1,2]")], 16)
    with pytest.raises(ValueError):
        iterated_integrals(p, [W("1")], 3)


def test_ito_square_identity_converges():
    refinements = [16, 32, 64, 128]
    paths = [simulate_brownian(1, 1.0, 128, 5, i) for i in range(1000)]
    rms = []
    for r in refinements:
        err = []
        for p in paths:
            t = iterated_integrals(p.coarsen(128 // r), [W("1.1"), W("1")], r)
            err.append(t[W("1.1")][0] - 0.5 * (t[W("1")][0] ** 2 - 1.0))
        rms.append(math.sqrt(np.mean(np.square(err))))
    assert all(b < a for a, b in zip(rms, rms[1:]))
    slope = np.polyfit(np.log(refinements), np.log(rms), 1)[0]
    assert abs(slope + 0.5) < 0.1


def test_mixed_integral_has_zero_mean():
    n = 2000
    dW = brownian_increments(2, 1.0, 64, 9, range(n))
    vals = ito_integrals(dW, 1 / 64, [W("1.2")])[W("1.2")]
    assert abs(vals.mean()) < 4 * vals.std() / math.sqrt(n)


def test_quasi_shuffle_residuals_decay():
    paths = [simulate_brownian(2, 1.0, 512, 2, i) for i in range(300)]
    assert quasi_shuffle_numeric_check(paths[0], W("e"), W("1.2"), 64) == 0.0
    refinements = [64, 128, 256, 512]
    for u, v in [("1", "2"), ("1", "1.2")]:
        rms = [math.sqrt(np.mean([quasi_shuffle_numeric_check(p, W(u), W(v), r) ** 2 for p in paths])) for r in refinements]
        assert all(b < a for a, b in zip(rms, rms[1:]))
        assert abs(np.polyfit(np.log(refinements), np.log(rms), 1)[0] + 0.5) < 0.15


def test_strat_integrals_use_word_conversion():
    p = simulate_brownian(1, 1.0, 256, 4, 0)
    t = iterated_integrals(p, [W("1.1"), W("[1,1]"), W("1")], 256)
    j = strat_integrals(t, [W("1.1")])
    assert math.isclose(j[W("1.1")][0], t[W("1.1")][0] + 0.5, rel_tol=1e-12)


def test_matrix_convention_reverses_words():
    s = LinearSystem(np.array([A1, A2]))
    assert np.allclose(s.word_matrix(W("1.2")), A2 @ A1)
    assert np.allclose(s.letter_matrix((1, 1)), -0.5 * A1 @ A1)
    assert np.allclose(LinearSystem(np.array([A1, A2]), "stratonovich").letter_matrix((2, 2)), 0)
    with pytest.raises(ValueError):
        s.letter_matrix((1, 2))
    with pytest.raises(ValueError):
        LinearSystem(np.zeros((2, 3)))


def test_area_term_in_compiled_generator():
    s = LinearSystem(np.array([A1, A2]), "stratonovich")
    c = CompiledSeries(scheme_series(2, 2), s)
    vals = {w: 0.0 for w in c.words}
    vals[W("1.2")] = 1.0
    # J_12 = I_12 here; the area coefficient is (J_12 - J_21)/2 against [A_2, A_1]
    assert np.allclose(c.generator(vals), 0.5 * (A2 @ A1 - A1 @ A2))


def test_expm_against_eigendecomposition():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((5, 4, 4))
    sym = 3 * (m + np.swapaxes(m, 1, 2))
    lam, vec = np.linalg.eigh(sym)
    ref = np.einsum("bij,bj,bkj->bik", vec, np.exp(lam), vec)
    assert np.allclose(expm(sym), ref, rtol=1e-12, atol=0)
    assert np.array_equal(expm(np.zeros((2, 3, 3))), np.broadcast_to(np.eye(3), (2, 3, 3)))
    y = rng.standard_normal((5, 4))
    small = 1e-3 * sym
    assert np.allclose(expv(small, y), np.einsum("bij,bj->bi", expm(small), y), rtol=1e-14, atol=1e-15)


def test_zero_system_gives_identity_step():
    s = LinearSystem(np.zeros((2, 3, 3)))
    series = strat_lie_series(2, 2)
    c = CompiledSeries(series, s)
    step = lie_series_step(series, s, {w: 0.3 for w in c.words})
    assert np.array_equal(step, np.eye(3))


def test_missing_integral_words_raise():
    s = LinearSystem(np.array([A1, A2]))
    with pytest.raises(KeyError):
        lie_series_step(strat_lie_series(2, 2), s, {W("1"): 0.1})


def test_single_driver_scheme_is_exact():
    errs = commuting_exactness(A1, [1.0, 0.5, -0.5], 1.0, 32, 200, seed=3)
    assert errs.max() < 1e-12


def test_skew_steps_preserve_norm():
    s = LinearSystem(np.array([LX, LY]), "stratonovich")
    series = scheme_series(2, 2)
    c = CompiledSeries(series, s)
    rng = np.random.default_rng(2)
    y = np.array([1.0, -2.0, 0.5])
    for _ in range(20):
        step = lie_series_step(c, s, {w: rng.standard_normal() for w in c.words})
        assert abs(np.linalg.norm(step @ y) - np.linalg.norm(y)) < 1e-12


def test_scheme_truncation_keeps_all_letters():
    words = {t.base_word for t in scheme_series(2, 1).terms}
    assert words == {W("1"), W("2"), W("[1,1]"), W("[2,2]")}


def test_strong_study_small_run_is_deterministic_and_flagged():
    cfg = StrongErrorConfig(matrices=[A1, A2], y0=[1.0, 0.5, -0.5], step_exponents=(2, 3), refinement=16, paths=40, batch=40)
    a = strong_error_study(cfg)
    b = strong_error_study(StrongErrorConfig(**{**cfg.__dict__, "batch": 7}), workers=3)
    assert a["errors"] == b["errors"] and a["slopes"] == b["slopes"]
    assert len(a["flags"]) == 2
    assert a["errors"][2][1] < a["errors"][1][1]


def test_strong_study_rejects_bad_y0():
    with pytest.raises(ConfigError) as exc:
        strong_error_study(StrongErrorConfig(matrices=[A1, A2], y0=[1.0], paths=1))
    assert exc.value.field == "y0"


def test_invariant_study_controls():
    zero = invariant_study(InvariantConfig(matrices=np.zeros((2, 3, 3)), y0=[1, 2, 3], paths=5))
    assert zero["max_deviation"] == 0.0
    skew = invariant_study(InvariantConfig(matrices=[LX, LY], y0=[1, 2, 3], paths=20, step_exponents=(2, 4)))
    assert skew["max_deviation"] < 1e-11
    assert invariant_study(InvariantConfig(matrices=[A1, A2], y0=[1, 2, 3], paths=5))["skipped"]


def test_driver_path_properties():
    p = DriverPath(2.0, np.ones((4, 1)))
    assert p.dt == 0.5 and p.d == 1
    with pytest.raises(ValueError):
        p.coarsen(3)
