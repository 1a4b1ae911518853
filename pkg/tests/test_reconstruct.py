import numpy as np
import pytest

from lwsampling.graph import Graph, build_laplacian
from lwsampling.reconstruct import (
    SNR_CAP_DB,
    RankDeficientError,
    SingularSystemError,
    TikhonovSolver,
    delta_lower_bound,
    embedding_extremes,
    energy_ratio,
    energy_ratios,
    reconstruct_bandlimited_ls,
    reconstruct_tikhonov,
    relative_error,
    snr,
)
from lwsampling.sampling import (
    PHI_0,
    PHI_1,
    KernelPoly,
    SamplePlan,
    assemble_plan,
    draw_samples,
    kernel_matrix,
    optimal_distribution,
    uniform_distribution,
)
from lwsampling.spectral import eigendecompose, synth_bandlimited


@pytest.fixture
def instance(rgg30):
    g, L, b = rgg30
    k, m = 4, 60
    op = kernel_matrix(L, PHI_1, b)
    dist = optimal_distribution(b, op, k)
    x = synth_bandlimited(b, k, seed=0)
    plan = assemble_plan(op, dist, draw_samples(dist, m, seed=1), x)
    return L, b, k, plan, x


def objective(plan, L, x, y):
    r = (plan.Psi @ x - y) / np.sqrt(plan.probs)
    return 0.5 * r @ r + 0.5 * x @ L @ x


def test_tikhonov_zero_measurements(instance):
    L, b, k, plan, x = instance
    res = reconstruct_tikhonov(plan, L, y=np.zeros(plan.m))
    np.testing.assert_array_equal(res.x, np.zeros(30))


def test_tikhonov_constant_signal(rgg30):
    g, L, b = rgg30
    assert b.eigenvalues[1] > 1e-8  # connected
    op = kernel_matrix(L, PHI_0)
    d = uniform_distribution(30)
    plan = assemble_plan(op, d, [3, 17, 3], np.full(30, 2.5))
    np.testing.assert_allclose(reconstruct_tikhonov(plan, L).x, 2.5, atol=1e-10)


def test_tikhonov_matches_dense_solve(instance):
    L, b, k, plan, x = instance
    W = np.diag(1.0 / plan.probs)
    A = plan.Psi.T @ W @ plan.Psi + L
    expected = np.linalg.solve(A, plan.Psi.T @ W @ plan.y)
    res = reconstruct_tikhonov(plan, L, truth=x.x)
    np.testing.assert_allclose(res.x, expected, atol=1e-10)
    assert res.rel_error == pytest.approx(relative_error(expected, x.x), rel=1e-8)


def test_tikhonov_is_a_minimiser(instance):
    L, b, k, plan, x = instance
    xs = reconstruct_tikhonov(plan, L).x
    f0 = objective(plan, L, xs, plan.y)
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = rng.standard_normal(30) * 1e-3
        assert objective(plan, L, xs + d, plan.y) >= f0 - 1e-12


def test_tikhonov_block_rhs(instance):
    L, b, k, plan, x = instance
    Y = np.column_stack([plan.y, 2 * plan.y, np.zeros(plan.m)])
    solver = TikhonovSolver(plan, L)
    X = solver.solve(Y)
    one = solver.solve(plan.y)
    np.testing.assert_allclose(X[:, 0], one, atol=1e-12)
    np.testing.assert_allclose(X[:, 1], 2 * one, atol=1e-12)
    np.testing.assert_array_equal(X[:, 2], 0)


def test_tikhonov_singular_when_component_unsampled():
    g = Graph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    L = build_laplacian(g)
    op = kernel_matrix(L, PHI_0)
    plan = assemble_plan(op, uniform_distribution(4), [0, 1], np.ones(4))
    with pytest.raises(SingularSystemError):
        reconstruct_tikhonov(plan, L)
    assert issubclass(SingularSystemError, np.linalg.LinAlgError)


def test_bandlimited_ls_exact(instance):
    L, b, k, plan, x = instance
    res = reconstruct_bandlimited_ls(plan, b, k, truth=x.x)
    assert res.rel_error <= 1e-8
    assert res.residual <= 1e-8


def test_bandlimited_ls_square(rgg30):
    g, L, b = rgg30
    k = 3
    op = kernel_matrix(L, PHI_1, b)
    x = synth_bandlimited(b, k, seed=2)
    plan = assemble_plan(op, uniform_distribution(30), [0, 11, 25], x)
    assert np.linalg.matrix_rank(plan.Psi @ b.U[:, :k]) == k
    assert reconstruct_bandlimited_ls(plan, b, k).x == pytest.approx(x.x, abs=1e-8)


def test_bandlimited_ls_matches_normal_equations(instance):
    L, b, k, plan, x = instance
    y = plan.y + np.random.default_rng(3).standard_normal(plan.m) * 0.1
    W = np.diag(1.0 / plan.probs)
    B = plan.Psi @ b.U[:, :k]
    coef = np.linalg.solve(B.T @ W @ B, B.T @ W @ y)
    np.testing.assert_allclose(reconstruct_bandlimited_ls(plan, b, k, y=y).x, b.U[:, :k] @ coef,
                               atol=1e-10)


def test_bandlimited_ls_rank_deficient(rgg30):
    g, L, b = rgg30
    op = kernel_matrix(L, PHI_0)
    plan = assemble_plan(op, uniform_distribution(30), [5, 5, 5, 5], np.ones(30))
    with pytest.raises(RankDeficientError):
        reconstruct_bandlimited_ls(plan, b, 2)


def test_delta_zero_for_full_identity_sampling(rgg30):
    g, L, b = rgg30
    op = kernel_matrix(L, PHI_0)
    plan = assemble_plan(op, uniform_distribution(30), np.arange(30))
    for k in (1, 5, 30):
        c1, c2 = PHI_0.constants(b, k)
        assert (c1, c2) == (1.0, 1.0)
        assert delta_lower_bound(plan, b, k, c1, c2).delta == pytest.approx(0.0, abs=1e-12)


def test_delta_matches_svd(instance):
    L, b, k, plan, x = instance
    B = (plan.Psi @ b.U[:, :k]) / np.sqrt(plan.probs)[:, None]
    sv = np.linalg.svd(B, compute_uv=False)
    c1, c2 = PHI_1.constants(b, k)
    lam = b.eigenvalues[:k]
    assert (c1, c2) == pytest.approx(((1 + lam).min() ** 2, (1 + lam).max() ** 2))
    d = delta_lower_bound(plan, b, k, c1, c2)
    assert d.s_min == pytest.approx(sv.min() ** 2 / plan.m, rel=1e-10)
    assert d.s_max == pytest.approx(sv.max() ** 2 / plan.m, rel=1e-10)
    assert d.delta == pytest.approx(max(1 - d.s_min / c1, d.s_max / c2 - 1), rel=1e-12)
    lit = delta_lower_bound(plan, b, k, c1, c2, literal=True)
    assert lit.s_min == pytest.approx(sv.min() / plan.m, rel=1e-10)
    assert lit.s_max == pytest.approx(sv.max() / plan.m, rel=1e-10)
    band = kernel_matrix(L, PHI_1).Phi @ b.U[:, :k]
    assert embedding_extremes(plan, b, k, band=band) == pytest.approx((d.s_min, d.s_max), rel=1e-10)


def test_relative_error():
    x = np.array([3.0, 4.0])
    assert relative_error(x, x) == 0.0
    assert relative_error(np.zeros(2), x) == 1.0
    assert relative_error(2 * x, x) == 1.0
    with pytest.raises(ValueError):
        relative_error(x, np.zeros(2))


def test_snr_values():
    X = np.array([[3.0, 0.0], [0.0, 4.0]])
    assert snr(X + [[0.0, 0.5], [0.0, 0.0]], X) == pytest.approx(10.0)
    assert snr(np.zeros_like(X), X) == pytest.approx(0.0)
    assert snr(X + [[0.0, 0.0], [0.0, 0.5 * 10 ** -0.433]], X) == pytest.approx(14.33, abs=1e-9)
    assert snr(X, X) == SNR_CAP_DB
    assert snr(X * (1 + 1e-40), X) <= SNR_CAP_DB
    with pytest.raises(ValueError):
        snr(X, np.zeros_like(X))


def test_snr_scale_invariant():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 4))
    Xs = X + 0.1 * rng.standard_normal((5, 4))
    assert snr(7 * Xs, 7 * X) == pytest.approx(snr(Xs, X), rel=1e-12)


def test_energy_ratio_cases(rgg30):
    g, L, b = rgg30
    x = synth_bandlimited(b, 6, seed=0).x
    assert energy_ratio(b, 6, x) == pytest.approx(1.0, abs=1e-12)
    assert energy_ratio(b, 3, b.U[:, 10]) == pytest.approx(0.0, abs=1e-12)
    X = np.random.default_rng(1).standard_normal((30, 3))
    assert energy_ratio(b, 30, X) == pytest.approx(1.0, abs=1e-12)
    r = energy_ratios(b, X)
    assert np.all(np.diff(r) >= -1e-15)
    for k in (1, 7, 19):
        Uk = b.U[:, :k]
        assert r[k - 1] == pytest.approx(np.linalg.norm(Uk @ Uk.T @ X) / np.linalg.norm(X), rel=1e-10)
    with pytest.raises(ValueError):
        energy_ratio(b, 3, np.zeros(30))


def test_frame_property_holds_often(rgg30):
    # with m well above the bound most draws embed the band
    g, L, b = rgg30
    k = 4
    poly = KernelPoly((1.0, 1.0))
    op = kernel_matrix(L, poly, b)
    dist = optimal_distribution(b, op, k)
    c1, c2 = poly.constants(b, k)
    band = op.Phi @ b.U[:, :k]
    ok = 0
    for t in range(200):
        omega = draw_samples(dist, 200, seed=[7, t])
        ok += delta_lower_bound(SamplePlan(omega, dist.p[omega], None), b, k, c1, c2,
                                band=band).delta < 0.9
    assert ok / 200 >= 0.9


def test_rank_loss_reported_as_zero_floor(rgg30):
    g, L, b = rgg30
    op = kernel_matrix(L, PHI_0)
    plan = assemble_plan(op, uniform_distribution(30), [5, 5, 5, 5, 9])
    d = delta_lower_bound(plan, b, 3, 1.0, 1.0)
    assert d.s_min == 0.0 and d.delta >= 1.0
