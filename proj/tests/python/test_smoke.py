import numpy as np
import pytest

import tucker_completion as tc


def test_unfold_matches_kolda_ordering():
    t = np.arange(1, 25, dtype=float).reshape((3, 4, 2), order="F")
    a1 = tc.unfold(t, 1)
    assert a1.shape == (3, 8)
    assert a1[0].tolist() == [1, 4, 7, 10, 13, 16, 19, 22]
    assert tc.unfold(t, 3)[1, 0] == 13
    np.testing.assert_array_equal(tc.fold(tc.unfold(t, 2), 2, (3, 4, 2)), t)


def test_mode_product_against_einsum():
    rng = np.random.default_rng(0)
    t = rng.standard_normal((4, 3, 2))
    v = rng.standard_normal((5, 3))
    np.testing.assert_allclose(tc.mode_product(t, v, 2), np.einsum("ijk,aj->iak", t, v), atol=1e-13)


def test_point_evaluate_and_full_agree():
    x = tc.random_point((6, 5, 4), (3, 2, 2), seed=1)
    assert x.orthonormality_error() < 1e-12
    full = x.full()
    u1, u2, u3 = x.factors
    np.testing.assert_allclose(full, np.einsum("abc,ia,jb,kc->ijk", x.core, u1, u2, u3), atol=1e-12)
    idx = np.array([[0, 0, 0], [5, 4, 3], [2, 1, 0]])
    s = x.evaluate(tc.SparseTensor3((6, 5, 4), idx, np.zeros(3)))
    np.testing.assert_allclose(s.values(), [full[tuple(i)] for i in s.indices()], atol=1e-12)


def test_manifold_dim():
    assert tc.manifold_dim((100, 100, 100), (10, 10, 10)) == 3700


def test_generate_and_recover():
    inst, truth = tc.generate_instance((20, 20, 20), (2, 2, 2), os_ratio=10.0, seed=3)
    assert len(inst.train) == len(inst.test)
    assert tc.mse(truth, inst.train) == 0.0
    cfg = tc.SolverConfig()
    cfg.seed = 1
    point, trace = tc.conjugate_gradient(inst, cfg)
    assert trace.termination == "train_mse_tol"
    assert trace.records[-1]["train_mse"] <= 1e-12
    assert tc.mse(point, inst.test) < 1e-8


def test_gradient_is_zero_at_the_truth():
    inst, truth = tc.generate_instance((10, 9, 8), (2, 2, 2), os_ratio=5.0, seed=4)
    g = tc.riemannian_grad(truth, inst.train)
    assert set(g) == {"u1", "u2", "u3", "core"}
    assert max(np.abs(v).max() for v in g.values()) < 1e-12


def test_errors_map_to_python_exceptions(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("3 3 3\n1 1 1 0.5\n1 1\n")
    with pytest.raises(tc.FormatError):
        tc.read_sparse(bad)
    with pytest.raises(tc.ShapeError):
        tc.random_point((2, 2, 2), (3, 1, 1))
