import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noge import hypercomplex as hc
from oracles import deinterleave, expand_quat_matrix, interleave, table_product

ONE, I, J, K = np.eye(4)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
quats = arrays(np.float64, 4, elements=finite)
duals = arrays(np.float64, 8, elements=finite)


def dq(q, p=(0, 0, 0, 0)):
    return np.concatenate([np.asarray(q, float), np.asarray(p, float)])


class TestHamilton:
    def test_identity(self, rng):
        y = rng.normal(size=4)
        np.testing.assert_array_equal(hc.hamilton(ONE, y), y)
        np.testing.assert_array_equal(hc.hamilton(y, ONE), y)

    @pytest.mark.parametrize(
        "x, y, expected",
        [(I, J, K), (J, I, -K), (J, K, I), (K, J, -I), (K, I, J), (I, K, -J), (I, I, -ONE), (J, J, -ONE), (K, K, -ONE)],
    )
    def test_basis_table_exact(self, x, y, expected):
        np.testing.assert_array_equal(hc.hamilton(x, y), expected)

    def test_norm_multiplicative(self, rng):
        x, y = rng.normal(size=(2, 4, 1000))
        np.testing.assert_allclose(hc.quat_norm(hc.hamilton(x, y)), hc.quat_norm(x) * hc.quat_norm(y), rtol=1e-12)

    @given(quats, quats)
    def test_matches_table_oracle(self, x, y):
        np.testing.assert_allclose(hc.hamilton(x, y), table_product(x, y), atol=1e-9)

    def test_broadcasts_over_trailing_axes(self, rng):
        x, y = rng.normal(size=(2, 4, 3, 5))
        out = hc.hamilton(x, y)
        np.testing.assert_allclose(out[:, 1, 2], table_product(x[:, 1, 2], y[:, 1, 2]), rtol=1e-14)


class TestQuaternionBasics:
    def test_conjugate(self):
        np.testing.assert_array_equal(hc.quat_conjugate([1, 2, 3, 4]), [1, -2, -3, -4])

    def test_norm(self):
        assert hc.quat_norm([0.6, 0.8, 0, 0]) == pytest.approx(1.0, abs=1e-15)

    def test_normalize(self):
        np.testing.assert_array_equal(hc.quat_normalize([2, 0, 0, 0]), [1, 0, 0, 0])

    def test_normalize_zero_raises(self):
        with pytest.raises(hc.DegenerateInputError):
            hc.quat_normalize([0, 0, 0, 0])

    def test_quat_inner(self):
        assert hc.quat_inner(ONE[:, None], ONE[:, None]) == 1.0
        assert hc.quat_inner(I[:, None], J[:, None]) == 0.0

    def test_quat_inner_is_flattened_dot(self, rng):
        x, y = rng.normal(size=(2, 4, 7))
        assert hc.quat_inner(x, y) == pytest.approx(float(interleave(x) @ interleave(y)), rel=1e-12)

    def test_quat_inner_shape_mismatch(self):
        with pytest.raises(ValueError):
            hc.quat_inner(np.zeros((4, 2)), np.zeros((4, 3)))


class TestDualQuaternion:
    def test_worked_product(self):
        # (1 + eps i)(j) = j + eps k
        np.testing.assert_array_equal(hc.dq_multiply(dq(ONE, I), dq(J)), dq(J, K))

    def test_identity_two_sided(self, rng):
        h = rng.normal(size=8)
        e = dq(ONE)
        np.testing.assert_array_equal(hc.dq_multiply(e, h), h)
        np.testing.assert_array_equal(hc.dq_multiply(h, e), h)

    def test_associative(self, rng):
        a, b, c = rng.normal(size=(3, 8, 500))
        lhs = hc.dq_multiply(hc.dq_multiply(a, b), c)
        rhs = hc.dq_multiply(a, hc.dq_multiply(b, c))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_conjugate(self):
        np.testing.assert_array_equal(hc.dq_conjugate(dq(ONE, I)), dq(ONE, -I))

    @given(duals)
    def test_conjugate_involution(self, h):
        np.testing.assert_array_equal(hc.dq_conjugate(hc.dq_conjugate(h)), h)

    def test_product_with_conjugate_is_scalar(self, rng):
        h = rng.normal(size=(8, 200))
        out = hc.dq_multiply(h, hc.dq_conjugate(h))
        np.testing.assert_allclose(out[[1, 2, 3, 5, 6, 7]], 0.0, atol=1e-12)

    def test_norm_unit_case(self):
        assert hc.dq_norm(dq([0.6, 0.8, 0, 0])) == pytest.approx((1.0, 0.0), abs=1e-15)

    def test_norm_dual_part(self):
        assert hc.dq_norm(dq(ONE, ONE)) == (1.0, 1.0)

    def test_norm_zero_raises(self):
        with pytest.raises(hc.DegenerateInputError):
            hc.dq_norm(dq([0, 0, 0, 0], ONE))

    def test_norm_multiplicative(self, rng):
        for _ in range(200):
            h1, h2 = rng.normal(size=(2, 8))
            lhs = hc.dq_norm(hc.dq_multiply(h1, h2))
            rhs = hc.dq_norm(h1) * hc.dq_norm(h2)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-10)

    def test_norm_batched_matches_single(self, rng):
        h = rng.normal(size=(8, 5))
        batched = hc.dq_norm(h)
        for n in range(5):
            single = hc.dq_norm(h[:, n])
            assert isinstance(single.real, float)
            assert (batched.real[n], batched.dual[n]) == (single.real, single.dual)

    def test_normalize_worked(self):
        out = hc.dq_normalize(dq([2, 0, 0, 0], [0, 1, 0, 0]))
        np.testing.assert_allclose(out, dq(ONE, [0, 0.5, 0, 0]), atol=1e-15)

    def test_normalize_unit_idempotent(self, rng):
        h = hc.dq_normalize(rng.normal(size=8))
        np.testing.assert_allclose(hc.dq_normalize(h), h, atol=1e-12)

    def test_normalize_unit_conditions(self, rng):
        h = hc.dq_normalize(rng.normal(size=(8, 500)))
        q, p = hc.dq_parts(h)
        np.testing.assert_allclose(hc.quat_dot(q, q), 1.0, atol=1e-10)
        np.testing.assert_allclose(hc.quat_dot(q, p), 0.0, atol=1e-10)

    def test_normalize_zero_raises(self):
        with pytest.raises(hc.DegenerateInputError):
            hc.dq_normalize(np.zeros(8))


class TestMatvec:
    def test_identity_diagonal(self, rng):
        W = np.zeros((4, 3, 3))
        W[0] = np.eye(3)
        x = rng.normal(size=(4, 3))
        np.testing.assert_array_equal(hc.quat_matvec(W, x), x)

    def test_single_entry_basis(self):
        W = I.reshape(4, 1, 1)
        np.testing.assert_array_equal(hc.quat_matvec(W, J[:, None]), K[:, None])

    @pytest.mark.parametrize("n_out, n_in", [(1, 1), (2, 5), (8, 8), (5, 3)])
    def test_matches_real_expansion(self, rng, n_out, n_in):
        W = rng.normal(size=(4, n_out, n_in))
        x = rng.normal(size=(4, n_in))
        expected = deinterleave(expand_quat_matrix(W) @ interleave(x))
        np.testing.assert_allclose(hc.quat_matvec(W, x), expected, rtol=1e-10, atol=1e-12)

    def test_batched_rows(self, rng):
        W = rng.normal(size=(4, 3, 2))
        X = rng.normal(size=(4, 6, 2))
        out = hc.quat_matvec(W, X)
        for n in range(6):
            np.testing.assert_allclose(out[:, n], hc.quat_matvec(W, X[:, n]), rtol=1e-13)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            hc.quat_matvec(np.zeros((4, 2, 3)), np.zeros((4, 2)))

    def test_dq_matvec_reduces_without_dual_weight(self, rng):
        Wq = rng.normal(size=(4, 3, 3))
        W = np.concatenate([Wq, np.zeros_like(Wq)])
        x = rng.normal(size=(8, 3))
        out = hc.dq_matvec(W, x)
        np.testing.assert_allclose(out[:4], hc.quat_matvec(Wq, x[:4]), rtol=1e-14)
        np.testing.assert_allclose(out[4:], hc.quat_matvec(Wq, x[4:]), rtol=1e-14)

    def test_dq_matvec_real_input(self, rng):
        W = rng.normal(size=(8, 2, 3))
        x = np.concatenate([rng.normal(size=(4, 3)), np.zeros((4, 3))])
        out = hc.dq_matvec(W, x)
        np.testing.assert_allclose(out[:4], hc.quat_matvec(W[:4], x[:4]), rtol=1e-14)
        np.testing.assert_allclose(out[4:], hc.quat_matvec(W[4:], x[:4]), rtol=1e-14)

    def test_dq_matvec_entrywise_oracle(self, rng):
        W = rng.normal(size=(8, 4, 6))
        x = rng.normal(size=(8, 6))
        expected = np.zeros((8, 4))
        for i in range(4):
            for j in range(6):
                expected[:, i] += hc.dq_multiply(W[:, i, j], x[:, j])
        np.testing.assert_allclose(hc.dq_matvec(W, x), expected, rtol=1e-10, atol=1e-12)

    def test_backward_identities(self, rng):
        W = rng.normal(size=(8, 3, 2))
        X = rng.normal(size=(8, 5, 2))
        G = rng.normal(size=(8, 5, 3))
        dW, dX = hc.dq_matvec_backward(W, X, G)
        eps = 1e-6
        for arr, grad in ((W, dW), (X, dX)):
            for idx in [(0, 0, 0), (5, 1, 1), (7, 2, 0)]:
                if idx[1] >= arr.shape[1] or idx[2] >= arr.shape[2]:
                    continue
                orig = arr[idx]
                arr[idx] = orig + eps
                up = np.sum(G * hc.dq_matvec(W, X))
                arr[idx] = orig - eps
                down = np.sum(G * hc.dq_matvec(W, X))
                arr[idx] = orig
                assert grad[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-7, abs=1e-9)


def test_concat_dual_to_quat():
    h = dq(ONE, I).reshape(8, 1)
    np.testing.assert_array_equal(hc.concat_dual_to_quat(h), np.stack([ONE, I], axis=1))
    rng = np.random.default_rng(0)
    h = rng.normal(size=(8, 5, 3))
    h[4:] = 0
    out = hc.concat_dual_to_quat(h)
    assert out.shape == (4, 5, 6) and out.size == h.size
    np.testing.assert_array_equal(out[..., 3:], 0.0)
    np.testing.assert_array_equal(hc.split_quat_to_dual(out), h)
