import numpy as np
import pytest

from conftest import dense_to_sparse, require_matrix
from sstepcg.matio import (
    DegenerateMatrixError,
    MatrixMarketError,
    build_rhs,
    estimate_operator_norms,
    jacobi_precondition,
    read_matrix_market,
)

EPS = np.finfo(float).eps


class TestReadMatrixMarket:
    def test_identity_symmetric(self, identity_mm):
        a = read_matrix_market(identity_mm)
        assert a.n == 3
        assert a.nnz == 3
        assert a.n_a == 1
        np.testing.assert_array_equal(a.to_dense(), np.eye(3))

    def test_nos1_dimensions(self):
        a = read_matrix_market(require_matrix("nos1"))
        assert a.n == 237
        assert a.nnz == 1017

    def test_494bus_dimensions(self):
        a = read_matrix_market(require_matrix("494_bus"))
        assert a.n == 494
        assert a.nnz == 1666

    def test_general_with_symmetric_pattern(self, tmp_path):
        p = tmp_path / "gen.mtx"
        p.write_text(
            "%%MatrixMarket matrix coordinate real general\n"
            "2 2 4\n1 1 2.0\n1 2 1.0\n2 1 1.0\n2 2 3.0\n"
        )
        a = read_matrix_market(str(p))
        np.testing.assert_array_equal(a.to_dense(), [[2.0, 1.0], [1.0, 3.0]])

    def test_duplicates_summed(self, tmp_path):
        p = tmp_path / "dup.mtx"
        p.write_text(
            "%%MatrixMarket matrix coordinate real symmetric\n"
            "2 2 3\n1 1 1.0\n1 1 2.0\n2 2 1.0\n"
        )
        a = read_matrix_market(str(p))
        assert a.to_dense()[0, 0] == 3.0

    @pytest.mark.parametrize(
        "content,line",
        [
            ("%%NotMatrixMarket\n2 2 1\n1 1 1.0\n", 1),
            ("%%MatrixMarket matrix coordinate complex symmetric\n2 2 1\n1 1 1.0 0.0\n", 1),
            ("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n1 1\n", 1),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1.0\n", 2),
            ("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\nbroken line\n", 4),
        ],
    )
    def test_parse_errors_carry_line_numbers(self, tmp_path, content, line):
        p = tmp_path / "bad.mtx"
        p.write_text(content)
        with pytest.raises(MatrixMarketError) as exc:
            read_matrix_market(str(p))
        assert exc.value.line_no == line


class TestJacobiPrecondition:
    def test_diagonal_becomes_identity(self):
        a = dense_to_sparse(np.diag([4.0, 9.0, 0.25]))
        ah, dinv = jacobi_precondition(a)
        np.testing.assert_array_equal(ah.to_dense(), np.eye(3))
        np.testing.assert_allclose(dinv, [0.5, 1 / 3, 2.0])

    def test_two_by_two_hand_computed(self):
        a = dense_to_sparse([[4.0, 1.0], [1.0, 2.0]])
        ah, _ = jacobi_precondition(a)
        expected = np.array([[1.0, 1.0 / (2 * np.sqrt(2))], [1.0 / (2 * np.sqrt(2)), 1.0]])
        np.testing.assert_allclose(ah.to_dense(), expected, rtol=1e-15)

    def test_494bus_matches_reference_properties(self, bus494_problem):
        # reference values for the diagonally preconditioned matrix
        assert bus494_problem.norm_a == pytest.approx(2.00, rel=0.02)
        assert bus494_problem.kappa_a == pytest.approx(7.90e4, rel=0.02)

    def test_bitwise_symmetry(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((20, 20))
        a = dense_to_sparse(m @ m.T + 20 * np.eye(20))
        ah, _ = jacobi_precondition(a)
        d = ah.to_dense()
        assert np.max(np.abs(d - d.T)) == 0.0

    def test_row_scaling_recomputable(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((15, 15))
        a = dense_to_sparse(m @ m.T + 15 * np.eye(15))
        ah, _ = jacobi_precondition(a)
        d = a.row_max()
        root = np.sqrt(d)
        ad, ahd = a.to_dense(), ah.to_dense()
        for i in range(15):
            for j in range(15):
                if ad[i, j] != 0.0:
                    lo, hi = min(i, j), max(i, j)
                    assert ahd[i, j] == ad[i, j] / (root[lo] * root[hi])

    def test_nonpositive_row_max_rejected(self):
        a = dense_to_sparse([[-1.0, 0.0], [0.0, 2.0]])
        with pytest.raises(DegenerateMatrixError):
            jacobi_precondition(a)


class TestBuildRhs:
    def test_small_cases(self):
        np.testing.assert_array_equal(build_rhs(1), [1.0])
        np.testing.assert_array_equal(build_rhs(4), [0.5, 0.5, 0.5, 0.5])

    def test_n494_value(self):
        b = build_rhs(494)
        assert b[0] == pytest.approx(0.044992, abs=1e-6)
        assert abs(np.linalg.norm(b) - 1.0) <= 8 * EPS

    @pytest.mark.parametrize("n", [1, 2, 3, 10, 237, 4096, 10**6])
    def test_unit_norm_up_to_roundoff(self, n):
        # 8 ulps covers the entry rounding; the summed-square accumulation
        # adds at most ~n/8 rounding steps of relative size eps on a sum of 1
        bound = 8 * EPS + (n / 8) * EPS
        assert abs(np.linalg.norm(build_rhs(n)) - 1.0) <= bound

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            build_rhs(0)


class TestEstimateOperatorNorms:
    def test_identity(self):
        est = estimate_operator_norms(dense_to_sparse(np.eye(5)))
        assert est.norm_a == pytest.approx(1.0, rel=1e-9)
        assert est.norm_abs_a == pytest.approx(1.0, rel=1e-9)
        assert est.kappa_a == pytest.approx(1.0, rel=1e-9)

    def test_diagonal_spectrum(self):
        est = estimate_operator_norms(dense_to_sparse(np.diag([1.0, 10.0])))
        assert est.norm_a == pytest.approx(10.0, rel=1e-9)
        assert est.norm_abs_a == pytest.approx(10.0, rel=1e-9)
        assert est.kappa_a == pytest.approx(10.0, rel=1e-9)

    def test_diagonal_extremes_exact_to_tolerance(self):
        d = np.linspace(0.5, 7.5, 40)
        est = estimate_operator_norms(dense_to_sparse(np.diag(d)))
        assert est.norm_a == pytest.approx(7.5, rel=1e-8)
        assert est.kappa_a == pytest.approx(15.0, rel=1e-8)

    def test_bcsstk09_kappa(self):
        # reference: kappa of the preconditioned matrix ~ 1.04e4
        from sstepcg.matio import load_problem

        p = load_problem(require_matrix("bcsstk09"), label="bcsstk09")
        assert p.kappa_a == pytest.approx(1.04e4, rel=0.02)
