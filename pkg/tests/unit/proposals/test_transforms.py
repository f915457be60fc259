"""
Unit tests for projected coordinates
"""

import numpy as np
import pytest

from src.models.clr_models import augment
from src.proposals.transforms import forward_transform, inverse_transform
from src.regression.core import weighted_least_squares
from src.utils.clr_exceptions import ProposalFailedError, VerticalHyperplaneError


class TestForwardInverse:
    """Test the forward and inverse transforms"""

    def setup_method(self):
        """Set up a correlated three-predictor sample"""
        rng = np.random.default_rng(3)
        self.X = rng.standard_normal((200, 3)) @ np.array(
            [[2.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.3, 0.2]]
        ) + np.array([1.0, -2.0, 0.5])
        self.y = self.X @ np.array([0.3, -1.0, 2.0]) + rng.standard_normal(200)
        self.beta = np.array([0.7, 1.5, -0.2, 0.4])

    def test_round_trip(self):
        """Test inverse(forward(β)) recovers β to 1e-8"""
        _, alpha0, ctx = forward_transform(self.X, self.y, self.beta)

        np.testing.assert_allclose(
            inverse_transform([alpha0], ctx)[0], self.beta, atol=1e-8
        )

    def test_all_axes_kept(self):
        """Test full-rank data keeps p+1 projected axes"""
        P, alpha0, ctx = forward_transform(self.X, self.y, self.beta)

        assert P.shape == (200, 4)
        assert alpha0.shape == (5,)
        assert ctx.D == 5

    def test_projected_points_whitened_axes(self):
        """Test projected coordinates are centered and uncorrelated"""
        P, _, _ = forward_transform(self.X, self.y, self.beta)
        covariance = P.T @ P / P.shape[0]

        np.testing.assert_allclose(P.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(
            covariance - np.diag(np.diag(covariance)), 0.0, atol=1e-10
        )

    def test_least_squares_plane_through_centroid(self):
        """Test an OLS fit with intercept has zero projected offset"""
        beta = weighted_least_squares(augment(self.X), self.y, np.ones(200))
        _, alpha0, _ = forward_transform(self.X, self.y, beta)

        assert alpha0[0] == pytest.approx(0.0, abs=1e-10)

    def test_constant_column(self):
        """Test a constant predictor is flagged and dropped as an axis"""
        X = np.column_stack([self.X[:, 0], np.full(200, 4.0)])
        P, alpha0, ctx = forward_transform(X, self.y, np.array([0.0, 1.0, 0.0]))

        assert ctx.constant_columns.tolist() == [1]
        assert P.shape[1] == 2
        assert alpha0.shape == (3,)

    def test_predictors_share_scale(self):
        """Test all predictors get one scale and y keeps its own"""
        _, _, ctx = forward_transform(self.X, self.y, self.beta)

        expected = np.sqrt(np.mean(self.X.var(axis=0)))
        np.testing.assert_allclose(ctx.scale[:3], expected)
        assert ctx.scale[3] == pytest.approx(self.y.std())

    def test_rotation_keeps_spectrum(self):
        """Test rotating X leaves eigenvalues and the projected offset unchanged"""
        Q, _ = np.linalg.qr(np.random.default_rng(8).standard_normal((3, 3)))
        rotated_beta = np.concatenate([self.beta[:1], self.beta[1:] @ Q])

        P, alpha0, ctx = forward_transform(self.X, self.y, self.beta)
        P_rot, alpha0_rot, ctx_rot = forward_transform(
            self.X @ Q, self.y, rotated_beta
        )

        np.testing.assert_allclose(ctx_rot.eigenvalues, ctx.eigenvalues, atol=1e-10)
        assert alpha0_rot[0] == pytest.approx(alpha0[0], abs=1e-10)
        np.testing.assert_allclose(
            np.abs(P_rot.T @ P), np.abs(np.diag(np.diag(P.T @ P))), atol=1e-6
        )

    def test_too_few_points(self):
        """Test fewer than p+2 points cannot be projected"""
        with pytest.raises(ProposalFailedError):
            forward_transform(self.X[:4], self.y[:4], self.beta)

    def test_vertical_hyperplane(self):
        """Test a plane with no response component cannot be inverted"""
        _, alpha0, ctx = forward_transform(self.X, self.y, self.beta)
        first_predictor = np.zeros(4)
        first_predictor[0] = ctx.scale[0]
        vertical = np.concatenate([[0.0], ctx.V.T @ first_predictor])

        with pytest.raises(VerticalHyperplaneError):
            inverse_transform([vertical], ctx)

    def test_wrong_alpha_length(self):
        """Test alpha vectors must have length D"""
        _, _, ctx = forward_transform(self.X, self.y, self.beta)

        with pytest.raises(ValueError):
            inverse_transform([np.ones(3)], ctx)
