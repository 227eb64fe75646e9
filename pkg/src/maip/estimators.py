"""scikit-learn style front ends for the reconstruction methods.

``X`` is always the (M, L) matrix of normalized measurement frames and
the output of ``transform`` is the (N, L) matrix of in-mask conductivity
values.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .net import MBANetConfig
from .recon import ReconConfig, run_maip
from .validation import check_measurements, check_sensitivity


class MAIPReconstructor(TransformerMixin, BaseEstimator):
    """Multi-branch attention image prior.

    Fitting optimizes a freshly initialized network against ``X``. The
    method is transductive: ``transform`` returns the stack recovered for
    the fitted measurements and refuses any other input.

    Parameters
    ----------
    sensitivity : SensitivityMatrix
        Normalized Jacobian on the reconstruction grid.
    iterations, learning_rate, loss, seed
        Optimization settings; ``loss`` is ``"l1"`` or ``"frobenius"``.
    base_channels, fu_channels, aspp_dilations, se_reduction, leaky_slope
        Network shape.
    attention, multi_branch, norm
        Ablation switches; the defaults are the full model.
    fu_output_zero, fu_output_bias
        Start of the last fusion layer, see :class:`MBANetConfig`.

    Attributes
    ----------
    stack_ : ConductivityStack
    frames_ : ndarray of shape (L, H, W)
    loss_trace_ : list of float
    attention_ : ndarray of shape (L, L) or None
    scaling_ : ndarray of shape (L,) or None
    """

    def __init__(self, sensitivity=None, iterations=900, learning_rate=0.00012, loss="l1",
                 seed=0, base_channels=16, fu_channels=32, aspp_dilations=(1, 2, 4),
                 se_reduction=4, leaky_slope=1e-4, attention=True, multi_branch=True,
                 norm="aln", fu_output_zero=True, fu_output_bias=-4.0):
        self.sensitivity = sensitivity
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.loss = loss
        self.seed = seed
        self.base_channels = base_channels
        self.fu_channels = fu_channels
        self.aspp_dilations = aspp_dilations
        self.se_reduction = se_reduction
        self.leaky_slope = leaky_slope
        self.attention = attention
        self.multi_branch = multi_branch
        self.norm = norm
        self.fu_output_zero = fu_output_zero
        self.fu_output_bias = fu_output_bias

    def network_config(self, n_frames):
        J = check_sensitivity(self.sensitivity)
        return MBANetConfig(
            branches=n_frames, height=J.grid.height, width=J.grid.width,
            base_channels=self.base_channels, aspp_dilations=tuple(self.aspp_dilations),
            se_reduction=self.se_reduction, leaky_slope=self.leaky_slope,
            fu_channels=self.fu_channels, attention=self.attention,
            multi_branch=self.multi_branch, norm=self.norm,
            fu_output_zero=self.fu_output_zero, fu_output_bias=self.fu_output_bias,
            seed=self.seed)

    def recon_config(self):
        return ReconConfig(iterations=self.iterations, lr=self.learning_rate, seed=self.seed,
                           loss=self.loss)

    def fit(self, X, y=None, callback=None):
        J = check_sensitivity(self.sensitivity)
        X = check_measurements(X, n_measurements=J.n_measurements)
        result = run_maip(J, X, self.network_config(X.shape[1]), self.recon_config(),
                          callback=callback)
        self.result_ = result
        self.stack_ = result.stack
        self.frames_ = result.frames
        self.loss_trace_ = result.loss_trace
        self.attention_ = result.attention
        self.scaling_ = result.scaling
        self.n_features_in_ = X.shape[1]
        self._fitted_measurements = X.copy()
        return self

    def transform(self, X):
        check_is_fitted(self, "stack_")
        X = check_measurements(X, n_frames=self.n_features_in_)
        if not np.array_equal(X, self._fitted_measurements):
            raise ValueError("MAIPReconstructor is transductive; call fit on new measurements")
        return self.stack_.vectors.copy()


class TikhonovReconstructor(TransformerMixin, BaseEstimator):
    """Ridge-regularized one-step reconstruction, ``(J.T J + alpha I)^-1 J.T v`` per frame."""

    def __init__(self, sensitivity=None, alpha=1e-3):
        self.sensitivity = sensitivity
        self.alpha = alpha

    def fit(self, X=None, y=None):
        J = check_sensitivity(self.sensitivity)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        Jm = J.J
        self.solution_operator_ = np.linalg.solve(
            Jm.T @ Jm + self.alpha * np.eye(Jm.shape[1]), Jm.T)
        return self

    def transform(self, X):
        check_is_fitted(self, "solution_operator_")
        X = check_measurements(X, n_measurements=self.sensitivity.n_measurements)
        return self.solution_operator_ @ X
