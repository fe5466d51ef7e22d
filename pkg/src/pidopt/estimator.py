"""Scikit-learn compatible classifier around the from-scratch MLP.

The estimator owns the training loop (seeded shuffling, dropout, optimizer
steps) and exposes the usual fit/predict/predict_proba/score surface plus
get_params/set_params/clone, so it drops into pipelines, grid search, and
cross-validation like any other sklearn classifier.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import HyperParams
from .data import Dataset, batch_iter
from .network import evaluate, forward, he_init, mlp_loss_and_grad, params_to_vector, \
    set_params_from_vector, softmax
from .optimizers import ALGORITHMS, Optimizer
from .rng import derive_seed


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Multilayer perceptron classifier trained by one of the package's
    nine optimizers.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Width of each hidden layer.
    optimizer : str
        One of ``pidopt.optimizers.ALGORITHMS`` (e.g. "adam", "adapid",
        "iadapid-adg").
    learning_rate, gamma, beta, ki, kd, sigma : float
        Optimizer hyperparameters; see :class:`pidopt.core.HyperParams`.
    use_max, use_modulation : bool
        Feature toggles for the combined "iadapid-adg" optimizer.
    dropout : float
        Inverted-dropout rate on hidden activations during training.
    batch_size, epochs : int
        Minibatch size and number of passes over the training set.
    seed : int
        Pins initialization, batch order, and dropout masks bit-for-bit.

    Attributes
    ----------
    classes_ : ndarray of the sorted class labels seen in fit.
    model_ : the trained :class:`pidopt.network.MlpModel`.
    history_ : list of per-epoch dicts with keys epoch, train_loss,
        train_acc, test_loss, test_acc (None without an eval_set), wall_ms.
        Accuracies are fractions in [0, 1]; losses and accuracies come from
        a dedicated post-epoch evaluation pass with dropout off.
    loss_curve_ : per-epoch training loss (same values as history_).
    """

    def __init__(self, hidden_layer_sizes=(1000, 1000), optimizer="iadapid-adg",
                 learning_rate=0.001, gamma=0.9, beta=0.99, ki=0.5, kd=1.0,
                 sigma=1e-8, use_max=True, use_modulation=True, dropout=0.3,
                 batch_size=128, epochs=20, seed=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.gamma = gamma
        self.beta = beta
        self.ki = ki
        self.kd = kd
        self.sigma = sigma
        self.use_max = use_max
        self.use_modulation = use_modulation
        self.dropout = dropout
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def _hyperparams(self) -> HyperParams:
        return HyperParams(eta=self.learning_rate, gamma=self.gamma, beta=self.beta,
                           ki=self.ki, kd=self.kd, sigma=self.sigma,
                           use_max=self.use_max, use_modulation=self.use_modulation)

    def fit(self, X, y, eval_set=None):
        """Train on (X, y); optionally track (X_test, y_test) per epoch.

        Raises FloatingPointError naming the epoch and batch if the training
        loss ever turns non-finite.
        """
        if self.optimizer not in ALGORITHMS:
            raise ValueError(f"unknown optimizer '{self.optimizer}'; "
                             f"choose from {sorted(ALGORITHMS)}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not self.hidden_layer_sizes:
            raise ValueError("need at least one hidden layer")
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        self.n_features_in_ = X.shape[1]

        test_inputs = test_labels = None
        if eval_set is not None:
            test_inputs = check_array(eval_set[0], dtype=np.float64)
            test_labels = self._encode_labels(np.asarray(eval_set[1]))

        dims = [self.n_features_in_, *self.hidden_layer_sizes, len(self.classes_)]
        self.model_ = he_init(dims, self.seed, dropout_rate=self.dropout)
        hp = self._hyperparams()
        train_set = Dataset(X, y_idx.astype(np.int64))

        w = params_to_vector(self.model_)
        opt = Optimizer(self.optimizer, w.size, hp)
        self.history_ = []
        self.loss_curve_ = []
        for epoch in range(1, self.epochs + 1):
            tic = time.perf_counter()
            epoch_seed = derive_seed(self.seed, epoch)
            for b, batch in enumerate(batch_iter(train_set, self.batch_size, epoch_seed)):
                loss, grads, _ = mlp_loss_and_grad(
                    self.model_, batch, training=True,
                    rng_seed=derive_seed(self.seed, epoch, b))
                if not np.isfinite(loss):
                    raise FloatingPointError(
                        f"non-finite training loss ({loss}) at epoch {epoch}, batch {b}")
                w = w + opt.step(grads)
                set_params_from_vector(self.model_, w)

            train_loss, train_acc = evaluate(self.model_, X, y_idx)
            row = {"epoch": epoch, "train_loss": train_loss, "train_acc": train_acc,
                   "test_loss": None, "test_acc": None}
            if test_inputs is not None:
                row["test_loss"], row["test_acc"] = evaluate(
                    self.model_, test_inputs, test_labels)
            row["wall_ms"] = (time.perf_counter() - tic) * 1000.0
            self.history_.append(row)
            self.loss_curve_.append(train_loss)
        return self

    def _encode_labels(self, y: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.classes_, y)
        idx = np.clip(idx, 0, len(self.classes_) - 1)
        if not np.array_equal(self.classes_[idx], y):
            raise ValueError("labels outside the classes seen during fit")
        return idx.astype(np.int64)

    def decision_function(self, X):
        """Raw logits, shape (n_samples, n_classes)."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return forward(self.model_, X, training=False)

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        logits = self.decision_function(X)
        return self.classes_[logits.argmax(axis=1)]
