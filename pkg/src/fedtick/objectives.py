"""Client objectives: a quadratic family with known constants and two small classifiers.

Every model exposes ``n_params``, ``layout``, ``loss(values, batch)`` and
``grad(values, batch)`` on flat float64 vectors. The module-level
:func:`loss` and :func:`grad` work on :class:`ParamVector` and check layouts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ContractError(ValueError):
    """Raised when inputs violate a documented precondition (dims, emptiness)."""


@dataclass(frozen=True)
class ParamVector:
    """Flat model parameters plus the layout they were built for."""

    values: np.ndarray
    shape_tag: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ContractError(f"params must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ContractError("params contain non-finite entries")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.shape[0]

    def replace(self, values) -> "ParamVector":
        return ParamVector(values, self.shape_tag)


@dataclass(frozen=True)
class Minibatch:
    """A batch of samples, or a noise seed for quadratic clients.

    For quadratic objectives ``inputs`` is empty and the gradient noise of
    total variance ``sigma**2`` is drawn from ``noise_seed``.
    """

    inputs: np.ndarray
    targets: np.ndarray
    noise_seed: int | None = None
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "inputs", np.asarray(self.inputs, dtype=np.float64))
        object.__setattr__(self, "targets", np.asarray(self.targets))

    def __len__(self):
        return self.inputs.shape[0]

    @classmethod
    def noise_only(cls, noise_seed=None, sigma=0.0) -> "Minibatch":
        return cls(np.empty((0, 0)), np.empty(0, dtype=np.int64), noise_seed, float(sigma))


def _check_len(model, values):
    if values.shape[0] != model.n_params:
        raise ContractError(
            f"parameter length {values.shape[0]} does not match {model.layout} "
            f"(expects {model.n_params})"
        )


def _check_batch(model, batch):
    if len(batch) == 0:
        raise ContractError("empty minibatch")
    if batch.inputs.ndim != 2 or batch.inputs.shape[1] != model.n_features:
        raise ContractError(
            f"batch has {batch.inputs.shape[-1] if batch.inputs.ndim == 2 else batch.inputs.shape} "
            f"features, model expects {model.n_features}"
        )
    if batch.targets.shape[0] != batch.inputs.shape[0]:
        raise ContractError(
            f"batch has {batch.inputs.shape[0]} inputs but {batch.targets.shape[0]} targets"
        )


@dataclass(frozen=True, eq=False)
class QuadraticObjective:
    """f(x) = 0.5 (x - b)^T A (x - b) with A symmetric positive definite."""

    matrix_A: np.ndarray
    center_b: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.array(self.matrix_A, dtype=np.float64)
        b = np.array(self.center_b, dtype=np.float64).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ContractError(f"A must be square, got shape {A.shape}")
        if A.shape[0] != b.shape[0]:
            raise ContractError(f"A is {A.shape[0]}x{A.shape[1]} but b has length {b.shape[0]}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise ContractError("A must be symmetric")
        A = 0.5 * (A + A.T)
        eig = np.linalg.eigvalsh(A)
        if eig[0] <= 0:
            raise ContractError(f"A must be positive definite (min eigenvalue {eig[0]:.3g})")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix_A", A)
        object.__setattr__(self, "center_b", b)
        object.__setattr__(self, "eigenvalues", eig)

    @classmethod
    def from_spectrum(cls, eigenvalues, basis, center_b) -> "QuadraticObjective":
        Q = np.asarray(basis, dtype=np.float64)
        lam = np.asarray(eigenvalues, dtype=np.float64)
        return cls((Q * lam) @ Q.T, center_b)

    @property
    def dim(self) -> int:
        return self.center_b.shape[0]

    n_params = dim

    @property
    def layout(self) -> tuple:
        return ("quadratic", self.dim)

    def value(self, x) -> float:
        diff = np.asarray(x, dtype=np.float64) - self.center_b
        return 0.5 * float(diff @ self.matrix_A @ diff)

    def full_grad(self, x) -> np.ndarray:
        return self.matrix_A @ (np.asarray(x, dtype=np.float64) - self.center_b)

    def loss(self, values, batch=None) -> float:
        _check_len(self, values)
        return self.value(values)

    def grad(self, values, batch=None) -> np.ndarray:
        _check_len(self, values)
        g = self.full_grad(values)
        if batch is not None and batch.sigma > 0:
            rng = np.random.default_rng(batch.noise_seed)
            g = g + rng.standard_normal(self.dim) * (batch.sigma / np.sqrt(self.dim))
        return g


def _log_softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _xent_and_delta(logits, targets):
    logp = _log_softmax(logits)
    n = logits.shape[0]
    rows = np.arange(n)
    loss = -float(logp[rows, targets].mean())
    delta = np.exp(logp)
    delta[rows, targets] -= 1.0
    return loss, delta / n


@dataclass(frozen=True)
class LinearSoftmax:
    """Multinomial logistic regression; params are W (features x classes) then b."""

    n_features: int
    n_classes: int

    @property
    def n_params(self) -> int:
        return (self.n_features + 1) * self.n_classes

    @property
    def layout(self) -> tuple:
        return ("linear", self.n_features, self.n_classes)

    def unpack(self, values):
        f, c = self.n_features, self.n_classes
        return values[: f * c].reshape(f, c), values[f * c :]

    def logits(self, values, inputs):
        W, b = self.unpack(values)
        return inputs @ W + b

    def loss(self, values, batch) -> float:
        _check_len(self, values)
        _check_batch(self, batch)
        return _xent_and_delta(self.logits(values, batch.inputs), batch.targets)[0]

    def grad(self, values, batch) -> np.ndarray:
        _check_len(self, values)
        _check_batch(self, batch)
        _, delta = _xent_and_delta(self.logits(values, batch.inputs), batch.targets)
        return np.concatenate([(batch.inputs.T @ delta).ravel(), delta.sum(axis=0)])

    def init_params(self, rng) -> np.ndarray:
        return np.zeros(self.n_params)


@dataclass(frozen=True)
class MLP:
    """One hidden ReLU layer with a softmax cross-entropy head.

    Flat layout: W1 (features x hidden), b1, W2 (hidden x classes), b2.
    """

    n_features: int
    n_hidden: int
    n_classes: int

    @property
    def n_params(self) -> int:
        f, h, c = self.n_features, self.n_hidden, self.n_classes
        return f * h + h + h * c + c

    @property
    def layout(self) -> tuple:
        return ("mlp", self.n_features, self.n_hidden, self.n_classes)

    def unpack(self, values):
        f, h, c = self.n_features, self.n_hidden, self.n_classes
        i = 0
        W1 = values[i : i + f * h].reshape(f, h)
        i += f * h
        b1 = values[i : i + h]
        i += h
        W2 = values[i : i + h * c].reshape(h, c)
        i += h * c
        return W1, b1, W2, values[i:]

    def logits(self, values, inputs):
        W1, b1, W2, b2 = self.unpack(values)
        return np.maximum(inputs @ W1 + b1, 0.0) @ W2 + b2

    def loss(self, values, batch) -> float:
        _check_len(self, values)
        _check_batch(self, batch)
        return _xent_and_delta(self.logits(values, batch.inputs), batch.targets)[0]

    def grad(self, values, batch) -> np.ndarray:
        _check_len(self, values)
        _check_batch(self, batch)
        W1, b1, W2, b2 = self.unpack(values)
        pre = batch.inputs @ W1 + b1
        hidden = np.maximum(pre, 0.0)
        _, delta = _xent_and_delta(hidden @ W2 + b2, batch.targets)
        d_hidden = (delta @ W2.T) * (pre > 0)
        return np.concatenate(
            [
                (batch.inputs.T @ d_hidden).ravel(),
                d_hidden.sum(axis=0),
                (hidden.T @ delta).ravel(),
                delta.sum(axis=0),
            ]
        )

    def init_params(self, rng) -> np.ndarray:
        f, h, c = self.n_features, self.n_hidden, self.n_classes
        W1 = rng.standard_normal((f, h)) * np.sqrt(2.0 / f)
        W2 = rng.standard_normal((h, c)) * np.sqrt(2.0 / h)
        return np.concatenate([W1.ravel(), np.zeros(h), W2.ravel(), np.zeros(c)])


def _resolve(model, params: ParamVector):
    if tuple(params.shape_tag) != model.layout:
        raise ContractError(f"params laid out as {params.shape_tag}, model expects {model.layout}")
    return params.values


def loss(model, params: ParamVector, batch: Minibatch | None = None) -> float:
    """Mean per-sample loss of ``model`` at ``params`` on ``batch``."""
    return model.loss(_resolve(model, params), batch)


def grad(model, params: ParamVector, batch: Minibatch | None = None) -> ParamVector:
    """Minibatch gradient, returned with the same layout as ``params``."""
    return params.replace(model.grad(_resolve(model, params), batch))


def smoothness_constants(obj: QuadraticObjective) -> tuple[float, float]:
    """Return ``(L, mu)``: the largest and smallest eigenvalues of A."""
    return float(obj.eigenvalues[-1]), float(obj.eigenvalues[0])
