"""Client populations: synthetic quadratic federations and label-shard partitions."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from fedtick.objectives import ContractError, Minibatch, QuadraticObjective


class ConfigurationError(ValueError):
    """Invalid construction parameters for a federation or partition."""


class UnsupportedOperation(TypeError):
    """The operation needs closed-form quadratic constants this federation lacks."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix and integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ContractError(f"inputs {X.shape} and labels {y.shape} are inconsistent")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx])


@dataclass(frozen=True, eq=False)
class Client:
    id: int
    weight_p: float
    objective: QuadraticObjective | None = None
    data: Dataset | None = None
    sigma: float = 0.0

    @property
    def n_samples(self) -> int:
        return len(self.data) if self.data is not None else 1


@dataclass(frozen=True, eq=False)
class TheoryConstants:
    L: float
    mu: float
    kappa: float
    gamma: float
    g_squared: float
    sigma_weighted: float
    f_star: float
    x_star: np.ndarray
    n_participants: int
    c_total: int
    f0: float


@dataclass(frozen=True, eq=False)
class Federation:
    """A fixed population of clients sharing one model.

    ``model`` is a :class:`QuadraticObjective`-compatible marker for
    quadratic federations (``None``) or a classifier for dataset clients.
    ``x0`` is the initial global model; quadratic constants depend on it
    through ``G^2`` and ``F(x0)``.
    """

    clients: tuple
    x0: np.ndarray
    model: object = None
    validation: Dataset | None = None
    global_constants: TheoryConstants | None = None
    n_participants: int | None = None

    def __post_init__(self):
        if len(self.clients) < 1:
            raise ConfigurationError("a federation needs at least one client")
        ids = [c.id for c in self.clients]
        if ids != list(range(len(ids))):
            raise ConfigurationError(f"client ids must be 0..C-1 in order, got {ids[:10]}")
        total = sum(c.weight_p for c in self.clients)
        if abs(total - 1.0) > 1e-9:
            raise ConfigurationError(f"client weights sum to {total!r}, expected 1")
        x0 = np.array(self.x0, dtype=np.float64)
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "clients", tuple(self.clients))

    @property
    def c_total(self) -> int:
        return len(self.clients)

    @property
    def is_quadratic(self) -> bool:
        return self.model is None

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight_p for c in self.clients])

    @property
    def layout(self) -> tuple:
        if self.is_quadratic:
            return ("quadratic", self.x0.shape[0])
        return self.model.layout

    def global_loss(self, x) -> float:
        """F(x) = sum_c p_c f_c(x) for quadratic federations."""
        _require_quadratic(self)
        return float(sum(c.weight_p * c.objective.value(x) for c in self.clients))

    def global_grad(self, x) -> np.ndarray:
        _require_quadratic(self)
        return sum(c.weight_p * c.objective.full_grad(x) for c in self.clients)

    def with_initial(self, x0) -> "Federation":
        """Copy with a new initial model; G^2 and F(x0) are recomputed."""
        fed = replace(self, x0=x0, global_constants=None)
        if fed.is_quadratic:
            fed = replace(fed, global_constants=_theory_constants(fed))
        return fed

    def with_participants(self, n: int) -> "Federation":
        fed = replace(self, n_participants=n, global_constants=None)
        if fed.is_quadratic:
            fed = replace(fed, global_constants=_theory_constants(fed))
        return fed

    def pooled_data(self) -> Dataset:
        if self.is_quadratic:
            raise UnsupportedOperation("quadratic federations have no samples")
        return Dataset(
            np.concatenate([c.data.inputs for c in self.clients]),
            np.concatenate([c.data.labels for c in self.clients]),
        )


def _require_quadratic(fed):
    if not fed.is_quadratic:
        raise UnsupportedOperation("operation requires a quadratic federation")


def _global_minimizer(fed) -> np.ndarray:
    b0 = fed.clients[0].objective.center_b
    if all(np.array_equal(c.objective.center_b, b0) for c in fed.clients):
        return b0.copy()  # exact: every client is minimised there
    p = fed.weights
    A_bar = sum(pc * c.objective.matrix_A for pc, c in zip(p, fed.clients))
    rhs = sum(pc * c.objective.matrix_A @ c.objective.center_b for pc, c in zip(p, fed.clients))
    return np.linalg.solve(A_bar, rhs)


def _theory_constants(fed) -> TheoryConstants:
    x_star = _global_minimizer(fed)
    L = max(float(c.objective.eigenvalues[-1]) for c in fed.clients)
    mu = min(float(c.objective.eigenvalues[0]) for c in fed.clients)
    f_star = fed.global_loss(x_star)
    diff = fed.x0 - x_star
    x_star.setflags(write=False)
    return TheoryConstants(
        L=L,
        mu=mu,
        kappa=L / mu,
        gamma=compute_gamma(fed, x_star=x_star),
        g_squared=L**2 * float(diff @ diff),
        sigma_weighted=float(sum(c.weight_p**2 * c.sigma**2 for c in fed.clients)),
        f_star=f_star,
        x_star=x_star,
        n_participants=fed.n_participants or fed.c_total,
        c_total=fed.c_total,
        f0=fed.global_loss(fed.x0),
    )


def quadratic_federation(objectives, weights=None, sigmas=0.0, x0=None, n_participants=None):
    """Build a federation from explicit quadratic client objectives."""
    objectives = list(objectives)
    c_total = len(objectives)
    if c_total < 1:
        raise ConfigurationError("need at least one objective")
    dim = objectives[0].dim
    if any(o.dim != dim for o in objectives):
        raise ConfigurationError("all client objectives must share a dimension")
    weights = np.full(c_total, 1.0 / c_total) if weights is None else np.asarray(weights, float)
    sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float), (c_total,))
    if np.any(sigmas < 0):
        raise ConfigurationError("sigma must be non-negative")
    clients = tuple(
        Client(id=i, weight_p=float(weights[i]), objective=o, sigma=float(sigmas[i]))
        for i, o in enumerate(objectives)
    )
    x0 = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
    fed = Federation(clients=clients, x0=x0, n_participants=n_participants)
    return replace(fed, global_constants=_theory_constants(fed))


def _spectrum(dim, mu, L):
    if dim == 1:
        if mu != L:
            raise ConfigurationError("dim=1 needs mu == L")
        return np.array([float(L)])
    return np.linspace(mu, L, dim)


def make_quadratic_federation(
    c_total: int,
    dim: int,
    heterogeneity: float,
    spectrum: tuple[float, float] = (1.0, 1.0),
    sigma: float = 0.0,
    seed: int = 0,
    *,
    center_scale: float = 1.0,
    per_client_spectra: bool = False,
    n_participants: int | None = None,
    x0=None,
) -> Federation:
    """Synthetic quadratic federation with closed-form constants.

    Client centers are ``b_bar + heterogeneity * z_c`` with ``b_bar`` and
    ``z_c`` standard normal draws from ``seed``; ``b_bar`` is scaled by
    ``center_scale``. All clients share A unless ``per_client_spectra``.
    Weights are uniform.
    """
    if c_total < 1 or dim < 1:
        raise ConfigurationError(f"need c_total >= 1 and dim >= 1, got {c_total}, {dim}")
    mu, L = spectrum
    if not (0 < mu <= L):
        raise ConfigurationError(f"invalid spectrum mu={mu}, L={L}; need 0 < mu <= L")
    if heterogeneity < 0:
        raise ConfigurationError("heterogeneity must be >= 0")
    rng = np.random.default_rng(seed)
    lam = _spectrum(dim, mu, L)
    basis = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
    b_bar = rng.standard_normal(dim) * center_scale
    offsets = rng.standard_normal((c_total, dim))
    shared = QuadraticObjective.from_spectrum(lam, basis, np.zeros(dim))
    objectives = []
    for c in range(c_total):
        b_c = b_bar + heterogeneity * offsets[c]
        if per_client_spectra:
            Qc = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
            lam_c = np.sort(rng.uniform(mu, L, dim))
            lam_c[0], lam_c[-1] = mu, L
            objectives.append(QuadraticObjective.from_spectrum(lam_c, Qc, b_c))
        else:
            objectives.append(QuadraticObjective(shared.matrix_A, b_c))
    return quadratic_federation(
        objectives, sigmas=sigma, x0=x0, n_participants=n_participants
    )


def compute_gamma(fed: Federation, x_star=None) -> float:
    """Heterogeneity gap F* - sum_c p_c f_c*, with every f_c* = 0 here."""
    _require_quadratic(fed)
    if x_star is None:
        x_star = _global_minimizer(fed)
    return max(0.0, fed.global_loss(x_star))


def shard_partition(labels, c_total: int, shards_per_client: int, seed: int = 0) -> list[np.ndarray]:
    """Split sample indices into label-sorted shards, contiguous shards per client.

    Samples sharing a label are shuffled by ``seed`` before the stable sort,
    so the seed only decides which same-label samples land in which shard.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    n_shards = c_total * shards_per_client
    if c_total < 1 or shards_per_client < 1:
        raise ConfigurationError("c_total and shards_per_client must be >= 1")
    if n == 0 or n % n_shards != 0:
        raise ConfigurationError(
            f"{n} samples cannot be cut into {n_shards} equal shards "
            f"({c_total} clients x {shards_per_client} shards)"
        )
    perm = np.random.default_rng(seed).permutation(n)
    order = perm[np.argsort(labels[perm], kind="stable")]
    per_client = n // c_total
    return [order[c * per_client : (c + 1) * per_client] for c in range(c_total)]


def make_dataset_federation(
    train: Dataset,
    model,
    c_total: int,
    shards_per_client: int = 2,
    seed: int = 0,
    validation: Dataset | None = None,
    n_participants: int | None = None,
) -> Federation:
    """Label-shard federation with sample-fraction weights p_c = n_c / n."""
    parts = shard_partition(train.labels, c_total, shards_per_client, seed)
    n = len(train)
    clients = tuple(
        Client(id=i, weight_p=len(idx) / n, data=train.subset(idx)) for i, idx in enumerate(parts)
    )
    x0 = model.init_params(np.random.default_rng(seed))
    return Federation(
        clients=clients, x0=x0, model=model, validation=validation, n_participants=n_participants
    )


def sample_minibatch(client: Client, batch_size: int, rng: np.random.Generator) -> Minibatch:
    """Uniform draw with replacement from the client's samples.

    Quadratic clients get a noise-only batch seeded from ``rng``.
    """
    if batch_size < 1:
        raise ContractError("batch_size must be >= 1")
    if client.data is None:
        return Minibatch.noise_only(int(rng.integers(2**63 - 1)), client.sigma)
    if len(client.data) == 0:
        raise ContractError(f"client {client.id} has no samples")
    idx = rng.integers(0, len(client.data), size=batch_size)
    return Minibatch(client.data.inputs[idx], client.data.labels[idx])


def make_blobs(n_samples: int, n_features: int, n_classes: int, seed: int = 0, spread: float = 1.0):
    """Gaussian class clusters; a tiny stand-in for the benchmark datasets."""
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, n_features)) * 3.0
    labels = np.arange(n_samples) % n_classes
    rng.shuffle(labels)
    X = centers[labels] + spread * rng.standard_normal((n_samples, n_features))
    return Dataset(X, labels)


def load_dataset(path) -> Dataset:
    """Read the columnar text format: a header row, decimal feature columns,
    and an integer class label in the last column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    if len(header) < 2:
        raise ContractError(f"{path}: need at least one feature column and a label column")
    X = np.empty((len(rows), len(header) - 1))
    y = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ContractError(f"{path}:{i + 2}: expected {len(header)} columns, got {len(row)}")
        X[i] = [float(v) for v in row[:-1]]
        label = float(row[-1])
        if label != int(label):
            raise ContractError(f"{path}:{i + 2}: label {row[-1]!r} is not an integer")
        y[i] = int(label)
    return Dataset(X, y)


def save_dataset(path, data: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(data.n_features)] + ["label"])
        for row, label in zip(data.inputs, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


__all__ = [
    "Client",
    "ConfigurationError",
    "Dataset",
    "Federation",
    "TheoryConstants",
    "UnsupportedOperation",
    "compute_gamma",
    "load_dataset",
    "make_blobs",
    "make_dataset_federation",
    "make_quadratic_federation",
    "quadratic_federation",
    "sample_minibatch",
    "save_dataset",
    "shard_partition",
]
