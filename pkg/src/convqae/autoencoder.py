"""Whole-image quantum autoencoder.

Each pixel is one spin. Pixel colours set the longitudinal fields, the
pattern itself is stored in the couplings, and denoising is a ground-state
search of the annealing circuit with fields taken from the noisy image.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .adiabatic import DEFAULT_SCHEDULE, DEFAULT_SHOTS, IsingProblem, Schedule, solve
from .grid import (
    NeighborGraph,
    WeightSet,
    check_binary_image,
    image_to_spins,
    spins_to_image,
)

FIELD_STRENGTH = 0.1
DEFAULT_LEARNING_RATE = 0.4


@dataclass(frozen=True)
class TrainConfig:
    """Settings for :func:`train_weights`.

    ``train_noise_rate`` is the fraction of pixels flipped in the image that
    sets the fields during training; the error signal always compares with
    the clean image. Zero trains on the clean image alone.
    """

    learning_rate: float = DEFAULT_LEARNING_RATE
    init_range: float = 1.0
    max_epochs: int = 100
    train_noise_rate: float = 0.0
    schedule: Schedule = DEFAULT_SCHEDULE
    shots: int = DEFAULT_SHOTS
    field_x: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.init_range < 0:
            raise ValueError("init_range must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0 <= self.train_noise_rate <= 1:
            raise ValueError("train_noise_rate must lie in [0, 1]")


def fields_from_image(image) -> np.ndarray:
    """Row-major fields: -0.1 on white pixels, +0.1 on black ones."""
    img = check_binary_image(image)
    if img.size == 0:
        raise ValueError("image is empty")
    return np.where(img.ravel() == 1, FIELD_STRENGTH, -FIELD_STRENGTH)


def build_problem(image, weights: WeightSet, field_x: float = 1.0) -> IsingProblem:
    img = check_binary_image(image)
    if img.shape != weights.shape:
        raise ValueError(
            f"image is {img.shape[1]}x{img.shape[0]}, weights are for "
            f"{weights.graph.width}x{weights.graph.height}"
        )
    return IsingProblem(img.size, weights.couplings(), fields_from_image(img), field_x)


def inject_noise(image, rate: float, seed: int) -> np.ndarray:
    """Flip exactly ``round(rate * n_pixels)`` distinct pixels (half rounds up)."""
    if not 0 <= rate <= 1:
        raise ValueError(f"noise rate must lie in [0, 1], got {rate}")
    img = check_binary_image(image).copy()
    k = int(np.floor(rate * img.size + 0.5))
    flat = img.reshape(-1)
    idx = np.random.default_rng(seed).choice(img.size, size=k, replace=False)
    flat[idx] ^= 1
    return img


def edge_products(spins, graph: NeighborGraph) -> np.ndarray:
    s = np.asarray(spins)
    return s[graph.edges[:, 0]] * s[graph.edges[:, 1]]


def hebbian_step(values, target_products, output_products, learning_rate: float):
    """One update: ``W - learning_rate * (target - output)`` per edge.

    Also returns the error vector, whose entries are -2, 0 or 2.
    """
    error = np.asarray(target_products) - np.asarray(output_products)
    return np.asarray(values, dtype=float) - learning_rate * error, error


def train_weights(original, config: TrainConfig = TrainConfig()) -> WeightSet:
    """Learn couplings that make the annealer reproduce ``original``.

    Each epoch solves the Ising problem and moves every coupling by
    ``-learning_rate * (target_product - output_product)``. Training stops at
    the first epoch whose output has the same neighbour products as the
    original, or after ``max_epochs`` with ``converged=False``.
    """
    img = check_binary_image(original, min_size=3)
    h, w = img.shape
    graph = NeighborGraph.torus(w, h)
    rng = np.random.default_rng(config.seed)
    values = rng.uniform(-config.init_range, config.init_range, graph.num_edges)
    target = edge_products(image_to_spins(img), graph)

    for epoch in range(1, config.max_epochs + 1):
        noise_seed, solve_seed = (int(v) for v in rng.integers(0, 2**31, size=2))
        shown = (
            inject_noise(img, config.train_noise_rate, noise_seed)
            if config.train_noise_rate > 0
            else img
        )
        weights = WeightSet(graph, values)
        result = solve(
            build_problem(shown, weights, config.field_x),
            config.schedule,
            config.shots,
            solve_seed,
        )
        updated, error = hebbian_step(
            values, target, edge_products(result.config, graph), config.learning_rate
        )
        if not error.any():
            return WeightSet(graph, values, converged=True, epochs=epoch)
        values = updated
    return WeightSet(graph, values, converged=False, epochs=config.max_epochs)


def denoise(
    noisy,
    weights: WeightSet,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    field_x: float = 1.0,
) -> np.ndarray:
    """Ground-state readout with fields from ``noisy`` and the stored couplings."""
    img = check_binary_image(noisy)
    result = solve(build_problem(img, weights, field_x), schedule, shots, seed)
    return spins_to_image(result.config, img.shape[1], img.shape[0])


@dataclass
class RestorationStats:
    """Outcome of repeated noise-and-denoise trials."""

    wrong_pixels: np.ndarray
    tolerance: int = 0
    seeds: list[int] = field(default_factory=list, repr=False)

    @property
    def trials(self) -> int:
        return len(self.wrong_pixels)

    @property
    def complete_fraction(self) -> float:
        return float(np.mean(self.wrong_pixels == 0))

    @property
    def within_tolerance_fraction(self) -> float:
        return float(np.mean(self.wrong_pixels <= self.tolerance))

    def rows(self):
        """``(trial, wrong_pixels, complete)`` tuples for CSV output."""
        for t, wrong in enumerate(self.wrong_pixels):
            yield t, int(wrong), int(wrong == 0)


def _trial_seeds(base_seed: int, trial: int) -> tuple[int, int]:
    # noise and solver streams must differ, or the same draw feeds both
    ss = np.random.SeedSequence([base_seed, trial])
    a, b = ss.generate_state(2)
    return int(a), int(b)


def evaluate_restoration(
    original,
    weights: WeightSet,
    noise_rate: float,
    trials: int,
    tolerance: int = 0,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    base_seed: int = 0,
) -> RestorationStats:
    """Fresh noise each trial, denoised with the same ``weights``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    img = check_binary_image(original)
    wrong = []
    for t in range(trials):
        noise_seed, solve_seed = _trial_seeds(base_seed, t)
        noisy = inject_noise(img, noise_rate, noise_seed)
        out = denoise(noisy, weights, schedule, shots, solve_seed)
        wrong.append(int(np.sum(out != img)))
    return RestorationStats(np.array(wrong), tolerance, [base_seed + t for t in range(trials)])


def evaluate_retrained_restoration(
    original,
    config: TrainConfig,
    noise_rate: float,
    trials: int,
    tolerance: int = 0,
    base_seed: int = 0,
) -> RestorationStats:
    """Like :func:`evaluate_restoration`, but every trial trains its own weights.

    Trial ``t`` trains with seed ``config.seed + t``. This measures the whole
    autoencoder (random initialisation included) rather than one weight set.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    img = check_binary_image(original)
    wrong = []
    for t in range(trials):
        weights = train_weights(img, replace(config, seed=config.seed + t))
        noise_seed, solve_seed = _trial_seeds(base_seed, t)
        noisy = inject_noise(img, noise_rate, noise_seed)
        out = denoise(noisy, weights, config.schedule, config.shots, solve_seed, config.field_x)
        wrong.append(int(np.sum(out != img)))
    return RestorationStats(np.array(wrong), tolerance, [base_seed + t for t in range(trials)])


class QuantumAutoencoder(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` learns couplings, ``transform`` denoises.

    Parameters mirror :class:`TrainConfig` and :class:`Schedule`.
    ``transform`` accepts one ``(H, W)`` image or an ``(n, H, W)`` stack.
    """

    def __init__(
        self,
        learning_rate=DEFAULT_LEARNING_RATE,
        init_range=1.0,
        max_epochs=100,
        train_noise_rate=0.0,
        num_steps=DEFAULT_SCHEDULE.num_steps,
        total_time=DEFAULT_SCHEDULE.total_time,
        field_x=1.0,
        shots=DEFAULT_SHOTS,
        random_state=0,
    ):
        self.learning_rate = learning_rate
        self.init_range = init_range
        self.max_epochs = max_epochs
        self.train_noise_rate = train_noise_rate
        self.num_steps = num_steps
        self.total_time = total_time
        self.field_x = field_x
        self.shots = shots
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            init_range=self.init_range,
            max_epochs=self.max_epochs,
            train_noise_rate=self.train_noise_rate,
            schedule=Schedule(self.num_steps, self.total_time),
            shots=self.shots,
            field_x=self.field_x,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        X = check_binary_image(X, min_size=3)
        self.weights_ = train_weights(X, self._train_config())
        self.image_shape_ = X.shape
        self.converged_ = self.weights_.converged
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = np.asarray(X)
        single = X.ndim == 2
        stack = X[None] if single else X
        if stack.ndim != 3 or stack.shape[1:] != self.image_shape_:
            raise ValueError(
                f"expected images of shape {self.image_shape_}, got {X.shape}"
            )
        schedule = Schedule(self.num_steps, self.total_time)
        out = np.stack(
            [
                denoise(img, self.weights_, schedule, self.shots, self.random_state + k, self.field_x)
                for k, img in enumerate(stack)
            ]
        )
        return out[0] if single else out
