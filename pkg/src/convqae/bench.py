"""Wall-clock comparison of whole-image and sliding-filter denoising.

Whole-image ("normal") denoising solves one ``n``-spin problem, so its cost
grows like ``2**n``. The filter ("conv") mode solves ``n`` problems of 9 spins.
Only inference is timed; the couplings are Hebbian copies of the clean image
since their values do not affect the cost of a solve. Normal-mode images are
``1 x n`` rings, so every pixel has two neighbours at every size and the gate
count per Trotter step grows in step with ``n``.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import autoencoder, convfilter
from .adiabatic import DEFAULT_SCHEDULE, DEFAULT_SHOTS, Schedule
from .grid import NeighborGraph, WeightSet, image_to_spins

NORMAL_SIZES = (9, 10, 11, 12, 13)
CONV_SIDES = (3, 4, 5, 8, 12, 28)
HEBBIAN_SCALE = 0.4


@dataclass(frozen=True)
class BenchRecord:
    mode: str
    n: int
    seconds: float
    repeats: int

    def __post_init__(self):
        if self.mode not in ("normal", "conv"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.seconds > 0:
            raise ValueError("wall time must be positive")
        if self.repeats < 3:
            raise ValueError("at least 3 repeats are required")


def ring_shape(n: int) -> tuple[int, int]:
    """``(height, width)`` of the ``n``-pixel ring used for normal-mode timing."""
    if n < 3:
        raise ValueError("a ring needs at least 3 pixels")
    return (1, n)


def test_image(height: int, width: int, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=(height, width)).astype(np.uint8)


def hebbian_weights(image) -> WeightSet:
    h, w = np.shape(image)
    graph = NeighborGraph.torus(w, h)
    s = image_to_spins(image)
    return WeightSet(graph, -HEBBIAN_SCALE * s[graph.edges[:, 0]] * s[graph.edges[:, 1]])


def hebbian_store(image) -> convfilter.PatchWeightStore:
    h, w = np.shape(image)
    weights = {
        (x, y): hebbian_weights(convfilter.extract_patch(image, x, y))
        for y in range(h)
        for x in range(w)
    }
    return convfilter.PatchWeightStore(w, h, weights)


def _median_time(fn, repeats: int) -> float:
    return _interleaved_medians([fn], repeats)[0]


def _interleaved_medians(fns, repeats: int) -> list[float]:
    """Median wall time of each callable, timed round-robin.

    Each round runs every callable once, so slow stretches of the machine are
    shared across sizes instead of landing on one size's block of repeats.
    """
    times = [[] for _ in fns]
    for _ in range(repeats):
        for fn, out in zip(fns, times):
            t0 = time.perf_counter()
            fn()
            out.append(time.perf_counter() - t0)
    return [statistics.median(t) for t in times]


def _normal_job(n, schedule, shots, seed):
    if n > 16:
        raise ValueError("normal mode is only measured up to 16 pixels")
    img = test_image(*ring_shape(n), seed=seed)
    weights = hebbian_weights(img)
    noisy = autoencoder.inject_noise(img, 0.1, seed)
    return lambda: autoencoder.denoise(noisy, weights, schedule, shots, seed)


def _conv_job(side, schedule, shots, seed, n_jobs):
    img = test_image(side, side, seed=seed)
    store = hebbian_store(img)
    noisy = autoencoder.inject_noise(img, 0.1, seed)
    return lambda: convfilter.conv_denoise(noisy, store, schedule, shots, seed, n_jobs=n_jobs)


def time_normal(
    n: int,
    repeats: int = 5,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
) -> BenchRecord:
    secs = _median_time(_normal_job(n, schedule, shots, seed), repeats)
    return BenchRecord("normal", n, secs, repeats)


def time_conv(
    side: int,
    repeats: int = 5,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    n_jobs: int | None = None,
) -> BenchRecord:
    secs = _median_time(_conv_job(side, schedule, shots, seed, n_jobs), repeats)
    return BenchRecord("conv", side * side, secs, repeats)


@dataclass
class ScalingSummary:
    normal_ratios: list[float]
    normal_log2_slope: float
    normal_log2_intercept: float
    conv_slope: float
    conv_intercept: float
    conv_r2: float
    extrapolated: dict[int, float] = field(default_factory=dict)
    conv_times: dict[int, float] = field(default_factory=dict)

    def normal_estimate(self, n: int) -> float:
        return float(2.0 ** (self.normal_log2_intercept + self.normal_log2_slope * n))

    def speedup(self, n: int) -> float:
        """Extrapolated normal time over measured conv time at ``n`` pixels."""
        return self.normal_estimate(n) / self.conv_times[n]

    def as_dict(self) -> dict:
        out = {
            "normal_ratios": " ".join(f"{r:.3f}" for r in self.normal_ratios),
            "normal_log2_slope": self.normal_log2_slope,
            "normal_log2_intercept": self.normal_log2_intercept,
            "conv_slope": self.conv_slope,
            "conv_intercept": self.conv_intercept,
            "conv_r2": self.conv_r2,
        }
        for n in sorted(self.extrapolated):
            out[f"normal_estimate_{n}"] = self.extrapolated[n]
        for n in sorted(self.conv_times):
            if n in self.extrapolated:
                out[f"speedup_{n}"] = self.extrapolated[n] / self.conv_times[n]
        return out


def r_squared(x, y, slope, intercept) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    resid = y - (slope * x + intercept)
    total = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid**2) / total) if total > 0 else 1.0


def summarize(records: list[BenchRecord], extrapolate_to=(16, 25)) -> ScalingSummary:
    normal = sorted((r for r in records if r.mode == "normal"), key=lambda r: r.n)
    conv = sorted((r for r in records if r.mode == "conv"), key=lambda r: r.n)
    if len(normal) < 2 or len(conv) < 2:
        raise ValueError("need at least two sizes per mode")
    nn = np.array([r.n for r in normal], float)
    nt = np.array([r.seconds for r in normal])
    ratios = [float(b / a) for a, b in zip(nt[:-1], nt[1:])]
    slope, intercept = np.polyfit(nn, np.log2(nt), 1)
    cn = np.array([r.n for r in conv], float)
    ct = np.array([r.seconds for r in conv])
    cslope, cintercept = np.polyfit(cn, ct, 1)
    summary = ScalingSummary(
        ratios,
        float(slope),
        float(intercept),
        float(cslope),
        float(cintercept),
        r_squared(cn, ct, cslope, cintercept),
        conv_times={r.n: r.seconds for r in conv},
    )
    summary.extrapolated = {n: summary.normal_estimate(n) for n in extrapolate_to}
    return summary


def run_bench(
    normal_sizes=NORMAL_SIZES,
    conv_sides=CONV_SIDES,
    repeats: int = 5,
    schedule: Schedule = DEFAULT_SCHEDULE,
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    n_jobs: int | None = None,
    progress=None,
) -> tuple[list[BenchRecord], ScalingSummary]:
    # compile the simulator kernel outside the timed region
    autoencoder.denoise(
        test_image(3, 3), hebbian_weights(test_image(3, 3)), Schedule(1, 1.0), 1, 0
    )
    records = []
    normal_jobs = [_normal_job(n, schedule, shots, seed) for n in normal_sizes]
    for n, secs in zip(normal_sizes, _interleaved_medians(normal_jobs, repeats)):
        records.append(BenchRecord("normal", n, secs, repeats))
    conv_jobs = [_conv_job(side, schedule, shots, seed, n_jobs) for side in conv_sides]
    for side, secs in zip(conv_sides, _interleaved_medians(conv_jobs, repeats)):
        records.append(BenchRecord("conv", side * side, secs, repeats))
    if progress:
        for record in records:
            progress(record)
    return records, summarize(records)
