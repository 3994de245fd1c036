"""Seeded synthetic multichannel signals with piecewise-constant labels.

Labels come in contiguous regions whose lengths are drawn uniformly from
``[region_len_min, region_len_max]``, each region's sign set by a fair coin.
The first ``nbrel`` channels are discriminative: channel ``j`` at time ``i``
has mean ``y[i - lag_j]``.  All channels carry i.i.d. ``N(0, sigma^2)`` noise.

Random streams come from numpy's ``PCG64`` bit generator seeded through
``SeedSequence(seed, spawn_key=(role,))``, so the train, validation and test
draws of one seed are independent but each is reproducible on its own.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

GENERATOR = "numpy.random.PCG64/SeedSequence"
ROLES = {"train": 0, "valid": 1, "test": 2}

TRAIN_SAMPLES = 1000
VALID_SAMPLES = 1000
TEST_SAMPLES = 5000
SIGMA_SWEEP = (1.0, 2.0, 3.0)
NBTOT_SWEEP = (3, 15, 30)
DEFAULT_SEEDS = tuple(range(10))


def default_lags(nbtot: int, nbrel: int, max_lag: int = 10) -> tuple:
    """Integer lags spread evenly over ``[0, max_lag]`` on the discriminative channels."""
    lags = [0] * nbtot
    if nbrel == 1:
        return tuple(lags)
    for j, v in enumerate(np.linspace(0, max_lag, nbrel)):
        lags[j] = int(round(v))
    return tuple(lags)


@dataclass(frozen=True)
class ToySpec:
    nbtot: int = 1
    nbrel: int = 1
    sigma: float = 1.0
    n_samples: int = TRAIN_SAMPLES
    region_len_min: int = 30
    region_len_max: int = 40
    lags: tuple | None = None
    seed: int = 0
    role: str = "train"

    def __post_init__(self):
        if self.nbtot < 1 or not 0 <= self.nbrel <= self.nbtot:
            raise ValueError(f"need 0 <= nbrel <= nbtot and nbtot >= 1, got nbrel={self.nbrel}, nbtot={self.nbtot}")
        if self.sigma < 0 or not np.isfinite(self.sigma):
            raise ValueError(f"sigma must be a non-negative number, got {self.sigma}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 1 <= self.region_len_min <= self.region_len_max:
            raise ValueError("need 1 <= region_len_min <= region_len_max")
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {sorted(ROLES)}")
        lags = default_lags(self.nbtot, self.nbrel) if self.lags is None else tuple(int(v) for v in self.lags)
        if len(lags) != self.nbtot or min(lags) < 0:
            raise ValueError(f"lags must be {self.nbtot} non-negative integers")
        object.__setattr__(self, "lags", lags)

    def with_role(self, role: str, n_samples: int) -> "ToySpec":
        d = asdict(self)
        d.update(role=role, n_samples=n_samples)
        return ToySpec(**d)

    def metadata(self) -> dict:
        d = asdict(self)
        d["lags"] = ",".join(str(v) for v in self.lags)
        d["generator"] = GENERATOR
        d["relevant_channels"] = ",".join(str(j + 1) for j in range(self.nbrel))
        return d


def _labels(rng: np.random.Generator, n: int, lo: int, hi: int):
    y = np.empty(n, dtype=int)
    starts = []
    pos = 0
    while pos < n:
        length = int(rng.integers(lo, hi + 1))
        y[pos:pos + length] = 1 if rng.random() < 0.5 else -1
        starts.append(pos)
        pos += length
    return y, starts


def _rng(spec: ToySpec) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(ROLES[spec.role],))))


def label_regions(spec: ToySpec) -> np.ndarray:
    """Lengths of the drawn label regions as seen in ``y``.

    Neighbouring regions may share a sign, so these are not the constant runs
    of ``y``.  The first and last entries can be cut short by the sequence ends.
    """
    pad = max(spec.lags)
    _, starts = _labels(_rng(spec), spec.n_samples + pad, spec.region_len_min, spec.region_len_max)
    edges = [s - pad for s in starts if s > pad]
    bounds = np.array([0] + edges + [spec.n_samples])
    return np.diff(bounds)


def generate_toy(spec: ToySpec):
    """Return ``(x, y)``: an ``(N, nbtot)`` signal and ``{-1, +1}`` labels."""
    rng = _rng(spec)
    pad = max(spec.lags)
    full, _ = _labels(rng, spec.n_samples + pad, spec.region_len_min, spec.region_len_max)
    y = full[pad:]
    noise = rng.standard_normal((spec.n_samples, spec.nbtot))
    x = spec.sigma * noise
    for j in range(spec.nbrel):
        x[:, j] += full[pad - spec.lags[j]: pad - spec.lags[j] + spec.n_samples]
    return x, y


def region_lengths(y) -> np.ndarray:
    """Lengths of the maximal constant runs of ``y``."""
    y = np.asarray(y)
    edges = np.flatnonzero(np.diff(y)) + 1
    bounds = np.concatenate([[0], edges, [y.shape[0]]])
    return np.diff(bounds)


@dataclass(frozen=True)
class ExperimentPoint:
    sweep: str
    value: float
    seed: int
    train: ToySpec
    valid: ToySpec
    test: ToySpec = field(repr=False)


def sweep_points(sweep: str, seeds=DEFAULT_SEEDS, values=None) -> list:
    """Train/valid/test spec triples for one side of the toy sweep.

    ``sigma``: nbtot=30, nbrel=3, sigma varies.  ``nbtot``: sigma=3, nbrel=3,
    channel count varies.
    """
    if sweep == "sigma":
        values = SIGMA_SWEEP if values is None else values
        make = lambda v, s: ToySpec(nbtot=30, nbrel=3, sigma=float(v), seed=s)
    elif sweep == "nbtot":
        values = NBTOT_SWEEP if values is None else values
        make = lambda v, s: ToySpec(nbtot=int(v), nbrel=3, sigma=3.0, seed=s)
    else:
        raise ValueError(f"unknown sweep {sweep!r}")
    out = []
    for v in values:
        for s in seeds:
            base = make(v, s)
            out.append(ExperimentPoint(sweep, float(v), s, base,
                                       base.with_role("valid", VALID_SAMPLES),
                                       base.with_role("test", TEST_SAMPLES)))
    return out


def default_experiment_specs() -> list:
    return sweep_points("sigma") + sweep_points("nbtot")


def generate_multiclass_toy(n_classes: int = 3, nbtot: int = 3, nbrel: int | None = None,
                            sigma: float = 0.0, n_samples: int = TRAIN_SAMPLES,
                            seed: int = 0, role: str = "train", region_len=(30, 40)):
    """Multiclass variant with labels in ``{1..K}``.

    Relevant channel ``j`` switches to mean +1 while class ``j % K + 1`` is
    active and sits at -1 otherwise; other channels are pure noise.  With
    ``sigma=0`` the classes are linearly separable one-against-all.
    """
    nbrel = min(nbtot, n_classes) if nbrel is None else nbrel
    if n_classes < 2 or not 0 <= nbrel <= nbtot:
        raise ValueError("need n_classes >= 2 and 0 <= nbrel <= nbtot")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(ROLES[role], n_classes))))
    y = np.empty(n_samples, dtype=int)
    pos = 0
    while pos < n_samples:
        length = int(rng.integers(region_len[0], region_len[1] + 1))
        y[pos:pos + length] = rng.integers(1, n_classes + 1)
        pos += length
    x = sigma * rng.standard_normal((n_samples, nbtot))
    for j in range(nbrel):
        x[:, j] += np.where(y == j % n_classes + 1, 1.0, -1.0)
    return x, y
