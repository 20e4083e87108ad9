"""Dead-leaves synthesis of high-resolution abundance maps.

An image is grown by dropping random rotated rectangles ("leaves") until
every pixel is covered. Each new leaf is painted only on still-uncovered
pixels, which is the perfect-simulation form of the occlusion process: the
first leaf drawn ends up on top. One leaf spans all material channels with
a single value vector sampled from the real low-resolution abundances, so
the footprint partition is identical across channels and every output pixel
is an exact copy of some source abundance vector.

Side lengths follow a power law with density proportional to s**(-alpha) on
[size_min, size_max]; rotation is uniform on [0, pi) (rectangle symmetry
makes the upper half redundant); centers are uniform over the image
rectangle and leaves are clipped at the borders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .cube import AbundanceMaps, tensor_data
from .exceptions import ConfigError, CoverageError, DataError, DegenerateInputError
from .validation import check_rank

__all__ = [
    "Leaf",
    "DeadLeavesConfig",
    "ValuePool",
    "DeadLeavesResult",
    "build_value_pool",
    "generate_map",
    "generate_map_detailed",
    "generate_corpus",
    "derive_seed",
    "splitmix64",
    "leaf_footprint",
    "DeadLeavesSynthesizer",
]

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; used to decorrelate per-map seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(base_seed: int, k: int) -> int:
    """Seed for corpus item k: base_seed XOR splitmix64(k)."""
    return ((base_seed & _MASK64) ^ splitmix64(k)) & _MASK64


@dataclass(frozen=True)
class Leaf:
    """One rectangular leaf: side lengths, rotation, value vector, center.

    ``value`` holds one abundance entry per material channel, already
    clipped to [0, 1]; the same vector is deposited on every channel.
    """

    a: float
    b: float
    theta: float
    value: np.ndarray
    x: float
    y: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ConfigError(f"leaf sides must be > 0, got a={self.a}, b={self.b}")
        if not (0.0 <= self.theta < math.pi):
            raise ConfigError(f"leaf rotation must lie in [0, pi), got {self.theta}")
        value = np.asarray(self.value, dtype=np.float64)
        if value.ndim != 1 or value.size < 1:
            raise DataError("leaf value must be a non-empty vector")
        if value.min() < 0.0 or value.max() > 1.0:
            raise DataError("leaf value components must lie in [0, 1]")
        if value.flags.writeable:
            value = value.copy()
            value.setflags(write=False)
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class DeadLeavesConfig:
    """Geometry, size law, and seeding for one synthetic map."""

    out_rows: int
    out_cols: int
    n_materials: int
    size_min: float = 4.0
    size_max: float = 150.0
    size_exponent: float = 3.0
    rng_seed: int = 0
    max_leaves: int = 2_000_000

    def __post_init__(self):
        if self.out_rows < 1 or self.out_cols < 1:
            raise ConfigError(
                f"output dims must be >= 1, got {self.out_rows}x{self.out_cols}"
            )
        if self.n_materials < 1:
            raise ConfigError(f"n_materials must be >= 1, got {self.n_materials}")
        if not (0 < self.size_min <= self.size_max):
            raise ConfigError(
                f"need 0 < size_min <= size_max, got [{self.size_min}, {self.size_max}]"
            )
        if self.size_max > max(self.out_rows, self.out_cols):
            raise ConfigError(
                f"size_max {self.size_max} exceeds the largest image dimension "
                f"{max(self.out_rows, self.out_cols)}"
            )
        if self.size_exponent < 0:
            raise ConfigError(f"size_exponent must be >= 0, got {self.size_exponent}")
        if not (0 <= self.rng_seed <= _MASK64):
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")
        if self.max_leaves < 1:
            raise ConfigError(f"max_leaves must be >= 1, got {self.max_leaves}")


@dataclass(frozen=True)
class ValuePool:
    """All source abundance vectors a leaf may carry, one per source pixel."""

    vectors: np.ndarray  # (pixels, materials), clipped to [0, 1], read-only
    source_shape: tuple[int, int, int]

    def __post_init__(self):
        vec = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vec.ndim != 2 or vec.shape[0] < 1:
            raise DegenerateInputError("value pool must contain at least one vector")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_materials(self) -> int:
        return self.vectors.shape[1]


def build_value_pool(a_lr) -> ValuePool:
    """Pool every pixel vector of the source abundances, clipped to [0, 1]."""
    arr = tensor_data(a_lr)
    check_rank(arr, 3, "abundance maps")
    n, rows, cols = arr.shape
    vectors = np.clip(arr, 0.0, 1.0).reshape(n, rows * cols).T.copy()
    return ValuePool(vectors=vectors, source_shape=(n, rows, cols))


def _sample_size(rng: np.random.Generator, cfg: DeadLeavesConfig) -> float:
    if cfg.size_max == cfg.size_min:
        return cfg.size_min
    u = rng.random()
    alpha = cfg.size_exponent
    if abs(alpha - 1.0) < 1e-12:
        return cfg.size_min * (cfg.size_max / cfg.size_min) ** u
    p = 1.0 - alpha
    lo, hi = cfg.size_min**p, cfg.size_max**p
    return (lo + u * (hi - lo)) ** (1.0 / p)


def _draw_leaf(rng: np.random.Generator, cfg: DeadLeavesConfig, pool: ValuePool):
    a = _sample_size(rng, cfg)
    b = _sample_size(rng, cfg)
    theta = rng.uniform(0.0, math.pi)
    x = rng.uniform(-0.5, cfg.out_cols - 0.5)
    y = rng.uniform(-0.5, cfg.out_rows - 0.5)
    idx = int(rng.integers(len(pool)))
    return Leaf(a=a, b=b, theta=theta, value=pool.vectors[idx], x=x, y=y), idx


def _footprint_window(leaf: Leaf, rows: int, cols: int):
    """Clipped bounding window and inside-mask of the rotated rectangle.

    A pixel belongs to the leaf iff its center, rotated into the leaf frame,
    satisfies |u| <= a/2 and |v| <= b/2. Returns None when no pixel center
    falls inside the bounding box.
    """
    ct, st = math.cos(leaf.theta), math.sin(leaf.theta)
    hx = 0.5 * (leaf.a * abs(ct) + leaf.b * abs(st))
    hy = 0.5 * (leaf.a * abs(st) + leaf.b * abs(ct))
    r0 = max(0, int(math.ceil(leaf.y - hy)))
    r1 = min(rows - 1, int(math.floor(leaf.y + hy)))
    c0 = max(0, int(math.ceil(leaf.x - hx)))
    c1 = min(cols - 1, int(math.floor(leaf.x + hx)))
    if r0 > r1 or c0 > c1:
        return None
    di = np.arange(r0, r1 + 1, dtype=np.float64)[:, None] - leaf.y
    dj = np.arange(c0, c1 + 1, dtype=np.float64)[None, :] - leaf.x
    u = ct * dj + st * di
    v = -st * dj + ct * di
    inside = (np.abs(u) <= 0.5 * leaf.a) & (np.abs(v) <= 0.5 * leaf.b)
    return r0, r1, c0, c1, inside


def leaf_footprint(leaf: Leaf, rows: int, cols: int) -> np.ndarray:
    """Boolean (rows, cols) mask of the pixels covered by one leaf."""
    mask = np.zeros((rows, cols), dtype=bool)
    window = _footprint_window(leaf, rows, cols)
    if window is not None:
        r0, r1, c0, c1, inside = window
        mask[r0 : r1 + 1, c0 : c1 + 1] = inside
    return mask


@dataclass(frozen=True)
class DeadLeavesResult:
    """Full record of one generation run.

    ``pool_indices`` is the single-channel map of which pool vector each
    pixel received (the channel-coupling witness); ``leaves`` lists every
    leaf drawn, in draw order, including ones that painted nothing.
    """

    abundances: AbundanceMaps
    pool_indices: np.ndarray
    leaves: tuple[Leaf, ...]
    n_painted: int


def generate_map_detailed(cfg: DeadLeavesConfig, pool: ValuePool) -> DeadLeavesResult:
    """Run the occlusion process until full coverage; keep the leaf record."""
    if pool.n_materials != cfg.n_materials:
        raise ConfigError(
            f"pool has {pool.n_materials} materials, config says {cfg.n_materials}"
        )
    rows, cols = cfg.out_rows, cfg.out_cols
    rng = np.random.default_rng(cfg.rng_seed)
    out = np.zeros((cfg.n_materials, rows, cols), dtype=np.float64)
    pool_indices = np.full((rows, cols), -1, dtype=np.int64)
    uncovered = np.ones((rows, cols), dtype=bool)
    remaining = rows * cols
    leaves: list[Leaf] = []
    n_painted = 0

    for _ in range(cfg.max_leaves):
        if remaining == 0:
            break
        leaf, idx = _draw_leaf(rng, cfg, pool)
        leaves.append(leaf)
        window = _footprint_window(leaf, rows, cols)
        if window is None:
            continue
        r0, r1, c0, c1, inside = window
        uview = uncovered[r0 : r1 + 1, c0 : c1 + 1]
        paint = inside & uview
        count = int(paint.sum())
        if count == 0:
            continue
        out[:, r0 : r1 + 1, c0 : c1 + 1][:, paint] = leaf.value[:, None]
        pool_indices[r0 : r1 + 1, c0 : c1 + 1][paint] = idx
        uview[paint] = False
        remaining -= count
        n_painted += 1

    if remaining > 0:
        raise CoverageError(
            f"{remaining} pixel(s) still uncovered after {cfg.max_leaves} leaves",
            uncovered=remaining,
        )
    return DeadLeavesResult(
        abundances=AbundanceMaps(out),
        pool_indices=pool_indices,
        leaves=tuple(leaves),
        n_painted=n_painted,
    )


def generate_map(cfg: DeadLeavesConfig, pool: ValuePool) -> AbundanceMaps:
    """Synthesize one fully-covered abundance map."""
    return generate_map_detailed(cfg, pool).abundances


def generate_corpus(cfg: DeadLeavesConfig, pool: ValuePool, count: int,
                    base_seed: int) -> Iterator[AbundanceMaps]:
    """Yield ``count`` maps with per-map seeds derived from ``base_seed``.

    Map k uses seed base_seed XOR splitmix64(k), so the corpus is
    deterministic and maps can be regenerated individually.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    for k in range(count):
        item_cfg = replace(cfg, rng_seed=derive_seed(base_seed, k))
        try:
            yield generate_map(item_cfg, pool)
        except CoverageError as exc:
            raise CoverageError(f"map {k}: {exc}", uncovered=exc.uncovered) from exc


class DeadLeavesSynthesizer(BaseEstimator):
    """Estimator facade: fit on real abundances, then sample synthetic maps."""

    def __init__(self, out_rows: int = 307, out_cols: int = 307,
                 size_min: float = 4.0, size_max: float = 150.0,
                 size_exponent: float = 3.0, rng_seed: int = 0,
                 max_leaves: int = 2_000_000):
        self.out_rows = out_rows
        self.out_cols = out_cols
        self.size_min = size_min
        self.size_max = size_max
        self.size_exponent = size_exponent
        self.rng_seed = rng_seed
        self.max_leaves = max_leaves

    def fit(self, X, y=None):
        self.pool_ = build_value_pool(X)
        self.n_materials_ = self.pool_.n_materials
        self._config()
        return self

    def _config(self) -> DeadLeavesConfig:
        return DeadLeavesConfig(
            out_rows=self.out_rows,
            out_cols=self.out_cols,
            n_materials=self.n_materials_,
            size_min=self.size_min,
            size_max=self.size_max,
            size_exponent=self.size_exponent,
            rng_seed=self.rng_seed,
            max_leaves=self.max_leaves,
        )

    def sample(self, count: int = 1, base_seed: int | None = None) -> list[AbundanceMaps]:
        if not hasattr(self, "pool_"):
            raise NotFittedError("DeadLeavesSynthesizer is not fitted; call fit() first")
        base = self.rng_seed if base_seed is None else base_seed
        return list(generate_corpus(self._config(), self.pool_, count, base))
