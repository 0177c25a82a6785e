"""Reproducible discretization of planar white noise.

The field is stored as one two-sided Brownian path per sub-column of width
``dx = 1/m``, sampled on the y-grid ``j * dy`` with ``|j * dy| <= y_cap``.
Integrating white noise over ``[x, x + dx] x [0, y]`` has the law of
``B(y)`` with ``Var B(y) = dx * |y|``, which is what the paths hold.

Randomness is counter-based.  Each path side (column ``i``, sign of ``j``)
is an independent Philox4x64 stream keyed by ``(seed, replica)`` whose
counter starts at ``(0, i, side, 0)``.  Uniform 64-bit words are turned into
Gaussians by Box-Muller on consecutive pairs::

    u1 = ((r[2k] >> 11) + 1) * 2**-53          # in (0, 1]
    u2 = (r[2k + 1] >> 11) * 2**-53             # in [0, 1)
    z[2k]     = sqrt(-2 ln u1) * cos(2 pi u2)
    z[2k + 1] = sqrt(-2 ln u1) * sin(2 pi u2)

The ``j``-th increment of a side is ``z[j - 1]``, so the value at ``(i, j)``
depends only on ``(seed, replica, i, j)`` and growing ``y_cap`` reproduces
every previously sampled value.
"""

from __future__ import annotations

import dataclasses
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, OutOfWindowError

__all__ = [
    "FieldConfig",
    "NoiseField",
    "generate_field",
    "path_value",
    "dump_field",
    "load_field",
    "zero_field",
    "regrow",
]

_MASK64 = (1 << 64) - 1
_MAGIC = b"WNFIELD\0"
_VERSION = 1


def is_dyadic_int(value) -> bool:
    """True for integers of the form ``2**j`` with ``j >= 0``."""
    return isinstance(value, (int, np.integer)) and value >= 1 and (value & (value - 1)) == 0


def is_dyadic_step(value: float) -> bool:
    """True for reals of the form ``2**-k`` with ``k >= 0``."""
    if not np.isfinite(value) or value <= 0 or value > 1:
        return False
    mant, _ = np.frexp(value)
    return mant == 0.5


@dataclass(frozen=True)
class FieldConfig:
    """Parameters that fully determine a noise field.

    Parameters
    ----------
    L : int
        System length, a power of two.
    m : int
        Sub-columns per unit x-interval, a power of two.
    dy : float
        y-grid step, ``2**-k``.
    y_cap : float
        Half-height of the sampled window, a positive multiple of ``dy``.
    seed : int
        64-bit seed.
    replica : int
        Replica index, non-negative.
    """

    L: int
    m: int = 4
    dy: float = 0.25
    y_cap: float = 8.0
    seed: int = 0
    replica: int = 0

    def __post_init__(self):
        if not is_dyadic_int(self.L):
            raise InvalidConfigError(f"L must be a power of two, got {self.L!r}")
        if not is_dyadic_int(self.m):
            raise InvalidConfigError(f"m must be a power of two, got {self.m!r}")
        if not is_dyadic_step(float(self.dy)):
            raise InvalidConfigError(f"dy must be 2**-k, got {self.dy!r}")
        ratio = float(self.y_cap) / float(self.dy)
        if not (ratio >= 1 and ratio == int(ratio)):
            raise InvalidConfigError(
                f"y_cap must be a positive multiple of dy, got {self.y_cap!r} (dy={self.dy!r})"
            )
        if not (0 <= int(self.seed) <= _MASK64):
            raise InvalidConfigError("seed must fit in 64 unsigned bits")
        if int(self.replica) < 0:
            raise InvalidConfigError("replica must be non-negative")
        object.__setattr__(self, "dy", float(self.dy))
        object.__setattr__(self, "y_cap", float(self.y_cap))

    @property
    def dx(self) -> float:
        return 1.0 / self.m

    @property
    def n_columns(self) -> int:
        return self.L * self.m

    @property
    def J(self) -> int:
        """Number of grid steps from 0 to the cap."""
        return int(round(self.y_cap / self.dy))

    def with_cap(self, y_cap: float) -> "FieldConfig":
        return dataclasses.replace(self, y_cap=y_cap)

    def with_replica(self, replica: int) -> "FieldConfig":
        return dataclasses.replace(self, replica=replica)


@dataclass(frozen=True, eq=False)
class NoiseField:
    """An immutable sampled field.

    ``paths[i, J + j]`` holds ``B_i(j * dy)`` for ``-J <= j <= J``.
    ``x_origin`` is non-zero only for windows cut out of a larger field by
    :meth:`window`; column 0 of the window is column ``x_origin * m`` of the
    parent.
    """

    config: FieldConfig
    paths: np.ndarray
    x_origin: int = 0
    zeroed: bool = False

    def __post_init__(self):
        self.paths.setflags(write=False)

    @property
    def L(self) -> int:
        return self.paths.shape[0] // self.config.m

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def dy(self) -> float:
        return self.config.dy

    @property
    def dx(self) -> float:
        return self.config.dx

    @property
    def J(self) -> int:
        return (self.paths.shape[1] - 1) // 2

    @property
    def y_cap(self) -> float:
        return self.J * self.config.dy

    def window(self, x0: int, length: int) -> "NoiseField":
        """Sub-field on ``[x0, x0 + length]`` re-indexed to start at 0."""
        if x0 < 0 or length < 1 or x0 + length > self.L:
            raise InvalidConfigError(f"window [{x0}, {x0 + length}] outside [0, {self.L}]")
        m = self.config.m
        return NoiseField(
            self.config, self.paths[x0 * m:(x0 + length) * m], self.x_origin + x0, self.zeroed
        )


def _side_normals(key: np.ndarray, column: int, side: int, count: int) -> np.ndarray:
    if count == 0:
        return np.empty(0)
    bitgen = np.random.Philox(key=key, counter=np.array([0, column, side, 0], dtype=np.uint64))
    raw = bitgen.random_raw(count + (count & 1))
    r1 = raw[0::2] >> np.uint64(11)
    r2 = raw[1::2] >> np.uint64(11)
    u1 = (r1.astype(np.float64) + 1.0) * 2.0**-53
    u2 = r2.astype(np.float64) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(raw.shape[0])
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count]


def generate_field(cfg: FieldConfig) -> NoiseField:
    """Materialize the field described by ``cfg``."""
    J = cfg.J
    ncol = cfg.n_columns
    key = np.array([int(cfg.seed) & _MASK64, int(cfg.replica) & _MASK64], dtype=np.uint64)
    scale = np.sqrt(cfg.dx * cfg.dy)
    paths = np.zeros((ncol, 2 * J + 1))
    for i in range(ncol):
        up = _side_normals(key, i, 0, J)
        down = _side_normals(key, i, 1, J)
        paths[i, J + 1:] = np.cumsum(up) * scale
        paths[i, :J] = (np.cumsum(down) * scale)[::-1]
    return NoiseField(cfg, paths)


def zero_field(cfg: FieldConfig) -> NoiseField:
    """A field with every path identically zero (debugging aid)."""
    return NoiseField(cfg, np.zeros((cfg.n_columns, 2 * cfg.J + 1)), zeroed=True)


def regrow(field: NoiseField, y_cap: float) -> NoiseField:
    """The same field (or window) sampled on a taller y-window.

    Keyed generation makes the result agree with ``field`` wherever both
    are defined.
    """
    cfg = field.config.with_cap(y_cap)
    full = zero_field(cfg) if field.zeroed else generate_field(cfg)
    if field.x_origin == 0 and field.L == cfg.L:
        return full
    return full.window(field.x_origin, field.L)


def path_value(field: NoiseField, column: int, j: int) -> float:
    """Return ``B_column(j * dy)``.

    Raises
    ------
    OutOfWindowError
        If ``|j| * dy > y_cap``; regenerate with a larger cap.
    """
    if not (0 <= column < field.paths.shape[0]):
        raise IndexError(f"column {column} outside [0, {field.paths.shape[0]})")
    if abs(j) > field.J:
        raise OutOfWindowError(f"|j|={abs(j)} exceeds window J={field.J}")
    return float(field.paths[column, field.J + j])


_HEADER = struct.Struct("<8sIQQdddQQQ")


def dump_field(field: NoiseField, path) -> None:
    """Write a debugging dump: header, then column-major float64 values."""
    cfg = field.config
    if field.x_origin != 0 or field.paths.shape[0] != cfg.n_columns:
        raise InvalidConfigError("only whole fields can be dumped")
    header = _HEADER.pack(
        _MAGIC, _VERSION, cfg.L, cfg.m, cfg.dy, cfg.y_cap, 0.0,
        int(cfg.seed), int(cfg.replica), field.x_origin,
    )
    with open(Path(path), "wb") as fh:
        fh.write(header)
        # column-major over (column, y-index): each path is contiguous
        fh.write(np.ascontiguousarray(field.paths, dtype="<f8").tobytes(order="C"))


def load_field(path) -> NoiseField:
    data = Path(path).read_bytes()
    magic, version, L, m, dy, y_cap, _, seed, replica, x_origin = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise InvalidConfigError("not a field dump (bad magic)")
    if version != _VERSION:
        raise InvalidConfigError(f"unsupported field dump version {version}")
    cfg = FieldConfig(L=L, m=m, dy=dy, y_cap=y_cap, seed=seed, replica=replica)
    del x_origin
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    paths = values.reshape(cfg.n_columns, 2 * cfg.J + 1).copy()
    return NoiseField(cfg, paths)
