"""Run configuration: flat ``key = value`` files mirrored by CLI flags."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidConfigError
from ..noise import is_dyadic_int, is_dyadic_step

__all__ = ["RunConfig", "load_config_file", "default_out_dir", "OUT_DIR_ENV", "field_seed"]

OUT_DIR_ENV = "WNACTION_OUT_DIR"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "wnaction-out"))


def _ceil_to(x: float, step: float) -> float:
    return math.ceil(x / step - 1e-12) * step


@dataclass(frozen=True)
class RunConfig:
    """Every parameter that determines the content of a run.

    ``y_cap``, ``db`` and ``db_tilde`` may be ``"auto"``; they are resolved
    per system length by :meth:`cap_for`, :meth:`db_for` and
    :meth:`db_tilde_for`.
    """

    L: tuple = (4, 8, 16, 32, 64)
    m: int = 4
    dy: float = 0.25
    y_cap: str | float = "auto"
    db: str | float = "auto"
    db_tilde: str | float = "auto"
    tilde: bool = True
    competitor: bool = True
    competitor_scale: str | int = "auto"
    replicas: int = 200
    seed: int = 0
    max_doublings: int = 4
    zero_noise: bool = False

    def __post_init__(self):
        Ls = tuple(int(v) for v in (self.L if isinstance(self.L, (tuple, list)) else (self.L,)))
        if not Ls or not all(is_dyadic_int(v) for v in Ls):
            raise InvalidConfigError(f"L must be powers of two, got {self.L!r}")
        object.__setattr__(self, "L", Ls)
        if not is_dyadic_int(self.m):
            raise InvalidConfigError(f"m must be a power of two, got {self.m!r}")
        if not is_dyadic_step(float(self.dy)):
            raise InvalidConfigError(f"dy must be 2**-k, got {self.dy!r}")
        if self.replicas < 0:
            raise InvalidConfigError("replicas must be non-negative")
        if self.competitor_scale != "auto" and not is_dyadic_int(int(self.competitor_scale)):
            raise InvalidConfigError("competitor_scale must be a power of two or 'auto'")
        for key in ("y_cap", "db", "db_tilde"):
            v = getattr(self, key)
            if v != "auto":
                v = float(v)
                if not (v > 0 and v / self.dy == round(v / self.dy)):
                    raise InvalidConfigError(f"{key} must be a positive multiple of dy, got {v}")
                object.__setattr__(self, key, v)

    # per-L resolution -----------------------------------------------------

    def cap_for(self, L: int) -> float:
        if self.y_cap == "auto":
            return _ceil_to(8.0 * math.sqrt(L), self.dy)
        return float(self.y_cap)

    def tilde_cap_for(self, L: int) -> float:
        cap = self.cap_for(L)
        return max(cap, _ceil_to(2.0 * L + cap / 2.0, self.dy))

    def db_for(self, L: int) -> float:
        if self.db == "auto":
            return max(self.dy, L * self.dy / 32.0)
        return float(self.db)

    def db_tilde_for(self, L: int) -> float:
        if self.db_tilde == "auto":
            return _ceil_to(L / 2.0, self.dy)
        return float(self.db_tilde)

    def competitor_scale_for(self, L: int) -> int | None:
        """Coarse scale of the two-scale competitor (None when ``L < 4``)."""
        if L < 4:
            return None
        l = max(2, L // 8) if self.competitor_scale == "auto" else int(self.competitor_scale)
        return l if l < L else None

    # serialization ----------------------------------------------------------

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["L"] = list(self.L)
        return d

    def resolved(self) -> dict:
        """All defaults spelled out, per system length."""
        d = self.to_dict()
        d["per_L"] = {
            str(L): {
                "y_cap": self.cap_for(L),
                "window": L / 2,
                "db": self.db_for(L),
                "tilde_window": 2 * L,
                "tilde_cap": self.tilde_cap_for(L),
                "db_tilde": self.db_tilde_for(L),
                "competitor_scale": self.competitor_scale_for(L),
                "field_seed": field_seed(self.seed, L),
            }
            for L in self.L
        }
        return d

    def hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _coerce(key: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if key not in fields:
        raise InvalidConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    default = fields[key].default
    if key == "L":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if isinstance(default, bool):
        if raw.lower() not in _BOOL:
            raise InvalidConfigError(f"{key} expects a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if raw == "auto":
        return raw
    if isinstance(default, int) or key == "competitor_scale":
        return int(raw)
    return float(raw)


def parse_overrides(pairs: dict) -> dict:
    return {k: _coerce(k, str(v)) for k, v in pairs.items()}


def load_config_file(path) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) into overrides."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def field_seed(seed: int, L: int) -> int:
    """Independent 64-bit noise seed for each system length."""
    state = np.random.SeedSequence([int(seed), int(L)]).generate_state(1, dtype=np.uint64)
    return int(state[0])
