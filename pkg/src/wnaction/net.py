"""The integer net of coarse profiles, its binning, and the constrained ball.

A net point at scale ``l`` has node values in ``l * Z``.  In units of ``l``
the ball ``N_nu`` is described by integer coordinates:

* the left value ``v0`` with ``|v0| <= nu * L / l``;
* the end increment ``d = h(L) - h(0)`` with ``d**2 <= 2 (L/l)**4 nu``
  (the linear part ``h_L`` carries ``D / L = l**2 d**2 / (2 L**2)``);
* for every dyadic ``l <= rho < L`` the tent heights of ``h_rho`` at the odd
  multiples of ``rho``, written ``(l/2) t`` with integer ``t``, subject to
  ``sum t**2 <= 4 (rho/l)**3 (L/l) nu``.

Integrality of the node values ties the parity of each ``t`` to the values
one level up.  The counter walks the levels from coarse to fine, carrying
node values modulo the powers of two that the remaining levels can still
see, and counts each level's tents from the distribution of partial sums
of ``t**2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InstanceTooLargeError, InvalidConfigError
from .noise import is_dyadic_int
from .profile import HeightProfile, dirichlet, scale_component

__all__ = [
    "NetPoint",
    "NetBallSpec",
    "project",
    "in_net_ball",
    "enumerate_net_ball",
    "count_bound_ratio",
    "rectangle_scan_count",
    "MAX_RATIO",
    "MEMBER_LIMIT",
]

MAX_RATIO = 8
MEMBER_LIMIT = 10**8


@dataclass(frozen=True, eq=False)
class NetPoint:
    """Coarse profile with node values in ``l * Z``."""

    L: int
    l: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.L // self.l + 1,):
            raise InvalidConfigError(f"expected {self.L // self.l + 1} node values")
        if not np.array_equal(vals / self.l, np.round(vals / self.l)):
            raise InvalidConfigError(f"net values must be multiples of l={self.l}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def as_profile(self, dy: float = 0.25) -> HeightProfile:
        return HeightProfile(self.L, self.l, self.values, dy)

    def __eq__(self, other):
        return (
            isinstance(other, NetPoint)
            and (self.L, self.l) == (other.L, other.l)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.L, self.l, tuple(self.values)))

    def __repr__(self):
        return f"NetPoint(L={self.L}, l={self.l}, values={self.values.tolist()})"


@dataclass(frozen=True)
class NetBallSpec:
    L: int
    l: int
    nu: float

    def __post_init__(self):
        if not (is_dyadic_int(self.L) and is_dyadic_int(self.l) and self.l <= self.L):
            raise InvalidConfigError(f"need dyadic l <= L, got l={self.l!r}, L={self.L!r}")
        if not self.nu >= math.e:
            raise InvalidConfigError(f"nu must be at least e, got {self.nu!r}")

    @property
    def n(self) -> int:
        return self.L // self.l


def project(h) -> NetPoint:
    """Nearest net point with half-open bins ``[Pi - l/2, Pi + l/2)``."""
    l = h.scale if isinstance(h, HeightProfile) else h.l
    vals = np.asarray(h.values, dtype=np.float64)
    return NetPoint(h.L, l, l * np.floor(vals / l + 0.5))


# budgets in integer units -------------------------------------------------

def _tent_budget(spec: NetBallSpec, level: int) -> int:
    # tents of h_rho, rho = 2**level * l
    return math.floor(4.0 * (2 ** level) ** 3 * spec.n * spec.nu)


def _end_budget(spec: NetBallSpec) -> int:
    return math.floor(2.0 * spec.n ** 4 * spec.nu)


def _left_count(spec: NetBallSpec) -> int:
    return 2 * math.floor(spec.nu * spec.n) + 1


def in_net_ball(p: NetPoint, nu: float) -> bool:
    """Membership in ``N_nu`` checked through the profile module's energies."""
    h = p.as_profile()
    L, l = p.L, p.l
    if abs(p.values[0]) / L > nu:
        return False
    rho = l
    while rho <= L:
        if dirichlet(scale_component(h, rho)) / L > (rho / l) ** 2 * nu * (1 + 1e-12):
            return False
        rho *= 2
    return True


def _class_values(bound: int, residue: int, modulus: int) -> np.ndarray:
    r = math.isqrt(bound)
    t = np.arange(-r, r + 1)
    return t[(t - residue) % modulus == 0]


def _class_count(bound: int, residue: int, modulus: int) -> int:
    """Integers ``t = residue mod modulus`` with ``t**2 <= bound``."""
    if bound < 0:
        return 0
    a = math.isqrt(bound)
    return max(0, (a - residue) // modulus - (-a - residue + modulus - 1) // modulus + 1)


def _ball_count(bound: int, residues: tuple, modulus: int) -> int:
    """Integer vectors ``t`` with ``t_i = residues[i] mod modulus`` and ``|t|^2 <= bound``."""
    # sparse distribution of partial sums of squares; the last coordinate
    # is counted in closed form
    partial = {0: 1}
    for r in residues[:-1]:
        squares = [int(t) * int(t) for t in _class_values(bound, r, modulus)]
        nxt = {}
        for acc, ways in partial.items():
            for sq in squares:
                tot = acc + sq
                if tot <= bound:
                    nxt[tot] = nxt.get(tot, 0) + ways
        partial = nxt
    last = residues[-1]
    return sum(ways * _class_count(bound - acc, last, modulus) for acc, ways in partial.items())


def _count_v0_zero(spec: NetBallSpec) -> int:
    n = spec.n
    k = n.bit_length() - 1

    @lru_cache(maxsize=None)
    def fill(level: int, nodes: tuple) -> int:
        # nodes: values mod 2**(level+1) at the multiples of 2**(level+1)
        if level < 0:
            return 1
        mod = 2 ** (level + 1)
        parities = [(nodes[i] + nodes[i + 1]) % 2 for i in range(len(nodes) - 1)]
        choices = [[r for r in range(mod) if r % 2 == p] for p in parities]
        bound = _tent_budget(spec, level)
        total = 0
        for res in itertools.product(*choices):
            inner = _ball_count(bound, res, mod)
            if inner == 0:
                continue
            child_mod = 2 ** level
            finer = []
            for i, r in enumerate(res):
                mid = ((nodes[i] + nodes[i + 1] + r) % mod) // 2
                finer.extend([nodes[i] % child_mod, mid % child_mod])
            finer.append(nodes[-1] % child_mod)
            total += inner * fill(level - 1, tuple(finer))
        return total

    bound = _end_budget(spec)
    mod = 2 ** k
    total = 0
    for r in range(mod):
        nd = _class_count(bound, r, mod)
        if nd:
            total += nd * fill(k - 1, (0, r % mod))
    return total


def _members(spec: NetBallSpec):
    n, l = spec.n, spec.l
    k = n.bit_length() - 1
    v0_max = math.floor(spec.nu * n)
    d_max = math.isqrt(_end_budget(spec))

    def levels(vals, level):
        if level < 0:
            yield vals
            return
        step = 2 ** level
        idx = list(range(step, n, 2 * step))
        bound = _tent_budget(spec, level)
        r = math.isqrt(bound)

        def rec(i, used, cur):
            if i == len(idx):
                yield from levels(cur, level - 1)
                return
            c = idx[i]
            s = cur[c - step] + cur[c + step]
            for t in range(-r, r + 1):
                if (s + t) % 2 or used + t * t > bound:
                    continue
                nxt = dict(cur)
                nxt[c] = (s + t) // 2
                yield from rec(i + 1, used + t * t, nxt)

        yield from rec(0, 0, vals)

    for v0 in range(-v0_max, v0_max + 1):
        for d in range(-d_max, d_max + 1):
            for vals in levels({0: v0, n: v0 + d}, k - 1):
                yield NetPoint(spec.L, l, l * np.array([vals[x] for x in range(n + 1)], dtype=np.float64))


def enumerate_net_ball(spec: NetBallSpec, members: bool = False):
    """Cardinality of ``N_nu`` and, optionally, a stream of its members.

    The count is exact.  Members are produced lazily by depth-first
    traversal in a fixed order (left value, end increment, then tents from
    coarse to fine, left to right).

    Raises
    ------
    InstanceTooLargeError
        If ``L/l > MAX_RATIO``, or members are requested for a ball larger
        than ``MEMBER_LIMIT``.
    """
    if spec.n > MAX_RATIO:
        raise InstanceTooLargeError(f"L/l={spec.n} exceeds {MAX_RATIO}")
    count = _left_count(spec) * _count_v0_zero(spec)
    if not members:
        return count, None
    if count > MEMBER_LIMIT:
        raise InstanceTooLargeError(f"{count} members exceed the streaming limit {MEMBER_LIMIT}")
    return count, _members(spec)


def count_bound_ratio(spec: NetBallSpec) -> float:
    """``ln(count) / ((L/l) ln nu)``."""
    count, _ = enumerate_net_ball(spec)
    return math.log(count) / (spec.n * math.log(spec.nu))


def rectangle_scan_count(spec: NetBallSpec, box: int | None = None) -> int:
    """Brute-force count: scan all raw value vectors in a box and filter.

    Independent of the level recursion: membership is decided by
    :func:`in_net_ball` on every integer vector ``h(n l) / l`` with entries in
    ``[-box, box]``.  The default box is large enough to contain the ball.
    """
    n = spec.n
    if box is None:
        box = math.floor(spec.nu * n) + math.isqrt(_end_budget(spec)) + n
    if (2 * box + 1) ** (n + 1) > 5 * 10**7:
        raise InstanceTooLargeError("rectangle scan too large")
    ranges = [range(-box, box + 1)] * (n + 1)
    total = 0
    for raw in itertools.product(*ranges):
        p = NetPoint(spec.L, spec.l, spec.l * np.array(raw, dtype=np.float64))
        if in_net_ball(p, spec.nu):
            total += 1
    return total
