"""Finite-support (sub)distributions, couplings and optimal transport.

A :class:`Dist` is a finite weighted multiset of values in canonical
form (duplicates merged, deterministic order) plus an explicit residual
mass.  Residual mass not assigned to any support point models either

* genuine divergence (the bottom element of subdistributions), or
* truncation left over from approximating an infinite-support fixed
  point to finite depth.

The two are tracked separately because they enter error accounting
differently: approximation residual widens certified error radii,
divergence residual is part of the semantics.

Weights are exact ``Fraction``s so that canonical forms, convex
combinations and the transport LP below are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Sequence, Tuple, Union

from .grades import Grade
from .transport import brute_force_transport, solve_transport

WeightLike = Union[Fraction, int, float, str]


def _as_weight(w: WeightLike) -> Fraction:
    if isinstance(w, Fraction):
        return w
    if isinstance(w, float):
        return Fraction(w)  # exact binary expansion
    return Fraction(w)


# ---------------------------------------------------------------------------
# Canonical keys: semantic-value equality for support merging
# ---------------------------------------------------------------------------


def key_of(v: Any) -> Any:
    """Hashable canonical key for a support value.

    First-order values get structural keys.  Values without a
    decidable equality (closures, process nodes) fall back to object
    identity; distributions over such values are therefore not merged,
    a documented limitation.
    """
    m = getattr(v, "dist_key", None)
    if m is not None:
        return m()
    if isinstance(v, bool):
        return ("bool", v)
    if isinstance(v, int):
        return ("int", v)
    if isinstance(v, float):
        return ("float", v)
    if isinstance(v, str):
        return ("str", v)
    if isinstance(v, tuple):
        return ("tuple",) + tuple(key_of(x) for x in v)
    if v is None:
        return ("none",)
    if isinstance(v, Dist):
        return ("dist", v.dist_key())
    return ("id", id(v))


def _sort_token(key: Any) -> str:
    # zero-pad ints so support order is numeric, not lexicographic
    if isinstance(key, tuple):
        return "(" + ",".join(_sort_token(k) for k in key) + ")"
    if isinstance(key, int) and not isinstance(key, bool):
        return f"{key:024d}"
    return repr(key)


@dataclass(frozen=True)
class Dist:
    """Canonical finite-support (sub)probability distribution."""

    points: Tuple[Tuple[Any, Fraction], ...]
    residual_div: Fraction = Fraction(0)
    residual_approx: Fraction = Fraction(0)

    # -- constructors --------------------------------------------------

    @staticmethod
    def from_pairs(
        pairs: Iterable[Tuple[Any, WeightLike]],
        residual_div: WeightLike = 0,
        residual_approx: WeightLike = 0,
    ) -> "Dist":
        merged: Dict[Any, Tuple[Any, Fraction]] = {}
        for v, w in pairs:
            w = _as_weight(w)
            if w < 0:
                raise ValueError(f"negative weight {w}")
            if w == 0:
                continue
            k = key_of(v)
            if k in merged:
                merged[k] = (merged[k][0], merged[k][1] + w)
            else:
                merged[k] = (v, w)
        pts = tuple(
            merged[k] for k in sorted(merged.keys(), key=_sort_token)
        )
        d = Dist(pts, _as_weight(residual_div), _as_weight(residual_approx))
        total = d.mass + d.residual_div + d.residual_approx
        if total != 1:
            raise ValueError(f"total mass {total} != 1")
        return d

    # -- basic views ---------------------------------------------------

    @property
    def mass(self) -> Fraction:
        return sum((w for _, w in self.points), Fraction(0))

    @property
    def residual(self) -> Fraction:
        return self.residual_div + self.residual_approx

    def support(self) -> List[Any]:
        return [v for v, _ in self.points]

    def weight(self, v: Any) -> Fraction:
        k = key_of(v)
        for u, w in self.points:
            if key_of(u) == k:
                return w
        return Fraction(0)

    def dist_key(self) -> Any:
        return (
            tuple((key_of(v), w) for v, w in self.points),
            self.residual_div,
            self.residual_approx,
        )

    def __str__(self) -> str:
        parts = [f"{v}:{w}" for v, w in self.points]
        if self.residual:
            parts.append(f"residual:{self.residual}")
        return "{" + ", ".join(parts) + "}"


def dirac(v: Any) -> Dist:
    """Single-point distribution."""
    return Dist.from_pairs([(v, Fraction(1))])


def empty_subdist(divergent: bool = False) -> Dist:
    """All mass residual: bottom of the subdistribution order."""
    if divergent:
        return Dist((), Fraction(1), Fraction(0))
    return Dist((), Fraction(0), Fraction(1))


def convex(p: Union[Grade, Fraction, WeightLike], mu: Dist, nu: Dist) -> Dist:
    """Pointwise convex combination p*mu + (1-p)*nu, canonicalised.

    Satisfies the barycentric-algebra laws (idempotence, commutativity
    with 1-p, the skewed associativity) exactly on canonical forms.
    """
    if isinstance(p, Grade):
        if p.is_infinite:
            raise ValueError("mixing weight must be finite")
        p = p.rational
    else:
        p = _as_weight(p)
    if not (0 < p < 1):
        raise ValueError(f"mixing weight must lie in (0,1), got {p}")
    q = 1 - p
    pairs = [(v, w * p) for v, w in mu.points] + [(v, w * q) for v, w in nu.points]
    return Dist.from_pairs(
        pairs,
        residual_div=mu.residual_div * p + nu.residual_div * q,
        residual_approx=mu.residual_approx * p + nu.residual_approx * q,
    )


def pushforward(f: Callable[[Any], Any], mu: Dist) -> Dist:
    """Image distribution along f, collisions merged."""
    return Dist.from_pairs(
        [(f(v), w) for v, w in mu.points],
        residual_div=mu.residual_div,
        residual_approx=mu.residual_approx,
    )


def bind(mu: Dist, f: Callable[[Any], Any]) -> Any:
    """Homomorphic extension of f over the support of mu.

    The codomain must carry convex-mixture structure: distributions
    (monad bind), truth values in [0,1] (the mean, a truncated weighted
    sum that never actually truncates since weights sum to <= 1),
    or tuples of such, combined componentwise.
    """
    results = [(f(v), w) for v, w in mu.points]
    if not results:
        if mu.residual == 0:
            raise ValueError("cannot bind an empty distribution")
        return Dist((), mu.residual_div, mu.residual_approx)
    first = results[0][0]
    if isinstance(first, Dist):
        pairs: List[Tuple[Any, Fraction]] = []
        rdiv = mu.residual_div
        rapp = mu.residual_approx
        for d, w in results:
            pairs.extend((v, w * q) for v, q in d.points)
            rdiv += w * d.residual_div
            rapp += w * d.residual_approx
        return Dist.from_pairs(pairs, residual_div=rdiv, residual_approx=rapp)
    if isinstance(first, (int, float)):
        if mu.residual != 0:
            raise ValueError(
                "mean over a subdistribution needs explicit bottom handling"
            )
        return float(sum(float(w) * float(x) for x, w in results))
    if isinstance(first, tuple):
        if mu.residual != 0:
            raise ValueError("componentwise bind requires a full distribution")
        n = len(first)
        return tuple(
            bind(mu, lambda v, i=i: f(v)[i]) for i in range(n)
        )
    raise ValueError(f"codomain {type(first).__name__} is not a mixture algebra")


# ---------------------------------------------------------------------------
# Couplings and the Kantorovich distance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Coupling:
    """Joint distribution over pairs with cached marginals."""

    joint: Dist  # support values are 2-tuples (x, y)

    def left(self) -> Dist:
        return pushforward(lambda p: p[0], self.joint)

    def right(self) -> Dist:
        return pushforward(lambda p: p[1], self.joint)

    def cost(self, metric: Callable[[Any, Any], float]) -> float:
        return float(
            sum(float(w) * metric(x, y) for (x, y), w in self.joint.points)
        )


def _transport_instance(metric, mu: Dist, nu: Dist):
    if mu.residual != 0 or nu.residual != 0:
        raise ValueError("transport needs full distributions; adjoin bottom first")
    xs = mu.points
    ys = nu.points
    supplies = [w for _, w in xs]
    demands = [w for _, w in ys]
    costs = [[Fraction(float(metric(x, y))) for y, _ in ys] for x, _ in xs]
    return xs, ys, supplies, demands, costs


def kantorovich(metric: Callable[[Any, Any], float], mu: Dist, nu: Dist) -> float:
    """Least expected point distance over all couplings of mu and nu.

    ``metric`` must be 1-bounded on the union of the supports.  The
    optimum is exact up to the float conversion at the boundary.
    """
    xs, ys, supplies, demands, costs = _transport_instance(metric, mu, nu)
    cost, _ = solve_transport(supplies, demands, costs)
    return float(cost)


def optimal_coupling(
    metric: Callable[[Any, Any], float], mu: Dist, nu: Dist
) -> Coupling:
    """A coupling witnessing the Kantorovich optimum."""
    xs, ys, supplies, demands, costs = _transport_instance(metric, mu, nu)
    _, flow = solve_transport(supplies, demands, costs)
    pairs = [((xs[i][0], ys[j][0]), q) for (i, j), q in flow.items()]
    return Coupling(Dist.from_pairs(pairs))


def kantorovich_exact(
    cost: Callable[[Any, Any], Fraction], mu: Dist, nu: Dist
) -> Tuple[Fraction, Coupling]:
    """Rational cross-check mode: exact costs in, exact optimum out."""
    if mu.residual != 0 or nu.residual != 0:
        raise ValueError("transport needs full distributions; adjoin bottom first")
    xs, ys = mu.points, nu.points
    supplies = [w for _, w in xs]
    demands = [w for _, w in ys]
    matrix = [[Fraction(cost(x, y)) for y, _ in ys] for x, _ in xs]
    opt, flow = solve_transport(supplies, demands, matrix)
    pairs = [((xs[i][0], ys[j][0]), q) for (i, j), q in flow.items()]
    return opt, Coupling(Dist.from_pairs(pairs))


def kantorovich_oracle(
    cost: Callable[[Any, Any], Fraction], mu: Dist, nu: Dist
) -> Fraction:
    """Vertex-enumeration oracle for the same optimum (small instances)."""
    if mu.residual != 0 or nu.residual != 0:
        raise ValueError("transport needs full distributions")
    xs, ys = mu.points, nu.points
    supplies = [w for _, w in xs]
    demands = [w for _, w in ys]
    matrix = [[Fraction(cost(x, y)) for y, _ in ys] for x, _ in xs]
    opt, _ = brute_force_transport(supplies, demands, matrix)
    return opt


def total_variation(mu: Dist, nu: Dist) -> Fraction:
    """Exact total-variation distance between full distributions.

    Coincides with the Kantorovich distance for the discrete metric;
    the transport tests exercise that identity.
    """
    if mu.residual != 0 or nu.residual != 0:
        raise ValueError("total variation needs full distributions")
    keys = {key_of(v): v for v, _ in mu.points}
    keys.update({key_of(v): v for v, _ in nu.points})
    tv = Fraction(0)
    for k, v in keys.items():
        tv += abs(mu.weight(v) - nu.weight(v))
    return tv / 2


# ---------------------------------------------------------------------------
# JSON serialisation
# ---------------------------------------------------------------------------


def dist_to_json(d: Dist, value_codec: Callable[[Any], Any] = lambda v: v) -> dict:
    out: dict = {
        "support": [
            {"v": value_codec(v), "w": float(w)} for v, w in d.points
        ],
        "residual": float(d.residual),
    }
    if d.residual_div:
        out["residual_divergent"] = float(d.residual_div)
    return out


def dist_from_json(obj: dict, value_codec: Callable[[Any], Any] = lambda v: v) -> Dist:
    pairs = [(value_codec(e["v"]), Fraction(e["w"])) for e in obj["support"]]
    residual = Fraction(obj.get("residual", 0))
    div = Fraction(obj.get("residual_divergent", 0))
    return Dist.from_pairs(
        pairs, residual_div=div, residual_approx=residual - div
    )
