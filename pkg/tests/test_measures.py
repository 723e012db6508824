"""Distributions, couplings and the transport layer."""

import random
from fractions import Fraction as F

import pytest

from qlog.measures import (
    Coupling,
    Dist,
    bind,
    convex,
    dirac,
    dist_from_json,
    dist_to_json,
    kantorovich,
    kantorovich_exact,
    kantorovich_oracle,
    optimal_coupling,
    pushforward,
    total_variation,
)
from qlog.transport import TransportError, brute_force_transport, solve_transport

DISC = lambda a, b: 0.0 if a == b else 1.0

MU = Dist.from_pairs([(0, F(1, 2)), (1, F(1, 2))])
NU = Dist.from_pairs([(0, F(1, 4)), (1, F(3, 4))])


def _rand_dist(rng, size=3, den=8):
    cuts = sorted(rng.randrange(0, den + 1) for _ in range(size - 1))
    ws, prev = [], 0
    for c in list(cuts) + [den]:
        ws.append(F(c - prev, den))
        prev = c
    pairs = [(rng.randrange(0, 5), w) for w in ws if w > 0]
    return Dist.from_pairs(pairs) if pairs else dirac(rng.randrange(0, 5))


def test_dirac():
    d = dirac(3)
    assert d.points == ((3, F(1)),)
    assert kantorovich(DISC, dirac(7), dirac(7)) == 0.0
    assert kantorovich(DISC, dirac(7), dirac(8)) == 1.0


def test_convex_axioms():
    mu = _rand_dist(random.Random(5))
    nu = _rand_dist(random.Random(6))
    assert convex(F(1, 3), mu, mu) == mu  # idempotence
    assert convex(F(1, 3), mu, nu) == convex(F(2, 3), nu, mu)  # commutativity
    # skewed associativity
    rho = _rand_dist(random.Random(7))
    p, q = F(1, 3), F(1, 2)
    lhs = convex(q, convex(p, mu, nu), rho)
    r = (q - p * q) / (1 - p * q)
    rhs = convex(p * q, mu, convex(r, nu, rho))
    assert lhs == rhs
    assert convex(F(1, 2), dirac(0), dirac(1)) == Dist.from_pairs(
        [(0, F(1, 2)), (1, F(1, 2))]
    )
    with pytest.raises(ValueError):
        convex(F(3, 2), mu, nu)


def test_bind():
    assert bind(dirac(4), lambda k: dirac(k + 1)) == dirac(5)
    out = bind(MU, lambda k: dirac(k + 1))
    assert out == Dist.from_pairs([(1, F(1, 2)), (2, F(1, 2))])
    # mean into truth values: weighted truncated sum
    mean = bind(MU, lambda k: 0.2 if k == 0 else 0.4)
    assert mean == pytest.approx(0.3)
    # homomorphism in the measure argument
    rng = random.Random(8)
    for _ in range(50):
        a, b = _rand_dist(rng), _rand_dist(rng)
        p = F(rng.randrange(1, 8), 8)
        f = lambda k: dirac(k % 2)
        assert bind(convex(p, a, b), f) == convex(p, bind(a, f), bind(b, f))


def test_pushforward():
    mu = Dist.from_pairs([(0, F(1, 4)), (1, F(1, 4)), (2, F(1, 2))])
    assert pushforward(lambda v: v, mu) == mu
    assert pushforward(lambda v: 9, mu) == dirac(9)
    assert pushforward(lambda v: v % 2, mu) == Dist.from_pairs(
        [(0, F(3, 4)), (1, F(1, 4))]
    )


def test_kantorovich_basics():
    assert kantorovich(DISC, MU, MU) == 0.0
    assert kantorovich(DISC, MU, NU) == pytest.approx(0.25)
    c = optimal_coupling(DISC, MU, NU)
    assert c.left() == MU and c.right() == NU
    assert c.cost(DISC) == pytest.approx(0.25)
    off_diag = sum(w for (x, y), w in c.joint.points if x != y)
    assert off_diag == F(1, 4)


def test_diagonal_coupling_on_equal_inputs():
    mu = _rand_dist(random.Random(9))
    c = optimal_coupling(DISC, mu, mu)
    assert all(x == y for (x, y), _ in c.joint.points)
    assert c.cost(DISC) == 0.0


def test_kantorovich_metric_properties():
    rng = random.Random(10)
    metric = lambda a, b: abs(a - b) / 4.0  # 1-bounded on {0..4}
    for _ in range(60):
        a, b, c = (_rand_dist(rng) for _ in range(3))
        dab = kantorovich(metric, a, b)
        dba = kantorovich(metric, b, a)
        assert dab == pytest.approx(dba, abs=1e-9)
        dac = kantorovich(metric, a, c)
        dcb = kantorovich(metric, c, b)
        assert dab <= dac + dcb + 3e-9


def test_convex_nonexpansive():
    rng = random.Random(11)
    for _ in range(60):
        a, b, a2, b2 = (_rand_dist(rng) for _ in range(4))
        p = F(rng.randrange(1, 8), 8)
        lhs = kantorovich(DISC, convex(p, a, b), convex(p, a2, b2))
        rhs = float(p) * kantorovich(DISC, a, a2) + float(1 - p) * kantorovich(
            DISC, b, b2
        )
        assert lhs <= rhs + 1e-9


def test_convex_combination_of_couplings_cost():
    rng = random.Random(12)
    for _ in range(30):
        m1, m2, n1, n2 = (_rand_dist(rng) for _ in range(4))
        p = F(rng.randrange(1, 8), 8)
        c1 = kantorovich(DISC, m1, n1)
        c2 = kantorovich(DISC, m2, n2)
        mixed = kantorovich(DISC, convex(p, m1, m2), convex(p, n1, n2))
        assert mixed <= float(p) * c1 + float(1 - p) * c2 + 1e-9


def test_lp_equals_vertex_enumeration_exactly():
    rng = random.Random(13)
    for _ in range(120):
        mu, nu = _rand_dist(rng), _rand_dist(rng)
        cost = lambda a, b: F(abs(a - b), 4)
        exact, witness = kantorovich_exact(cost, mu, nu)
        oracle = kantorovich_oracle(cost, mu, nu)
        assert exact == oracle
        assert witness.left() == mu and witness.right() == nu


def test_total_variation_is_discrete_transport():
    rng = random.Random(14)
    for _ in range(60):
        mu, nu = _rand_dist(rng), _rand_dist(rng)
        tv = total_variation(mu, nu)
        lp = kantorovich(DISC, mu, nu)
        assert float(tv) == pytest.approx(lp, abs=1e-9)


def test_unbalanced_rejected():
    with pytest.raises(TransportError):
        solve_transport([F(1)], [F(1, 2)], [[F(0)]])


def test_residual_bookkeeping():
    sub = Dist.from_pairs([(0, F(1, 2))], residual_approx=F(1, 2))
    assert sub.residual == F(1, 2)
    out = bind(sub, lambda k: dirac(k + 1))
    assert out.residual_approx == F(1, 2)
    mixed = convex(F(1, 2), sub, dirac(9))
    assert mixed.residual_approx == F(1, 4)


def test_json_round_trip():
    d = Dist.from_pairs([(0, F(1, 4)), (3, F(1, 2))], residual_div=F(1, 4))
    blob = dist_to_json(d)
    assert blob["residual"] == 0.25 and blob["residual_divergent"] == 0.25
    back = dist_from_json(blob)
    assert back.weight(0) == F(1, 4) and back.residual_div == F(1, 4)
