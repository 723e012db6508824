"""Temporal-difference value updates and their contraction bound.

One refinement step samples, independently for every state i, an
action from the policy, a reward (in [0,1]) and a successor state, and
updates

    V'(i) = (1 - alpha) * V(i) + alpha * min(r + gamma * V(j), 1)

The full step is the exact product distribution over updated value
vectors.  With k = 1 - alpha + gamma * alpha the step is k-Lipschitz
for the Kantorovich distance over the max-metric on vectors: coupling
the two runs on shared randomness bounds every path difference by
k * max_i |V(i) - W(i)| pointwise.

``td_contraction_check`` verifies the iterated bound
K(TD^n V, TD^n W) <= k^n * d(V, W).  It computes the exact transport
optimum while the support product stays small and otherwise falls
back to the shared-randomness coupling cost, which certifies an upper
bound on the same optimum (the report says which route each n took).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Tuple

from .measures import Dist, dirac, kantorovich
from .grades import TOL


@dataclass
class MDP:
    n_states: int
    actions: List[str]
    # (action, state) -> Dist over successor states
    transition: Dict[Tuple[str, int], Dist]
    # (state, action) -> Dist over rewards in [0, 1]
    reward: Dict[Tuple[int, str], Dist]
    # state -> Dist over actions
    policy: Dict[int, Dist]
    alpha: Fraction = Fraction(1, 2)
    gamma: Fraction = Fraction(1, 2)

    def __post_init__(self):
        # alpha = 0 degenerates to the identity update and is allowed
        if not (0 <= self.alpha < 1 and 0 < self.gamma < 1):
            raise ValueError("need 0 <= alpha < 1 and 0 < gamma < 1")
        for (i, a), rd in self.reward.items():
            for r, _ in rd.points:
                if not 0 <= float(r) <= 1:
                    raise ValueError("rewards must lie in [0,1]")

    @property
    def k(self) -> Fraction:
        return 1 - self.alpha + self.gamma * self.alpha


def _state_branches(mdp: MDP, i: int, vi: float, v: Tuple[float, ...]) -> Dist:
    """Distribution of the updated value at state i."""
    alpha = float(mdp.alpha)
    gamma = float(mdp.gamma)
    out: List[Tuple[float, Fraction]] = []
    for a, wa in mdp.policy[i].points:
        for r, wr in mdp.reward[(i, a)].points:
            for j, wj in mdp.transition[(a, i)].points:
                upd = (1 - alpha) * vi + alpha * min(float(r) + gamma * v[j], 1.0)
                out.append((upd, wa * wr * wj))
    return Dist.from_pairs(out)


def td_step(mdp: MDP, v: Tuple[float, ...]) -> Dist:
    """Exact one-step distribution over updated value vectors."""
    if len(v) != mdp.n_states:
        raise ValueError(
            f"value vector has {len(v)} entries for {mdp.n_states} states"
        )
    if any(not 0 <= x <= 1 for x in v):
        raise ValueError("value entries must lie in [0,1]")
    acc = dirac(())
    for i in range(mdp.n_states):
        branch = _state_branches(mdp, i, v[i], v)
        acc = Dist.from_pairs(
            [
                (vec + (x,), w1 * w2)
                for vec, w1 in acc.points
                for x, w2 in branch.points
            ]
        )
    return acc


def d_max(v: Tuple[float, ...], w: Tuple[float, ...]) -> float:
    return max((abs(a - b) for a, b in zip(v, w)), default=0.0)


def _paired_step(mdp: MDP, pair_dist: Dist) -> Dist:
    """Advance a distribution over (V, W) pairs on shared randomness."""
    out: List[Tuple[Tuple[tuple, tuple], Fraction]] = []
    alpha = float(mdp.alpha)
    gamma = float(mdp.gamma)
    for (v, w), mass in pair_dist.points:
        branches: List[Tuple[Tuple[tuple, tuple], Fraction]] = [((() , ()), mass)]
        for i in range(mdp.n_states):
            nxt = []
            for (pv, pw), m0 in branches:
                for a, wa in mdp.policy[i].points:
                    for r, wr in mdp.reward[(i, a)].points:
                        for j, wj in mdp.transition[(a, i)].points:
                            uv = (1 - alpha) * v[i] + alpha * min(
                                float(r) + gamma * v[j], 1.0
                            )
                            uw = (1 - alpha) * w[i] + alpha * min(
                                float(r) + gamma * w[j], 1.0
                            )
                            nxt.append(
                                ((pv + (uv,), pw + (uw,)), m0 * wa * wr * wj)
                            )
            branches = nxt
        out.extend(branches)
    return Dist.from_pairs(out)


@dataclass
class TDReport:
    k: float
    d0: float
    rows: List[dict] = field(default_factory=list)
    ok: bool = True

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "initial_distance": self.d0,
            "rows": self.rows,
            "status": "ok" if self.ok else "violated",
        }


def td_contraction_check(
    mdp: MDP,
    v: Tuple[float, ...],
    w: Tuple[float, ...],
    n: int,
    tol: float = 1e-6,
    lp_cap: int = 25,
    support_cap: int = 200000,
) -> TDReport:
    """Verify K(TD^m V, TD^m W) <= k^m d(V,W) for every m <= n."""
    kf = float(mdp.k)
    report = TDReport(k=kf, d0=d_max(v, w))
    pairs = dirac((tuple(v), tuple(w)))
    bound = report.d0
    for m in range(1, n + 1):
        pairs = _paired_step(mdp, pairs)
        if len(pairs.points) > support_cap:
            raise ValueError(
                f"support blow-up: {len(pairs.points)} pairs at step {m}"
            )
        bound *= kf
        mu = Dist.from_pairs([(pv, q) for (pv, _), q in pairs.points])
        nu = Dist.from_pairs([(pw, q) for (_, pw), q in pairs.points])
        coupling_cost = float(
            sum(float(q) * d_max(pv, pw) for (pv, pw), q in pairs.points)
        )
        if len(mu.points) * len(nu.points) <= lp_cap * lp_cap:
            measured = kantorovich(d_max, mu, nu)
            mode = "exact-lp"
        else:
            measured = coupling_cost
            mode = "coupling-upper-bound"
        ok = measured <= bound + tol
        report.rows.append(
            {
                "n": m,
                "mode": mode,
                "measured": measured,
                "coupling_cost": coupling_cost,
                "bound": bound,
                "ok": ok,
            }
        )
        report.ok = report.ok and ok
    return report


def random_mdp(seed: int, n_states: int = 3, n_actions: int = 2) -> MDP:
    """A random sparse MDP: deterministic except one stochastic policy
    state and one stochastic transition, keeping exact enumeration
    small while varying across seeds."""
    rng = random.Random(seed)
    actions = [f"a{i}" for i in range(n_actions)]
    coin_state = rng.randrange(n_states)
    coin_cell = (rng.choice(actions), rng.randrange(n_states))
    transition = {}
    reward = {}
    policy = {}
    for i in range(n_states):
        if i == coin_state:
            a1, a2 = rng.sample(actions, 2) if n_actions > 1 else (actions[0],) * 2
            p = Fraction(rng.randrange(1, 8), 8)
            policy[i] = Dist.from_pairs([(a1, p), (a2, 1 - p)])
        else:
            policy[i] = dirac(rng.choice(actions))
        for a in actions:
            if (a, i) == coin_cell:
                j1, j2 = rng.randrange(n_states), rng.randrange(n_states)
                if j1 == j2:
                    transition[(a, i)] = dirac(j1)
                else:
                    q = Fraction(rng.randrange(1, 8), 8)
                    transition[(a, i)] = Dist.from_pairs([(j1, q), (j2, 1 - q)])
            else:
                transition[(a, i)] = dirac(rng.randrange(n_states))
            reward[(i, a)] = dirac(rng.randrange(0, 17) / 16.0)
    return MDP(
        n_states=n_states,
        actions=actions,
        transition=transition,
        reward=reward,
        policy=policy,
    )


def random_vector(seed: int, n_states: int) -> Tuple[float, ...]:
    rng = random.Random(seed)
    return tuple(rng.randrange(0, 17) / 16.0 for _ in range(n_states))
