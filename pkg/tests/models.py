"""Random model generators shared by the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from pbisim.core import Dist, Plts


def random_dist(rng: random.Random, states: list[int], max_den: int = 8, max_support: int | None = None) -> Dist:
    den = rng.randint(1, max_den)
    k = rng.randint(1, min(len(states), den, max_support or len(states)))
    support = rng.sample(states, k)
    # split den into k positive integer parts
    cuts = sorted(rng.sample(range(1, den), k - 1)) if k > 1 else []
    sizes = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return Dist({s: Fraction(c, den) for s, c in zip(support, sizes)})


def random_plts(
    rng: random.Random,
    max_states: int = 8,
    max_actions: int = 3,
    max_branch: int = 3,
    max_den: int = 8,
    n_states: int | None = None,
    n_actions: int | None = None,
    point_only: bool = False,
    density: float = 0.7,
) -> Plts:
    n = n_states or rng.randint(1, max_states)
    m = n_actions or rng.randint(1, max_actions)
    states = list(range(n))
    trans: dict[tuple[int, int], list[Dist]] = {}
    for s in states:
        for a in range(m):
            if rng.random() > density:
                continue
            ds: list[Dist] = []
            for _ in range(rng.randint(1, max_branch)):
                d = Dist.point(rng.choice(states)) if point_only else random_dist(rng, states, max_den)
                if d not in ds:
                    ds.append(d)
            trans[(s, a)] = ds
    return Plts([f"s{i}" for i in states], [chr(ord("a") + a) for a in range(m)], trans)


def corpus(seed: int, count: int, **kw) -> list[Plts]:
    rng = random.Random(seed)
    return [random_plts(rng, **kw) for _ in range(count)]
