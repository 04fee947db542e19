"""Probabilistic modal mu-calculus: semantics and characteristic formulae.

Formulae are in positive normal form, so every operator is monotone and
fixpoints are computed by plain iteration on the powerset of states.
Environments map variable names to state sets.

Characteristic formulae come from the characteristic equation system of
a model by repeatedly closing the last equation with ``nu``,
substituting it into the others and dropping it.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Mapping

from .core import Dist, Plts
from .logic import _feasible
from .syntax import (
    And,
    Bot,
    Box,
    Diamond,
    DistFormula,
    DistOr,
    Formula,
    Mu,
    Nu,
    Or,
    Top,
    Var,
    _all_names,
    choices,
    conj,
    dag_size,
    fresh_name,
    free_vars,
    parse,
    show,
)

__all__ = [
    "Environment",
    "EquationSystem",
    "UnboundVariableError",
    "BudgetExceeded",
    "Evaluator",
    "eval",
    "eval_dist",
    "characteristic_system",
    "greatest_solution",
    "substitute",
    "simplify",
    "rule1",
    "rule2",
    "rule3",
    "char_formula",
    "characteristic_formula",
    "characteristic_class",
    "characteristic_check",
    "node_budget",
    "parse_system",
]

Environment = Mapping[str, frozenset]

DEFAULT_BUDGET = 10**6


class UnboundVariableError(ValueError):
    def __init__(self, name: str):
        super().__init__(f"variable {name} is not bound by the environment")
        self.name = name


class BudgetExceeded(RuntimeError):
    def __init__(self, size: int, budget: int):
        super().__init__(
            f"formula grew to {size} nodes, over the budget of {budget} "
            "(raise it with PLTS_NODE_BUDGET)"
        )
        self.size = size
        self.budget = budget


def node_budget() -> int:
    """Formula-size guard, overridable through ``PLTS_NODE_BUDGET``."""
    raw = os.environ.get("PLTS_NODE_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"PLTS_NODE_BUDGET must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ValueError("PLTS_NODE_BUDGET must be positive")
    return value


# ---------------------------------------------------------------- semantics


class Evaluator:
    """Memoising evaluator for one model.

    Results are cached per subformula and the environment restricted to
    its free variables.  A fixpoint is restarted from its previous value
    whenever the free variables moved in the right direction, which keeps
    nested ``nu`` iterations from starting over at the full state set.
    """

    def __init__(self, p: Plts, trace: list | None = None):
        self.p = p
        self.every = frozenset(range(p.n_states))
        self.memo: dict = {}
        self.hints: dict[Formula, tuple[dict, frozenset]] = {}
        self.order: dict[Formula, tuple[str, ...]] = {}
        self.flows: dict = {}
        self.trace = trace

    def _key(self, f: Formula, env: Environment):
        names = self.order.get(f)
        if names is None:
            names = self.order[f] = tuple(sorted(free_vars(f)))
        try:
            return (f, tuple(env[x] for x in names))
        except KeyError as exc:
            raise UnboundVariableError(exc.args[0]) from None

    def states(self, f: Formula, env: Environment) -> frozenset:
        key = self._key(f, env)
        out = self.memo.get(key)
        if out is None:
            out = self.memo[key] = self._compute(f, env)
        return out

    def _compute(self, f: Formula, env: Environment) -> frozenset:
        if isinstance(f, Top):
            return self.every
        if isinstance(f, Bot):
            return frozenset()
        if isinstance(f, Var):
            return frozenset(env[f.name])
        if isinstance(f, And):
            left = self.states(f.left, env)
            return left & self.states(f.right, env) if left else left
        if isinstance(f, Or):
            left = self.states(f.left, env)
            return left | self.states(f.right, env) if left != self.every else left
        if isinstance(f, (Mu, Nu)):
            return self._fixpoint(f, env)
        if isinstance(f, (Diamond, Box)):
            return self._modal(f, env)
        raise TypeError(f"{type(f).__name__} is not a state formula")

    def _fixpoint(self, f: Mu | Nu, env: Environment) -> frozenset:
        greatest = isinstance(f, Nu)
        self._key(f, env)
        names = self.order[f]
        current = self.every if greatest else frozenset()
        hint = self.hints.get(f)
        if hint is not None:
            old_env, old_value = hint
            if greatest and all(env[x] <= old_env[x] for x in names):
                current = old_value
            elif not greatest and all(env[x] >= old_env[x] for x in names):
                current = old_value
        inner = dict(env)
        while True:
            inner[f.var] = current
            nxt = self.states(f.body, inner)
            if self.trace is not None:
                self.trace.append((f.var, nxt))
            if nxt == current:
                break
            current = nxt
        self.hints[f] = ({x: env[x] for x in names}, current)
        return current

    def _modal(self, f: Diamond | Box, env: Environment) -> frozenset:
        p = self.p
        if not p.has_action(f.action):
            return frozenset() if isinstance(f, Diamond) else self.every
        a = p.action(f.action)
        options = [(c, [self.states(g, env) for _, g in c.parts]) for c in choices(f.psi)]
        seen: dict[Dist, bool] = {}

        def ok(d: Dist) -> bool:
            if d not in seen:
                seen[d] = any(self._feasible(d, c, sets) for c, sets in options)
            return seen[d]

        if isinstance(f, Diamond):
            return frozenset(s for s in range(p.n_states) if any(ok(d) for d in p.der(s, a)))
        return frozenset(s for s in range(p.n_states) if all(ok(d) for d in p.der(s, a)))

    def _feasible(self, d: Dist, c: DistFormula, sets: list[frozenset]) -> bool:
        support = d.support_set
        key = (d, c, tuple(a & support for a in sets))
        out = self.flows.get(key)
        if out is None:
            parts = tuple((q, a) for (q, _), a in zip(c.parts, key[2]))
            out = self.flows[key] = _feasible(d, parts)
        return out

    def dist(self, d: Dist, psi: DistFormula | DistOr, env: Environment) -> bool:
        return any(
            self._feasible(d, c, [self.states(g, env) for _, g in c.parts])
            for c in choices(psi)
        )


def eval(p: Plts, f: Formula, env: Environment | None = None) -> frozenset[int]:
    """States satisfying ``f`` under ``env``."""
    return Evaluator(p).states(f, env or {})


def eval_dist(p: Plts, d: Dist, psi: DistFormula | DistOr, env: Environment | None = None) -> bool:
    return Evaluator(p).dist(d, psi, env or {})


# ------------------------------------------------------- equation systems


@dataclass(frozen=True)
class EquationSystem:
    equations: tuple[tuple[str, Formula], ...]

    def __post_init__(self):
        names = [x for x, _ in self.equations]
        if len(set(names)) != len(names):
            raise ValueError("equation variables must be distinct")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.equations)

    def __getitem__(self, x: str) -> Formula:
        for y, f in self.equations:
            if y == x:
                return f
        raise KeyError(x)

    def __len__(self) -> int:
        return len(self.equations)

    def is_closed(self) -> bool:
        bound = set(self.variables)
        return all(free_vars(f) <= bound for _, f in self.equations)

    def move_first(self, x: str) -> "EquationSystem":
        self[x]
        return EquationSystem(
            tuple(e for e in self.equations if e[0] == x)
            + tuple(e for e in self.equations if e[0] != x)
        )

    def format(self) -> str:
        return "\n".join(f"{x} = {show(f)}" for x, f in self.equations)


def parse_system(text: str) -> EquationSystem:
    """Read the ``X = phi`` per-line format written by :meth:`EquationSystem.format`."""
    eqs = []
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_']*)\s*=(.*)$", line)
        if m is None:
            raise ValueError(f"not an equation: {line!r}")
        eqs.append((m.group(1), parse(m.group(2), mode="mu")))
    return EquationSystem(tuple(eqs))


def _var_name(p: Plts, s: int) -> str:
    return f"X_{p.states[s]}"


def characteristic_system(p: Plts) -> EquationSystem:
    """One equation per state: its moves as diamonds, and boxes closing off the rest."""

    def x_dist(d: Dist) -> DistFormula:
        return DistFormula(tuple((q, Var(_var_name(p, s))) for s, q in d.items()))

    eqs = []
    for s in range(p.n_states):
        diamonds = [
            Diamond(p.actions[a], x_dist(d)) for a, d in p.moves(s)
        ]
        boxes = []
        for a in range(p.n_actions):
            opts = [x_dist(d) for d in p.der(s, a)]
            if not opts:
                psi = DistFormula(((1, Bot()),))
            elif len(opts) == 1:
                psi = opts[0]
            else:
                psi = DistOr(tuple(opts))
            boxes.append(Box(p.actions[a], psi))
        eqs.append((_var_name(p, s), And(conj(diamonds), conj(boxes))))
    return EquationSystem(tuple(eqs))


def greatest_solution(p: Plts, e: EquationSystem) -> dict[str, frozenset[int]]:
    """Descend from every variable bound to all states, updating all equations at once."""
    ev = Evaluator(p)
    env = {x: ev.every for x in e.variables}
    while True:
        nxt = {x: ev.states(f, env) for x, f in e.equations}
        if nxt == env:
            return env
        env = nxt


# ---------------------------------------------------- rewriting formulae


def _and(left: Formula, right: Formula) -> Formula:
    if isinstance(left, Top):
        return right
    if isinstance(right, Top):
        return left
    return And(left, right)


def _or(left: Formula, right: Formula) -> Formula:
    if isinstance(left, Bot):
        return right
    if isinstance(right, Bot):
        return left
    return Or(left, right)


def _nu(x: str, body: Formula) -> Formula:
    return body if x not in free_vars(body) else Nu(x, body)


def _rebuild(node: Formula, fn) -> Formula:
    if isinstance(node, (Top, Bot, Var)):
        return node
    if isinstance(node, And):
        return _and(fn(node.left), fn(node.right))
    if isinstance(node, Or):
        return _or(fn(node.left), fn(node.right))
    if isinstance(node, Nu):
        return _nu(node.var, fn(node.body))
    if isinstance(node, Mu):
        return Mu(node.var, fn(node.body))
    if isinstance(node, (Diamond, Box)):
        return type(node)(node.action, fn(node.psi))
    if isinstance(node, DistFormula):
        return DistFormula(tuple((q, fn(g)) for q, g in node.parts))
    if isinstance(node, DistOr):
        return DistOr(tuple(fn(o) for o in node.options))
    raise TypeError(f"{type(node).__name__} is not a mu-calculus formula")


def simplify(f: Formula) -> Formula:
    """Drop ``tt`` conjuncts, ``ff`` disjuncts and vacuous ``nu`` binders."""
    memo: dict[Formula, Formula] = {}

    def go(node: Formula) -> Formula:
        if node not in memo:
            memo[node] = _rebuild(node, go)
        return memo[node]

    return go(f)


def substitute(f: Formula, x: str, g: Formula) -> Formula:
    """``f[g/x]`` without capturing free variables of ``g``; also simplifies."""
    g_free = free_vars(g)
    memo: dict[Formula, Formula] = {}

    def go(node: Formula) -> Formula:
        if x not in free_vars(node):
            return node
        if node in memo:
            return memo[node]
        if isinstance(node, Var):
            out = g
        elif isinstance(node, (Mu, Nu)) and node.var in g_free:
            taken = g_free | _all_names(node.body) | {x}
            y = fresh_name(node.var, set(taken))
            body = substitute(node.body, node.var, Var(y))
            out = _rebuild(type(node)(y, body), go)
        else:
            out = _rebuild(node, go)
        memo[node] = out
        return out

    return go(f)


def rule1(e: EquationSystem) -> EquationSystem:
    """Close the last equation: ``X_n = nu X_n. phi_n``."""
    *rest, (x, f) = e.equations
    return EquationSystem((*rest, (x, _nu(x, f))))


def rule2(e: EquationSystem) -> EquationSystem:
    """Substitute the last right-hand side for ``X_n`` in the others."""
    *rest, (x, f) = e.equations
    return EquationSystem(tuple((y, substitute(g, x, f)) for y, g in rest) + ((x, f),))


def rule3(e: EquationSystem) -> EquationSystem:
    """Drop the last equation once its variable occurs free nowhere."""
    *rest, (x, f) = e.equations
    if any(x in free_vars(g) for _, g in e.equations):
        raise ValueError(f"{x} still occurs free; rule 3 does not apply")
    return EquationSystem(tuple(rest))


def char_formula(e: EquationSystem, x: str, budget: int | None = None) -> Formula:
    """Closed formula denoting ``x`` in the greatest solution of ``e``."""
    budget = node_budget() if budget is None else budget
    e = e.move_first(x)
    e = EquationSystem(tuple((y, simplify(f)) for y, f in e.equations))
    while True:
        e = rule1(e)
        if len(e) == 1:
            return e.equations[0][1]
        e = rule2(e)
        size = dag_size(conj(f for _, f in e.equations))
        if size > budget:
            raise BudgetExceeded(size, budget)
        e = rule3(e)


def characteristic_formula(p: Plts, s: int | str, budget: int | None = None) -> Formula:
    return char_formula(characteristic_system(p), _var_name(p, p.state(s)), budget)


def characteristic_class(p: Plts, s: int | str, budget: int | None = None) -> frozenset[int]:
    """States satisfying the characteristic formula of ``s``."""
    return Evaluator(p).states(characteristic_formula(p, s, budget), {})


def characteristic_check(p: Plts, s: int | str, t: int | str) -> bool:
    return p.state(t) in characteristic_class(p, s)
