"""Total derivatives on the jet space and reduction modulo a PDE."""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .errors import OrderOverflow
from .expr import free_jets, jet, jet_name, jet_order, to_text

#: default bound on the total order of jet coordinates produced by prolongation
DEFAULT_MAX_ORDER = 6


def _total(e, axis: int):
    e = sp.sympify(e)
    out = sp.Integer(0)
    for s in free_jets(e):
        a, b = jet_order(s)
        shifted = jet(a + 1, b) if axis == 0 else jet(a, b + 1)
        out += sp.diff(e, s) * shifted
    return out


def total_dx(e):
    """D_x: chain rule over every jet coordinate (abstract f(z) included)."""
    return _total(e, 0)


def total_dt(e):
    return _total(e, 1)


@dataclass
class EvolutionRelation:
    """``solved = rhs`` with ``solved`` a jet coordinate ``z_{x^a t^b}``.

    Every coordinate ``z_{x^p t^q}`` with ``p >= a`` and ``q >= b`` is a
    prolongation of ``solved`` and is eliminated by :meth:`reduce`.
    """

    solved: sp.Symbol
    rhs: sp.Expr
    max_order: int = DEFAULT_MAX_ORDER
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.rhs = sp.sympify(self.rhs)
        if jet_order(self.solved) is None:
            raise ValueError(f"{self.solved} is not a jet coordinate")
        bad = [s for s in free_jets(self.rhs) if self.in_family(s)]
        if bad:
            raise ValueError(f"rhs contains {', '.join(map(str, bad))}, a prolongation of {self.solved}")
        if any(sum(jet_order(s)) > self.max_order for s in free_jets(self.rhs)):
            raise OrderOverflow(f"rhs exceeds jet order bound {self.max_order}")

    @classmethod
    def parse(cls, solved: str, rhs: str, max_order: int = DEFAULT_MAX_ORDER, functions=()):
        from .parser import parse_expr

        return cls(parse_expr(solved), parse_expr(rhs, functions), max_order)

    @property
    def order(self) -> tuple[int, int]:
        return jet_order(self.solved)

    def in_family(self, s) -> bool:
        o = jet_order(s)
        if o is None:
            return False
        a0, b0 = self.order
        return o[0] >= a0 and o[1] >= b0

    def prolongation(self, a: int, b: int) -> sp.Expr:
        """Reduced value of the family member ``z_{x^a t^b}``."""
        a0, b0 = self.order
        if a < a0 or b < b0:
            raise ValueError(f"{jet_name(a, b)} is not a prolongation of {self.solved}")
        if a + b > self.max_order:
            raise OrderOverflow(
                f"prolongation {jet_name(a, b)} exceeds jet order bound {self.max_order}"
            )
        key = (a, b)
        if key not in self._cache:
            if key == (a0, b0):
                value = self.rhs
            elif a > a0:
                value = self.reduce(total_dx(self.prolongation(a - 1, b)))
            else:
                value = self.reduce(total_dt(self.prolongation(a, b - 1)))
            self._cache[key] = value
        return self._cache[key]

    def reduce(self, e) -> sp.Expr:
        """Eliminate the solved coordinate and all its prolongations from ``e``."""
        e = sp.sympify(e)
        members = [s for s in free_jets(e) if self.in_family(s)]
        if not members:
            return e
        return e.xreplace({s: self.prolongation(*jet_order(s)) for s in members})

    def residual(self) -> sp.Expr:
        """``solved - rhs`` (vanishes on solutions)."""
        return self.solved - self.rhs

    def to_dict(self) -> dict:
        return {"solved": str(self.solved), "rhs": to_text(self.rhs)}


def on_shell_reduce(e, rel: EvolutionRelation) -> sp.Expr:
    return rel.reduce(e)


def quasilinear_relation(A, B, C, max_order: int = DEFAULT_MAX_ORDER) -> EvolutionRelation:
    """``z_tt = A z_xx + B z_xt + C``."""
    return EvolutionRelation(jet(0, 2), A * jet(2, 0) + B * jet(1, 1) + C, max_order)


def free_coordinates(rel: EvolutionRelation, max_order: int | None = None) -> list[sp.Symbol]:
    """Jet coordinates up to ``max_order`` that are not eliminated by ``rel``."""
    bound = rel.max_order if max_order is None else max_order
    return [
        jet(a, n - a)
        for n in range(bound + 1)
        for a in range(n, -1, -1)
        if not rel.in_family(jet(a, n - a))
    ]
