"""Exact rational treatment of the scaling-exponent system.

Scalings: a0/R0 ~ Y^(1/2 - d), a0/ell ~ Y^(b + 1/2), t ~ Y^tau.
Every inequality is written as a linear form L(d, b, tau) + c compared with 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as Fr
from itertools import combinations
from typing import Optional

Q = Fr


def _q(x) -> Fr:
    return x if isinstance(x, Fr) else Fr(x).limit_denominator() if isinstance(x, float) else Fr(x)


@dataclass(frozen=True)
class ExponentTriple:
    d: Fr
    b: Fr
    tau: Fr

    def __post_init__(self):
        for name in ("d", "b", "tau"):
            object.__setattr__(self, name, _q(getattr(self, name)))

    @property
    def valid(self) -> bool:
        """Standing assumptions: all positive and d < 1/4."""
        return self.d > 0 and self.b > 0 and self.tau > 0 and self.d < Fr(1, 4)

    @property
    def nu0(self) -> Fr:
        return Fr(1, 2) - 2 * self.b - 3 * self.d

    @property
    def mu0(self) -> Fr:
        return Fr(1, 2) + Fr(13, 2) * self.b + Fr(3, 2) * self.d

    @property
    def alpha1(self) -> Fr:
        return Fr(3, 4) - Fr(9, 2) * self.b - 6 * self.d

    @property
    def d1_exponent(self) -> Fr:
        return Fr(1, 2) - Fr(7, 2) * self.b - Fr(9, 2) * self.d

    def as_tuple(self):
        return (self.d, self.b, self.tau)


@dataclass(frozen=True)
class Constraint:
    """coef . (d, b, tau) + const > 0 (strict)."""
    label: str
    group: str
    coef: tuple
    const: Fr

    def value(self, e: ExponentTriple) -> Fr:
        return sum(c * x for c, x in zip(self.coef, e.as_tuple())) + self.const

    def holds(self, e: ExponentTriple) -> bool:
        return self.value(e) > 0


def _c(label, group, cd, cb, ct, const):
    return Constraint(label, group, (Fr(cd), Fr(cb), Fr(ct)), Fr(const))


# the summarized system
SUMMARY = [
    _c("2b+d>6tau", "summary", 1, 2, -6, 0),
    _c("tau>d", "summary", -1, 0, 1, 0),
    _c("1/6>3b+4d", "summary", -4, -3, 0, Fr(1, 6)),
]
TERM_BOUNDS = [       # conditions under which the term bounds are valid
    _c("2b-d>tau", "term_bounds", -1, 2, -1, 0),
    _c("tau>d", "term_bounds", -1, 0, 1, 0),
    _c("1/6>b+d", "term_bounds", -1, -1, 0, Fr(1, 6)),
    _c("b+d>tau", "term_bounds", 1, 1, -1, 0),
]
OTHERS = [
    _c("2b+d>6tau", "quadratic_bound", 1, 2, -6, 0),
    _c("alpha1>1/2", "improved_bound", -6, Fr(-9, 2), 0, Fr(1, 4)),
    _c("nu0>0", "apriori", -3, -2, 0, Fr(1, 2)),
    _c("3b+3d<1/2", "remark", -3, -3, 0, Fr(1, 2)),
    _c("2b+d>tau", "scalings_item4", 1, 2, -1, 0),
    _c("d<1/6", "scalings_item1", -1, 0, 0, Fr(1, 6)),
]
POSITIVITY = [
    _c("d>0", "positivity", 1, 0, 0, 0),
    _c("b>0", "positivity", 0, 1, 0, 0),
    _c("tau>0", "positivity", 0, 0, 1, 0),
]
ALL_CONSTRAINTS = SUMMARY + TERM_BOUNDS + OTHERS


@dataclass
class ExponentCheck:
    triple: ExponentTriple
    results: dict                    # label@group -> (value, holds)
    summary_ok: bool
    all_ok: bool
    binding_term_bound: str          # the tighter of 2b-d>tau and 2b+d>tau
    implication_counterexamples: list = field(default_factory=list)


def check_exponents(e: ExponentTriple, verify_implication: bool = True) -> ExponentCheck:
    results = {}
    for c in POSITIVITY + ALL_CONSTRAINTS:
        v = c.value(e)
        results[f"{c.label}@{c.group}"] = (v, v > 0)
    summary_ok = all(c.holds(e) for c in POSITIVITY + SUMMARY) and e.d < Fr(1, 4)
    all_ok = summary_ok and all(c.holds(e) for c in ALL_CONSTRAINTS)
    minus = TERM_BOUNDS[0].value(e)
    plus = OTHERS[4].value(e)
    binding = "2b-d>tau" if minus <= plus else "2b+d>tau"
    cex = implication_counterexamples() if verify_implication else []
    return ExponentCheck(e, results, summary_ok, all_ok, binding, cex)


# ---------------------------------------------------------------- exact LP

def _solve3(rows, rhs) -> Optional[tuple]:
    """Exact Gauss-Jordan solve of a 3x3 system; None if singular."""
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    n = 3
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [x / pv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[col])]
    return tuple(m[i][n] for i in range(n))


def polytope_vertices(constraints) -> list[tuple]:
    """Vertices of {x : coef.x + const >= 0 for all constraints} by exact enumeration."""
    verts = set()
    for trio in combinations(constraints, 3):
        x = _solve3([c.coef for c in trio], [-c.const for c in trio])
        if x is None:
            continue
        if all(sum(a * b for a, b in zip(c.coef, x)) + c.const >= 0 for c in constraints):
            verts.add(x)
    return sorted(verts)


CLOSED_SYSTEM = SUMMARY + POSITIVITY


def implication_counterexamples() -> list:
    """Constraints not implied by the summarized system plus positivity.

    A linear form that is >= 0 at every vertex of the closed polytope is > 0 on its
    interior unless it vanishes identically; a negative vertex value yields interior
    counterexamples after a small inward shift.
    """
    verts = polytope_vertices(CLOSED_SYSTEM)
    bad = []
    for c in ALL_CONSTRAINTS:
        worst = min(sum(a * b for a, b in zip(c.coef, v)) + c.const for v in verts)
        if worst < 0:
            bad.append((c.label, c.group, worst))
    return bad


@dataclass
class MaxDResult:
    d_max: Fr
    vertex: tuple                # (d, b, tau) attaining the supremum on the closure
    certificate: dict            # multipliers of the eliminating combination
    elimination_value: Fr        # d bound from elimination


def max_feasible_d() -> MaxDResult:
    """sup{d : exists b, tau with the summarized system strict}.

    Elimination: tau > d and 2b + d > 6 tau give 2b > 5d; then
    3 (2b > 5d) + 2 (1/6 > 3b + 4d) gives 1/3 > 23 d, i.e. d < 1/69.
    """
    # closed-polytope LP: maximize d over the vertices
    verts = polytope_vertices(CLOSED_SYSTEM)
    best = max(verts, key=lambda v: v[0])
    # elimination certificate with explicit multipliers
    # 6*(tau - d) + (2b + d - 6 tau) = 2b - 5d ; 3*(2b - 5d) + 2*(1/6 - 3b - 4d) = 1/3 - 23 d
    mult = {"tau>d": Fr(18), "2b+d>6tau": Fr(3), "1/6>3b+4d": Fr(2)}
    combo_coef = [Fr(0)] * 3
    combo_const = Fr(0)
    for c in SUMMARY:
        m = mult[c.label]
        combo_coef = [x + m * y for x, y in zip(combo_coef, c.coef)]
        combo_const += m * c.const
    assert combo_coef[1] == 0 and combo_coef[2] == 0 and combo_coef[0] < 0
    elim = combo_const / -combo_coef[0]
    if elim != best[0]:
        raise AssertionError(f"LP optimum {best[0]} disagrees with elimination {elim}")
    return MaxDResult(best[0], best, mult, elim)


def witness(d) -> ExponentTriple:
    """A strictly feasible (d, b, tau) for any rational 0 < d < 1/69."""
    d = _q(d)
    if not 0 < d < Fr(1, 69):
        raise ValueError(f"no witness exists for d = {d}")
    # b sits midway between its lower bound 5d/2 and upper bound (1/6 - 4d)/3,
    # tau midway between d and (2b + d)/6
    b = (Fr(5, 2) * d + (Fr(1, 6) - 4 * d) / 3) / 2
    tau = (d + (2 * b + d) / 6) / 2
    e = ExponentTriple(d, b, tau)
    assert check_exponents(e, verify_implication=False).summary_ok
    return e


def lp_vertex_grid(d) -> list[ExponentTriple]:
    """Vertices of the closed (b, tau) polygon at fixed d, plus their pairwise midpoints."""
    d = _q(d)
    fix = [_c("d=", "fix", 1, 0, 0, -d), _c("d=", "fix", -1, 0, 0, d)]
    verts = polytope_vertices(CLOSED_SYSTEM + fix)
    pts = [ExponentTriple(*v) for v in verts]
    for u, v in combinations(verts, 2):
        pts.append(ExponentTriple(*[(a + b) / 2 for a, b in zip(u, v)]))
    return pts


# ---------------------------------------------------------------- error budget

@dataclass
class BudgetEntry:
    label: str
    exponent: Fr
    threshold: Fr
    dominated: bool
    magnitude: Optional[float] = None    # Y^exponent when Y is given


@dataclass
class ErrorBudget:
    nu0: Fr
    mu0: Fr
    alpha1: Fr
    entries: list
    Y: Optional[float] = None

    @property
    def all_dominated(self) -> bool:
        return all(e.dominated for e in self.entries)

    def entry(self, label: str) -> BudgetEntry:
        return next(e for e in self.entries if e.label == label)


def error_budget(e: ExponentTriple, Y: Optional[float] = None) -> ErrorBudget:
    if Y is not None and not 0 < Y < 1:
        raise ValueError("Y must lie in (0, 1)")
    half, zero = Fr(1, 2), Fr(0)
    rows = [
        ("sliding_loss", 2 * e.b - e.d - e.tau, zero),        # omega(t) R/(2 ell) vs rho a0 sqrt(Y)
        ("gamma_replacement", e.tau - e.d, zero),             # t a0/R0 vs sqrt(Y)
        ("range_replacement", 2 * e.b + e.d - e.tau, zero),   # a0 (1/R - 1/R0) vs sqrt(Y)
        ("box_vs_range", e.b + e.d - e.tau, zero),            # ell t / R0 -> infinity
        ("apriori_depletion", e.nu0, zero),
        ("d1", e.d1_exponent, zero),
        ("d2", e.nu0, zero),
        ("quadratic_cutoff", 2 * e.b + e.d - 6 * e.tau, zero),
        ("localization_loss", e.mu0, half),
        ("improved_bound", e.alpha1, half),
    ]
    entries = [BudgetEntry(lab, ex, th, ex > th, None if Y is None else float(Y) ** float(ex))
               for lab, ex, th in rows]
    return ErrorBudget(e.nu0, e.mu0, e.alpha1, entries, Y)
