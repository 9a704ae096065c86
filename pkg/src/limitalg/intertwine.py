"""Two-system crossover diagrams and the intertwining correction engine.

The exact engine walks the zigzag once, standardizing each crossover by a
monomial unitary chosen so every already-corrected triangle stays exactly
commuting. The approximate engine first certifies each numeric crossover as
regular, gates the original triangle residuals against the word-length
thresholds, aligns the resulting standard forms combinatorially, and then
defers to the exact engine; witnesses against the original numeric maps are
returned in factored form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DigraphAlgebra
from .detect import is_regular, threshold_constant
from .errors import (CensusMismatch, NotRegular, ResidualTooLarge,
                     SourceTargetMismatch, TriangleNotCommuting, UsageError)
from .homs import (NumericStarMap, StandardRegularMap, Unitary,
                   apply_to_unitary, compose, conjugate_standard,
                   map_distance, numeric_compose, operator_norm, same_action,
                   strictify, to_numeric)
from .conjugacy import restandardize_triangle, standard_witness


@dataclass(frozen=True)
class DirectSystem:
    """Stages joined by standard regular connectors.

    periodic declares that the final connector repeats forever; it must then
    be an endomorphism (equal source and target), which is what makes the
    repetition well formed.
    """

    stages: tuple
    connectors: tuple
    periodic: bool = False

    def __post_init__(self):
        stages = tuple(self.stages)
        connectors = tuple(self.connectors)
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "connectors", connectors)
        if not stages:
            raise ValueError("a system needs at least one stage")
        if len(connectors) != len(stages) - 1:
            raise ValueError("need exactly one connector between stages")
        for k, c in enumerate(connectors):
            if not isinstance(c, StandardRegularMap):
                raise UsageError(f"connector {k} is not standard regular")
            if c.source != stages[k] or c.target != stages[k + 1]:
                raise SourceTargetMismatch(
                    f"connector {k} does not join stages {k} and {k + 1}")
        if self.periodic:
            if not connectors:
                raise ValueError("a periodic system needs a connector")
            last = connectors[-1]
            if last.source != last.target:
                raise ValueError(
                    "periodic repetition needs an endomorphic final connector")

    def stage_algebra(self, k: int) -> DigraphAlgebra:
        if k < len(self.stages):
            return self.stages[k]
        if self.periodic:
            return self.stages[-1]
        raise IndexError(k)

    def connector(self, k: int) -> StandardRegularMap:
        if k < len(self.connectors):
            return self.connectors[k]
        if self.periodic and self.connectors:
            return self.connectors[-1]
        raise IndexError(k)

    def available_stages(self) -> int:
        return len(self.stages)


def _as_numeric(m) -> NumericStarMap:
    return m if isinstance(m, NumericStarMap) else to_numeric(m)


@dataclass(frozen=True)
class CrossoverDiagram:
    """Zigzag between two systems: alphas go down, betas come back up.

    alphas[k] maps top stage k to bottom stage k; betas[k] maps bottom stage
    k to top stage k+1. Top triangle k states beta_k after alpha_k equals
    the top connector k; bottom triangle k states alpha_{k+1} after beta_k
    equals the bottom connector k. budgets, when given, carries declared
    per-triangle bounds as {"top": (...), "bottom": (...)}.
    """

    top: DirectSystem
    bottom: DirectSystem
    alphas: tuple
    betas: tuple
    mode: str = "exact"
    budgets: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "betas", tuple(self.betas))
        if self.mode not in ("exact", "approximate"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if not self.alphas:
            raise ValueError("diagram needs at least one crossover")
        if len(self.betas) not in (len(self.alphas) - 1, len(self.alphas)):
            raise ValueError("betas must number alphas or one fewer")
        for k, a in enumerate(self.alphas):
            if (a.source != self.top.stage_algebra(k)
                    or a.target != self.bottom.stage_algebra(k)):
                raise SourceTargetMismatch(f"alpha {k} joins wrong stages")
        for k, b in enumerate(self.betas):
            if (b.source != self.bottom.stage_algebra(k)
                    or b.target != self.top.stage_algebra(k + 1)):
                raise SourceTargetMismatch(f"beta {k} joins wrong stages")

    def top_triangles(self) -> int:
        return len(self.betas)

    def bottom_triangles(self) -> int:
        return min(len(self.betas), len(self.alphas) - 1)

    def budget_for(self, kind: str, k: int) -> Optional[float]:
        if not self.budgets:
            return None
        row = self.budgets.get(kind)
        if row is None or k >= len(row):
            return None
        return float(row[k])


@dataclass
class DiagramReport:
    triangles: tuple   # dicts: stage, kind, residual, budget, within_budget
    masa_flags: tuple  # dicts: role, stage, preserved, witness
    total_residual: float
    exact: bool

    def as_payload(self) -> dict:
        return {"triangles": list(self.triangles),
                "masa_flags": list(self.masa_flags),
                "total_residual": self.total_residual,
                "exact": self.exact}


@dataclass
class CorrectedDiagram:
    alphas_hat: tuple
    betas_hat: tuple
    v_unitaries: tuple
    u_unitaries: tuple
    report: DiagramReport
    diagram: CrossoverDiagram
    witness_residuals: Optional[dict] = None


def _masa_flag(m, role: str, stage: int) -> dict:
    if isinstance(m, StandardRegularMap):
        return {"role": role, "stage": stage, "preserved": True}
    tol = max(m.tolerance, 1e-9)
    for i in range(1, m.source.n + 1):
        img = m.unit_image(i, i)
        off = img - np.diag(np.diag(img))
        v = operator_norm(off)
        if v > tol:
            return {"role": role, "stage": stage, "preserved": False,
                    "witness_unit": i, "off_diagonal": v}
    return {"role": role, "stage": stage, "preserved": True}


def verify_diagram(d: CrossoverDiagram) -> DiagramReport:
    """Numeric residuals and masa flags for every triangle and crossover."""
    rows = []
    total = 0.0
    for k in range(d.top_triangles()):
        lhs = numeric_compose(_as_numeric(d.betas[k]), _as_numeric(d.alphas[k]))
        r = map_distance(lhs, _as_numeric(d.top.connector(k)))
        b = d.budget_for("top", k)
        rows.append({"stage": k, "kind": "top", "residual": r, "budget": b,
                     "within_budget": None if b is None else r <= b})
        total += r
    for k in range(d.bottom_triangles()):
        lhs = numeric_compose(_as_numeric(d.alphas[k + 1]),
                              _as_numeric(d.betas[k]))
        r = map_distance(lhs, _as_numeric(d.bottom.connector(k)))
        b = d.budget_for("bottom", k)
        rows.append({"stage": k, "kind": "bottom", "residual": r, "budget": b,
                     "within_budget": None if b is None else r <= b})
        total += r
    flags = []
    for k, a in enumerate(d.alphas):
        flags.append(_masa_flag(a, "alpha", k))
    for k, b in enumerate(d.betas):
        flags.append(_masa_flag(b, "beta", k))
    exact = all(row["residual"] <= 1e-12 for row in rows)
    return DiagramReport(tuple(rows), tuple(flags), total, exact)


def exact_intertwine(d: CrossoverDiagram) -> CorrectedDiagram:
    """Correct an exactly commuting combinatorial diagram stage by stage.

    Every crossover must be a StandardRegularMap (weights allowed) and every
    triangle must commute exactly; numeric crossovers belong to the
    approximate mode. Outputs are strict standard with monomial witnesses:
    alphas_hat[k] = Ad(v[k]) alphas[k] and betas_hat[k] = Ad(u[k]) betas[k].
    """
    if d.mode != "exact":
        raise UsageError("diagram is not in exact mode")
    for m in list(d.alphas) + list(d.betas):
        if not isinstance(m, StandardRegularMap):
            raise UsageError(
                "exact mode needs combinatorial crossovers; "
                "use approximate mode for numeric maps")
    for k in range(d.top_triangles()):
        lhs = compose(d.betas[k], d.alphas[k])
        if not same_action(lhs, d.top.connector(k)):
            raise TriangleNotCommuting(
                map_distance(lhs, d.top.connector(k)), stage=k)
    for k in range(d.bottom_triangles()):
        lhs = compose(d.alphas[k + 1], d.betas[k])
        if not same_action(lhs, d.bottom.connector(k)):
            raise TriangleNotCommuting(
                map_distance(lhs, d.bottom.connector(k)), stage=k)

    a_hat = []
    b_hat = []
    vs = []
    us = []
    first, d1 = strictify(d.alphas[0])
    a_hat.append(first)
    vs.append(Unitary(d.bottom.stage_algebra(0).n, [d1]))
    for k in range(len(d.alphas)):
        if k >= len(d.betas):
            break
        v_mono = vs[k].as_monomial(d.bottom.stage_algebra(k))
        t_k = apply_to_unitary(d.betas[k], v_mono.adjoint())
        b_cur = conjugate_standard(d.betas[k], t_k)
        u_corr, b_std = restandardize_triangle(
            d.top.connector(k), a_hat[k], b_cur)
        b_hat.append(b_std)
        us.append(Unitary(d.top.stage_algebra(k + 1).n,
                          list(u_corr.factors) + [t_k]))
        if k + 1 >= len(d.alphas):
            break
        u_mono = us[k].as_monomial(d.top.stage_algebra(k + 1))
        s_k = apply_to_unitary(d.alphas[k + 1], u_mono.adjoint())
        a_cur = conjugate_standard(d.alphas[k + 1], s_k)
        v_corr, a_std = restandardize_triangle(
            d.bottom.connector(k), b_hat[k], a_cur)
        a_hat.append(a_std)
        vs.append(Unitary(d.bottom.stage_algebra(k + 1).n,
                          list(v_corr.factors) + [s_k]))

    corrected = CrossoverDiagram(d.top, d.bottom, tuple(a_hat), tuple(b_hat),
                                 mode="exact", budgets=None)
    report = verify_diagram(corrected)
    if not report.exact:
        raise AssertionError("corrected diagram failed exact verification")
    return CorrectedDiagram(tuple(a_hat), tuple(b_hat), tuple(vs), tuple(us),
                            report, corrected)


def approx_intertwine(d: CrossoverDiagram) -> CorrectedDiagram:
    """Correct an approximately commuting diagram with numeric crossovers.

    Pipeline: certify each crossover regular; gate every original triangle
    residual by the word-length constant of its source algebra (and any
    declared budget); align the certified standard forms so all triangles
    commute exactly; then run the exact engine. The returned witnesses
    conjugate the original crossovers onto the corrected strict forms, up
    to the certification residuals.
    """
    if d.mode != "approximate":
        raise UsageError("diagram is not in approximate mode")
    n_a, n_b = len(d.alphas), len(d.betas)
    alpha_n = [_as_numeric(a) for a in d.alphas]
    beta_n = [_as_numeric(b) for b in d.betas]

    a_std = []
    a_wit = []
    for k, a in enumerate(d.alphas):
        if isinstance(a, StandardRegularMap):
            a_std.append(a)
            a_wit.append(Unitary(a.target.n))
        else:
            cert = is_regular(a)
            if not cert.regular:
                raise NotRegular(reason="alpha is not regular", stage=k)
            a_std.append(cert.standard_form)
            a_wit.append(cert.unitary)
    b_std = []
    b_wit = []
    for k, b in enumerate(d.betas):
        if isinstance(b, StandardRegularMap):
            b_std.append(b)
            b_wit.append(Unitary(b.target.n))
        else:
            cert = is_regular(b)
            if not cert.regular:
                raise NotRegular(reason="beta is not regular", stage=k)
            b_std.append(cert.standard_form)
            b_wit.append(cert.unitary)

    for k in range(d.top_triangles()):
        c = threshold_constant(d.top.stage_algebra(k))
        gate = c if d.budget_for("top", k) is None else min(
            c, d.budget_for("top", k))
        r = map_distance(numeric_compose(beta_n[k], alpha_n[k]),
                         _as_numeric(d.top.connector(k)))
        if r >= gate:
            raise ResidualTooLarge(r, gate, stage=k)
    for k in range(d.bottom_triangles()):
        c = threshold_constant(d.bottom.stage_algebra(k))
        gate = c if d.budget_for("bottom", k) is None else min(
            c, d.budget_for("bottom", k))
        r = map_distance(numeric_compose(alpha_n[k + 1], beta_n[k]),
                         _as_numeric(d.bottom.connector(k)))
        if r >= gate:
            raise ResidualTooLarge(r, gate, stage=k)

    # align the standard forms so every triangle holds exactly; the gates
    # above force the class multisets to agree, so witnesses always exist
    a_fix = list(a_std)
    b_fix = list(b_std)
    tau = [None] * n_a
    sigma = [None] * n_b
    for k in range(n_b):
        got = compose(b_fix[k], a_fix[k])
        want = d.top.connector(k)
        if got.class_multiset() != want.class_multiset():
            raise CensusMismatch(stage=k, kind="top")
        sigma[k] = standard_witness(got, want)
        b_fix[k] = conjugate_standard(b_fix[k], sigma[k])
        if k + 1 < n_a:
            got2 = compose(a_fix[k + 1], b_fix[k])
            want2 = d.bottom.connector(k)
            if got2.class_multiset() != want2.class_multiset():
                raise CensusMismatch(stage=k, kind="bottom")
            tau[k + 1] = standard_witness(got2, want2)
            a_fix[k + 1] = conjugate_standard(a_fix[k + 1], tau[k + 1])

    exact = CrossoverDiagram(d.top, d.bottom, tuple(a_fix), tuple(b_fix),
                             mode="exact", budgets=None)
    out = exact_intertwine(exact)

    v_total = []
    for k in range(len(out.alphas_hat)):
        factors = list(out.v_unitaries[k].factors)
        if tau[k] is not None:
            factors.append(tau[k])
        factors.extend(a_wit[k].factors)
        v_total.append(Unitary(d.bottom.stage_algebra(k).n, factors))
    u_total = []
    for k in range(len(out.betas_hat)):
        factors = list(out.u_unitaries[k].factors)
        if sigma[k] is not None:
            factors.append(sigma[k])
        factors.extend(b_wit[k].factors)
        u_total.append(Unitary(d.top.stage_algebra(k + 1).n, factors))

    wr = {"alphas": [], "betas": []}
    for k in range(len(out.alphas_hat)):
        moved = v_total[k].then_ad(alpha_n[k])
        wr["alphas"].append(map_distance(moved, to_numeric(out.alphas_hat[k])))
    for k in range(len(out.betas_hat)):
        moved = u_total[k].then_ad(beta_n[k])
        wr["betas"].append(map_distance(moved, to_numeric(out.betas_hat[k])))

    return CorrectedDiagram(out.alphas_hat, out.betas_hat, tuple(v_total),
                            tuple(u_total), out.report, out.diagram,
                            witness_residuals=wr)
