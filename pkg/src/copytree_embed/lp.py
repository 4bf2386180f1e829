"""Small linear-program container, a HiGHS-backed solver and LP-format export."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

FEAS_TOL = 1e-7


class LPInfeasible(RuntimeError):
    pass


class LPUnbounded(RuntimeError):
    pass


class LinearProgram:
    """Minimisation LP built row by row. Rows are (coeffs, sense, rhs, name)."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.cost: list[float] = []
        self.rows: list[tuple] = []

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def var(self, name: str, lb: float = 0.0, ub: float = math.inf, cost: float = 0.0) -> int:
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.cost.append(cost)
        return len(self.names) - 1

    def add(self, coeffs: dict, sense: str, rhs: float, name: str | None = None) -> None:
        if sense not in ("<=", ">=", "=="):
            raise ValueError(f"unknown sense {sense!r}")
        coeffs = {int(k): float(v) for k, v in coeffs.items() if v != 0}
        self.rows.append((coeffs, sense, float(rhs), name or f"c{len(self.rows)}"))

    def matrices(self):
        ub_r, ub_c, ub_v, ub_b = [], [], [], []
        eq_r, eq_c, eq_v, eq_b = [], [], [], []
        for coeffs, sense, rhs, _ in self.rows:
            if sense == "==":
                k = len(eq_b)
                for j, a in coeffs.items():
                    eq_r.append(k), eq_c.append(j), eq_v.append(a)
                eq_b.append(rhs)
            else:
                sign = 1.0 if sense == "<=" else -1.0
                k = len(ub_b)
                for j, a in coeffs.items():
                    ub_r.append(k), ub_c.append(j), ub_v.append(sign * a)
                ub_b.append(sign * rhs)
        n = self.num_vars
        A_ub = coo_matrix((ub_v, (ub_r, ub_c)), shape=(len(ub_b), n)).tocsr() if ub_b else None
        A_eq = coo_matrix((eq_v, (eq_r, eq_c)), shape=(len(eq_b), n)).tocsr() if eq_b else None
        return A_ub, (np.array(ub_b) if ub_b else None), A_eq, (np.array(eq_b) if eq_b else None)

    def residuals(self, x) -> float:
        """Largest constraint or bound violation of x."""
        x = np.asarray(x, dtype=float)
        A_ub, b_ub, A_eq, b_eq = self.matrices()
        worst = 0.0
        if A_ub is not None:
            worst = max(worst, float(np.max(A_ub @ x - b_ub, initial=0.0)))
        if A_eq is not None:
            worst = max(worst, float(np.max(np.abs(A_eq @ x - b_eq), initial=0.0)))
        lb, ub = np.array(self.lb), np.array(self.ub)
        worst = max(worst, float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        return worst

    def to_lp_text(self) -> str:
        """CPLEX LP format."""

        def expr(coeffs: dict) -> str:
            out = []
            for j, a in sorted(coeffs.items()):
                mag = "" if abs(a) == 1 else f"{abs(a):.12g} "
                sign = "-" if a < 0 else "+"
                out.append(f"{sign} {mag}{self.names[j]}")
            if not out:
                return "0"
            text = " ".join(out)
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.name}", "Minimize", " obj: " + expr({j: c for j, c in enumerate(self.cost) if c})]
        lines.append("Subject To")
        op = {"<=": "<=", ">=": ">=", "==": "="}
        for coeffs, sense, rhs, name in self.rows:
            lines.append(f" {name}: {expr(coeffs)} {op[sense]} {rhs:.12g}")
        lines.append("Bounds")
        for j, name in enumerate(self.names):
            lo, hi = self.lb[j], self.ub[j]
            lo_s = "-inf" if lo == -math.inf else f"{lo:.12g}"
            hi_s = "+inf" if hi == math.inf else f"{hi:.12g}"
            lines.append(f" {lo_s} <= {name} <= {hi_s}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    names: list

    def value(self, name: str) -> float:
        return float(self.x[self.names.index(name)])


def solve_lp(lp: LinearProgram) -> LPSolution:
    if lp.num_vars == 0:
        return LPSolution(np.zeros(0), 0.0, [])
    A_ub, b_ub, A_eq, b_eq = lp.matrices()
    bounds = [(lo if lo != -math.inf else None, hi if hi != math.inf else None) for lo, hi in zip(lp.lb, lp.ub)]
    res = linprog(
        np.array(lp.cost), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if res.status == 2:
        raise LPInfeasible(f"{lp.name}: infeasible")
    if res.status == 3:
        raise LPUnbounded(f"{lp.name}: unbounded")
    if res.status != 0:
        raise RuntimeError(f"{lp.name}: solver failed ({res.message})")
    x = np.asarray(res.x, dtype=float)
    slack = lp.residuals(x)
    if slack > FEAS_TOL * max(1.0, float(np.abs(x).max(initial=0.0))):
        raise RuntimeError(f"{lp.name}: solution violates constraints by {slack:.2e}")
    return LPSolution(x, float(res.fun), list(lp.names))
