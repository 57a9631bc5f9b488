"""Iterated Lie derivatives and the derivative-tower obstruction map.

For a vector field ``X`` and scalar observable ``F`` on an open set of R^n,
the tower map collects the first ``m`` time-derivatives of ``F`` along the
flow of ``X`` at a point ``z``::

    Psi(z) = (L_X F(z), L_X^2 F(z), ..., L_X^m F(z)),
    L_X F = sum_i (dF/dz_i) * X^i.

``Psi(z) = 0`` is the obstruction to ``F`` being constant along the orbit
through ``z`` (to order ``m``).  Everything runs on exact truncated jet
arithmetic; the only finite differencing is the Jacobian of the tower with
respect to the field's own Taylor coefficients, which is cross-checked
against closed-form structural entries: in partial-derivative coordinates,

    dPsi_k / dF_{j..j}   = (X^j(z))**k          (k repetitions),
    dPsi_k / dX^i_{j..j} = F_i(z) (X^j(z))**(k-1)   (k-1 repetitions),

because the highest-order partials enter each tower entry linearly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CombinabilityError,
    DegreeDeficitError,
    InternalConsistencyError,
)
from .jet_algebra import (
    JetField,
    TruncatedJet,
    jet_add,
    jet_from_samples,
    jet_mul,
    jet_partial,
    jet_truncate,
    _space,
)

__all__ = [
    "SaariVector",
    "RankReport",
    "JacobianResult",
    "ObstructionSample",
    "lie_derivative",
    "psi_tower",
    "dpsi_wrt_F",
    "dpsi_wrt_X",
    "obstruction_at",
    "default_tower_order",
    "RANK_THRESHOLD",
    "WRT_X_STEP_SCALE",
    "STRUCTURAL_TOL",
]

#: Relative singular-value cutoff for numerical rank.
RANK_THRESHOLD = 1e-8
#: Finite-difference step scale for dpsi_wrt_X.
WRT_X_STEP_SCALE = 1e-5
#: Allowed relative deviation of finite-difference entries from the
#: closed-form structural entries before the Jacobian is rejected.
STRUCTURAL_TOL = 1e-6


def default_tower_order(n: int) -> int:
    """Default tower order for an n-dimensional phase space."""
    return n + 1


@dataclass(frozen=True)
class SaariVector:
    """The tower values ``(L_X F(z), ..., L_X^m F(z))``."""

    values: np.ndarray
    order: int
    base_point: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, float)
        base = np.asarray(self.base_point, float)
        if vals.shape != (self.order,):
            raise ValueError(f"tower of order {self.order} needs {self.order} values")
        vals.flags.writeable = False
        base.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "base_point", base)

    @property
    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_json_dict(self) -> dict:
        return {
            "order": self.order,
            "base_point": [float(x) for x in self.base_point],
            "values": [float(v) for v in self.values],
            "norm_inf": self.norm_inf,
        }


@dataclass(frozen=True)
class RankReport:
    """SVD-based rank diagnostic for a tower Jacobian."""

    singular_values: np.ndarray
    numerical_rank: int
    threshold: float
    full_rank_expected: int
    submersion: bool

    def __post_init__(self):
        sv = np.asarray(self.singular_values, float)
        sv.flags.writeable = False
        object.__setattr__(self, "singular_values", sv)

    def to_json_dict(self) -> dict:
        return {
            "singular_values": [float(s) for s in self.singular_values],
            "numerical_rank": int(self.numerical_rank),
            "threshold": float(self.threshold),
            "full_rank_expected": int(self.full_rank_expected),
            "submersion": bool(self.submersion),
        }


def _rank_report(matrix: np.ndarray, full_rank_expected: int,
                 threshold: float) -> RankReport:
    sv = np.linalg.svd(matrix, compute_uv=False)
    sv = np.sort(sv)[::-1]
    top = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > threshold * top)) if top > 0.0 else 0
    return RankReport(
        singular_values=sv,
        numerical_rank=rank,
        threshold=threshold,
        full_rank_expected=full_rank_expected,
        submersion=rank == full_rank_expected,
    )


@dataclass(frozen=True)
class JacobianResult:
    """A tower Jacobian with its rank diagnostic and context norms.

    ``matrix`` rows are tower entries 1..m; columns are jet coefficients in
    partial-derivative coordinates (graded-lex order; for the field Jacobian,
    component index varies fastest within each multi-index).
    """

    matrix: np.ndarray
    rank_report: RankReport
    x_norm: float
    grad_f_norm: float | None = None
    structural_deviation: float | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, float)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def to_json_dict(self) -> dict:
        out = {
            "rank_report": self.rank_report.to_json_dict(),
            "rows": int(self.matrix.shape[0]),
            "cols": int(self.matrix.shape[1]),
            "x_norm": float(self.x_norm),
        }
        if self.grad_f_norm is not None:
            out["grad_f_norm"] = float(self.grad_f_norm)
        if self.structural_deviation is not None:
            out["structural_deviation"] = float(self.structural_deviation)
        return out


@dataclass(frozen=True)
class ObstructionSample:
    """Tower evaluation at one phase point with exclusion flags."""

    z: np.ndarray
    psi: SaariVector
    norm_inf: float
    is_near_equilibrium: bool
    is_near_F_critical: bool
    tol_eq: float
    tol_crit: float

    def __post_init__(self):
        z = np.asarray(self.z, float)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def excluded(self) -> bool:
        return self.is_near_equilibrium or self.is_near_F_critical

    def to_json_dict(self) -> dict:
        return {
            "z": [float(x) for x in self.z],
            "psi": [float(v) for v in self.psi.values],
            "norm_inf": float(self.norm_inf),
            "is_near_equilibrium": bool(self.is_near_equilibrium),
            "is_near_F_critical": bool(self.is_near_F_critical),
            "tol_eq": float(self.tol_eq),
            "tol_crit": float(self.tol_crit),
        }


def lie_derivative(f: TruncatedJet, x: JetField) -> TruncatedJet:
    """``L_X F = sum_i (dF/dz_i) X^i`` as a jet one degree lower than ``f``.

    A degree-0 observable carries no derivative information and maps to the
    zero jet of degree 0.
    """
    if x.dim != f.dim:
        raise CombinabilityError(f"field dim {x.dim} != jet dim {f.dim}")
    if not np.array_equal(x.base_point, f.base_point):
        raise CombinabilityError("field and observable expanded at different points")
    if f.degree == 0:
        return TruncatedJet.zero(f.dim, 0, f.base_point)
    if x.degree < f.degree - 1:
        raise DegreeDeficitError(
            f"field degree {x.degree} cannot support a degree-{f.degree} observable"
        )
    out = None
    for i in range(f.dim):
        term = jet_mul(jet_partial(f, i), jet_truncate(x.components[i], f.degree - 1))
        out = term if out is None else jet_add(out, term)
    return out


def psi_tower(f: TruncatedJet, x: JetField, m: int) -> SaariVector:
    """First ``m`` iterated Lie derivatives of ``f`` along ``x`` at the base point."""
    if m < 1:
        raise ValueError("tower order must be >= 1")
    if f.degree < m:
        raise DegreeDeficitError(
            f"observable jet degree {f.degree} < tower order {m}"
        )
    if x.degree < m - 1:
        raise DegreeDeficitError(
            f"field jet degree {x.degree} < required {m - 1} for tower order {m}"
        )
    g = jet_truncate(f, m)
    values = np.empty(m)
    for k in range(m):
        g = lie_derivative(g, x)
        values[k] = g.value
    return SaariVector(values=values, order=m, base_point=f.base_point)


def dpsi_wrt_F(
    x: JetField,
    z=None,
    m: int | None = None,
    jet_degree: int | None = None,
    threshold: float = RANK_THRESHOLD,
) -> JacobianResult:
    """Exact Jacobian of the tower with respect to the observable's jet.

    The tower is linear in ``F``, so the matrix is assembled by running
    :func:`psi_tower` on each monomial basis jet (constant term excluded —
    constants never move the tower).  Columns are in partial-derivative
    coordinates; expected full rank is ``m``.
    """
    if m is None:
        m = default_tower_order(x.dim)
    if jet_degree is None:
        jet_degree = m
    if jet_degree < m:
        raise DegreeDeficitError(f"jet_degree {jet_degree} < tower order {m}")
    if z is not None and not np.array_equal(np.asarray(z, float), x.base_point):
        raise CombinabilityError("z differs from the field's base point")
    sp = _space(x.dim, jet_degree)
    cols = sp.size - 1
    matrix = np.empty((m, cols))
    for idx in range(1, sp.size):
        coeffs = np.zeros(sp.size)
        coeffs[idx] = 1.0 / sp.factorials[idx]
        basis = TruncatedJet(x.dim, jet_degree, x.base_point, coeffs)
        matrix[:, idx - 1] = psi_tower(basis, x, m).values
    report = _rank_report(matrix, full_rank_expected=m, threshold=threshold)
    return JacobianResult(
        matrix=matrix,
        rank_report=report,
        x_norm=float(np.linalg.norm(x.values())),
    )


def _tower_tangent(f: TruncatedJet, x: JetField, m: int, comp: int,
                   dot_coeffs: np.ndarray) -> np.ndarray:
    """Directional derivative of the tower along a perturbation of X^comp."""
    n = f.dim
    g = jet_truncate(f, m)
    gdot = TruncatedJet.zero(n, m, f.base_point)
    xdot = TruncatedJet(n, m - 1 if m > 1 else 0, f.base_point,
                        dot_coeffs[: _space(n, max(m - 1, 0)).size])
    out = np.empty(m)
    for k in range(m):
        deg = g.degree - 1
        new_gdot = None
        for i in range(n):
            term = jet_mul(jet_partial(gdot, i), jet_truncate(x.components[i], deg))
            new_gdot = term if new_gdot is None else jet_add(new_gdot, term)
        tang = jet_mul(jet_partial(g, comp), jet_truncate(xdot, deg))
        new_gdot = jet_add(new_gdot, tang)
        g = lie_derivative(g, x)
        gdot = new_gdot
        out[k] = gdot.value
    return out


def dpsi_wrt_X(
    f: TruncatedJet,
    x: JetField,
    m: int | None = None,
    method: str = "fd",
    step_scale: float = WRT_X_STEP_SCALE,
    threshold: float = RANK_THRESHOLD,
    structural_tol: float = STRUCTURAL_TOL,
) -> JacobianResult:
    """Jacobian of the tower with respect to the field's jet coefficients.

    Coefficients of orders ``0..m-1`` of every component enter, in
    partial-derivative coordinates; columns are ordered by multi-index
    (graded-lex), component fastest.  ``method="fd"`` uses central differences
    with step ``step_scale * max(1, |coefficient|)`` per coefficient;
    ``method="exact"`` propagates tangents through the tower (the tower is
    polynomial in the coefficients, so this is exact to roundoff).

    Either way the entries that the closed form pins — in row ``k``, the
    columns of the pure-power coefficients ``X^i_{j..j}`` with ``k-1``
    repetitions — are compared against ``F_i(z) (X^j(z))**(k-1)``; a relative
    deviation beyond ``structural_tol`` raises
    :class:`InternalConsistencyError`.
    """
    if m is None:
        m = default_tower_order(x.dim)
    if f.degree < m:
        raise DegreeDeficitError(f"observable degree {f.degree} < tower order {m}")
    if x.degree < m - 1:
        raise DegreeDeficitError(f"field degree {x.degree} < {m - 1}")
    if method not in ("fd", "exact"):
        raise ValueError(f"unknown method {method!r}")
    n = x.dim
    xdeg = max(m - 1, 0)
    x_work = x.truncated(xdeg)
    spx = _space(n, xdeg)
    f_work = jet_truncate(f, m)
    cols = n * spx.size
    matrix = np.empty((m, cols))
    if method == "fd":
        base_tables = [c.coeffs.copy() for c in x_work.components]
        for t in range(spx.size):
            fact = float(spx.factorials[t])
            for i in range(n):
                partial_value = base_tables[i][t] * fact
                h = step_scale * max(1.0, abs(partial_value))
                dc = h / fact
                plus = [tbl if j != i else _bump(tbl, t, dc)
                        for j, tbl in enumerate(base_tables)]
                minus = [tbl if j != i else _bump(tbl, t, -dc)
                         for j, tbl in enumerate(base_tables)]
                xp = JetField(tuple(
                    TruncatedJet(n, xdeg, x.base_point, tb) for tb in plus))
                xm = JetField(tuple(
                    TruncatedJet(n, xdeg, x.base_point, tb) for tb in minus))
                col = (psi_tower(f_work, xp, m).values
                       - psi_tower(f_work, xm, m).values) / (2.0 * h)
                matrix[:, t * n + i] = col
    else:
        for t in range(spx.size):
            fact = float(spx.factorials[t])
            dot = np.zeros(_space(n, xdeg).size)
            dot[t] = 1.0 / fact
            for i in range(n):
                matrix[:, t * n + i] = _tower_tangent(f_work, x_work, m, i, dot)

    x_vals = x_work.values()
    grad_f = f_work.gradient() if f_work.degree >= 1 else np.zeros(n)
    deviation = _structural_check(matrix, spx, x_vals, grad_f, m, n)
    if deviation > structural_tol:
        raise InternalConsistencyError(
            f"tower Jacobian deviates from structural entries by {deviation:.3e} "
            f"(tolerance {structural_tol:.1e})"
        )
    report = _rank_report(matrix, full_rank_expected=m, threshold=threshold)
    return JacobianResult(
        matrix=matrix,
        rank_report=report,
        x_norm=float(np.linalg.norm(x_vals)),
        grad_f_norm=float(np.linalg.norm(grad_f)),
        structural_deviation=float(deviation),
    )


def _bump(table: np.ndarray, idx: int, delta: float) -> np.ndarray:
    out = table.copy()
    out[idx] += delta
    return out


def _structural_check(matrix, spx, x_vals, grad_f, m, n) -> float:
    """Max relative deviation of the closed-form entries of the field Jacobian."""
    worst = 0.0
    for k in range(1, m + 1):
        reps = k - 1
        if reps > spx.degree:
            break
        for j in range(n):
            alpha = [0] * n
            alpha[j] = reps
            t = spx.index[tuple(alpha)]
            base = x_vals[j] ** reps
            for i in range(n):
                exact = grad_f[i] * base
                got = matrix[k - 1, t * n + i]
                dev = abs(got - exact) / max(1.0, abs(exact))
                worst = max(worst, dev)
            if reps == 0:
                break  # alpha is the same for every j at order zero
    return worst


def obstruction_at(
    F,
    X,
    z,
    m: int,
    tol_eq: float = 1e-9,
    tol_crit: float = 1e-9,
) -> ObstructionSample:
    """Evaluate the tower at ``z`` from observable/field handles.

    Handles exposing ``jet`` / ``jet_field`` contribute analytic jets;
    anything else is sampled by finite differences.  The first tower entry is
    cross-checked against an independent ``<grad F(z), X(z)>`` evaluation
    whenever the observable carries an analytic gradient.
    """
    z = np.asarray(z, float)
    n = z.size
    if hasattr(F, "jet"):
        fj = F.jet(z, m)
    else:
        fj = jet_from_samples(F, z, m)
    if hasattr(X, "jet_field"):
        xf = X.jet_field(z, max(m - 1, 0))
    else:
        comps = tuple(
            jet_from_samples(lambda w, i=i: float(np.asarray(X(w))[i]), z,
                             max(m - 1, 0))
            for i in range(n)
        )
        xf = JetField(comps)
    psi = psi_tower(fj, xf, m)
    x_val = np.asarray(X(z), float)
    grad_f = fj.gradient() if fj.degree >= 1 else np.zeros(n)
    if hasattr(F, "grad"):
        dot = float(np.dot(np.asarray(F.grad(z), float), x_val))
        scale = max(1.0, abs(psi.values[0]), abs(dot))
        if abs(psi.values[0] - dot) > 1e-12 * scale:
            raise InternalConsistencyError(
                f"first tower entry {psi.values[0]!r} disagrees with "
                f"<grad F, X> = {dot!r}"
            )
    return ObstructionSample(
        z=z,
        psi=psi,
        norm_inf=psi.norm_inf,
        is_near_equilibrium=bool(np.linalg.norm(x_val) < tol_eq),
        is_near_F_critical=bool(np.linalg.norm(grad_f) < tol_crit),
        tol_eq=tol_eq,
        tol_crit=tol_crit,
    )
