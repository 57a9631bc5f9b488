"""N-body mechanics: pairwise potentials, Hamiltonian fields, relative equilibria.

Conventions (gravitational constant G = 1 throughout):

* potential energy ``V(q) = - sum_{i<j} m_i m_j f(r_ij)`` with ``f(r) = 1/r``
  for the Newtonian variant and ``f(r) = sum_k beta_k r**alpha_k`` for general
  power laws; a perturbed variant adds a polynomial bump in the configuration
  variables;
* the phase space is ``z = (q, p)`` with flat coordinate blocks, equations of
  motion ``dq/dt = p/m`` (componentwise) and ``dp/dt = -grad V(q)``;
* the moment of inertia ``I(q) = sum_i m_i |q_i - c|**2`` is taken about the
  centre of mass ``c``; its gradient is ``2 m_i (q_i - c)`` exactly, because
  the weighted deviations sum to zero;
* a relative equilibrium is a rigidly rotating solution; its configuration
  satisfies the central-configuration balance ``grad V(q) = omega^2 M q``
  about the centre of mass.

Potential jets are exact: the squared pair distance is an explicit quadratic
jet and fractional powers go through the truncated binomial series, so the
Hamiltonian field exposes analytic jets to any degree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import NoConvergenceError, SingularityError
from .fields import PolynomialObservable, stream_rng
from .jet_algebra import (
    JetField,
    TruncatedJet,
    embed_jet,
    jet_add,
    jet_partial,
    jet_pow,
    jet_scale,
)

__all__ = [
    "COLLISION_TOL",
    "NewtonianPotential",
    "PowerLawPotential",
    "PerturbedPotential",
    "potential_from_json",
    "BodySystem",
    "PhaseState",
    "potential_value",
    "grad_potential",
    "potential_config_jet",
    "kinetic_energy",
    "hamiltonian",
    "HamiltonianField",
    "build_hamiltonian_field",
    "moment_of_inertia",
    "inertia_observable",
    "EnergyObservable",
    "energy_observable",
    "RelEqSolution",
    "releq_lagrange",
    "releq_euler",
    "releq_newton",
    "releq_trajectory",
    "find_equilibria",
]

#: Pairwise separations below this are treated as collisions.
COLLISION_TOL = 1e-8


# -- potential specifications ------------------------------------------------


@dataclass(frozen=True)
class NewtonianPotential:
    """``f(r) = 1/r``."""

    @property
    def terms(self) -> tuple[tuple[float, float], ...]:
        return ((1.0, -1.0),)

    def to_json_dict(self) -> dict:
        return {"variant": "newtonian"}


@dataclass(frozen=True)
class PowerLawPotential:
    """``f(r) = sum_k beta_k r**alpha_k`` with terms ``(beta_k, alpha_k)``."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        terms = tuple((float(b), float(a)) for b, a in self.terms)
        if not terms:
            raise ValueError("power-law potential needs at least one term")
        object.__setattr__(self, "terms", terms)

    def to_json_dict(self) -> dict:
        return {"variant": "power_law", "terms": [list(t) for t in self.terms]}


@dataclass(frozen=True)
class PerturbedPotential:
    """A base pair potential plus a polynomial bump in the configuration."""

    base: "NewtonianPotential | PowerLawPotential | PerturbedPotential"
    bump: PolynomialObservable

    def to_json_dict(self) -> dict:
        return {
            "variant": "perturbed",
            "base": self.base.to_json_dict(),
            "bump": self.bump.to_json_dict(),
        }


def potential_from_json(d: dict):
    variant = d.get("variant")
    if variant == "newtonian":
        return NewtonianPotential()
    if variant == "power_law":
        return PowerLawPotential(tuple((b, a) for b, a in d["terms"]))
    if variant == "perturbed":
        return PerturbedPotential(
            base=potential_from_json(d["base"]),
            bump=PolynomialObservable.from_json_dict(d["bump"]),
        )
    raise ValueError(f"unknown potential variant {variant!r}")


def _pair_terms(potential) -> tuple[tuple[float, float], ...]:
    while isinstance(potential, PerturbedPotential):
        potential = potential.base
    return potential.terms


def _bumps(potential) -> list[PolynomialObservable]:
    out = []
    while isinstance(potential, PerturbedPotential):
        out.append(potential.bump)
        potential = potential.base
    return out


def _f_value(terms, r: float) -> float:
    return sum(b * r ** a for b, a in terms)


def _f_prime(terms, r: float) -> float:
    return sum(b * a * r ** (a - 1.0) for b, a in terms)


# -- system and state ---------------------------------------------------------


@dataclass(frozen=True)
class BodySystem:
    """Point masses with a pairwise potential.

    ``com_fixed`` declares that states are meant to live in the
    centre-of-mass frame (total momentum zero, weighted positions zero); the
    coordinates stay full-dimensional and integrators project the drift.
    """

    n_bodies: int
    space_dim: int
    masses: np.ndarray
    potential: object
    com_fixed: bool = True

    def __post_init__(self):
        masses = np.asarray(self.masses, float)
        masses.flags.writeable = False
        if self.n_bodies < 2:
            raise ValueError("need at least two bodies")
        if self.space_dim < 1:
            raise ValueError("space dimension must be >= 1")
        if masses.shape != (self.n_bodies,) or np.any(masses <= 0):
            raise ValueError("masses must be positive, one per body")
        object.__setattr__(self, "masses", masses)
        limit = 2 * self.n_bodies - 1
        n_terms = len(_pair_terms(self.potential))
        if n_terms > limit:
            warnings.warn(
                f"potential has {n_terms} power-law terms; more than "
                f"2N-1 = {limit} leaves the genericity results unsupported",
                stacklevel=2,
            )

    @property
    def coord_dim(self) -> int:
        return self.n_bodies * self.space_dim

    @property
    def phase_dim(self) -> int:
        return 2 * self.coord_dim

    @property
    def effective_phase_dim(self) -> int:
        """Phase dimension after centre-of-mass reduction, if declared."""
        reduced = self.n_bodies - (1 if self.com_fixed else 0)
        return 2 * reduced * self.space_dim

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def mass_vector(self) -> np.ndarray:
        """Mass per configuration coordinate (each body repeated space_dim times)."""
        return np.repeat(self.masses, self.space_dim)

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n_bodies)
                for j in range(i + 1, self.n_bodies)]

    def to_json_dict(self) -> dict:
        return {
            "n_bodies": self.n_bodies,
            "space_dim": self.space_dim,
            "masses": [float(m) for m in self.masses],
            "potential": self.potential.to_json_dict(),
            "com_fixed": bool(self.com_fixed),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "BodySystem":
        return BodySystem(
            n_bodies=int(d["n_bodies"]),
            space_dim=int(d["space_dim"]),
            masses=np.asarray(d["masses"], float),
            potential=potential_from_json(d["potential"]),
            com_fixed=bool(d.get("com_fixed", True)),
        )


@dataclass(frozen=True)
class PhaseState:
    """Positions and momenta, shape (N, space_dim) each; G = 1 units."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, float)
        p = np.asarray(self.p, float)
        if q.shape != p.shape or q.ndim != 2:
            raise ValueError("q and p must be matching (N, space_dim) arrays")
        q.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.p.ravel()])

    @staticmethod
    def from_flat(system: BodySystem, z) -> "PhaseState":
        z = np.asarray(z, float)
        nc = system.coord_dim
        if z.shape != (2 * nc,):
            raise ValueError(f"flat state must have length {2 * nc}")
        shape = (system.n_bodies, system.space_dim)
        return PhaseState(z[:nc].reshape(shape), z[nc:].reshape(shape))

    def validate(self, system: BodySystem, com_tol: float = 1e-10) -> None:
        _min_separation(self.q, raise_on_collision=True)
        if system.com_fixed:
            com = system.masses @ self.q / system.total_mass
            ptot = self.p.sum(axis=0)
            if np.max(np.abs(com)) > com_tol or np.max(np.abs(ptot)) > com_tol:
                raise ValueError(
                    f"state violates centre-of-mass constraints: com={com}, "
                    f"total momentum={ptot}"
                )

    def to_json_dict(self) -> dict:
        return {"q": [[float(x) for x in row] for row in self.q],
                "p": [[float(x) for x in row] for row in self.p]}


def _as_q2d(system: BodySystem, q) -> np.ndarray:
    q = np.asarray(q, float)
    if q.ndim == 1:
        q = q.reshape(system.n_bodies, system.space_dim)
    return q


def _min_separation(q2d: np.ndarray, raise_on_collision: bool = False) -> float:
    n = q2d.shape[0]
    best = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(q2d[i] - q2d[j]))
            if raise_on_collision and r < COLLISION_TOL:
                raise SingularityError(
                    f"bodies {i} and {j} are separated by {r:.3e}", pair=(i, j)
                )
            best = min(best, r)
    return best


def min_separation(system: BodySystem, q) -> float:
    return _min_separation(_as_q2d(system, q))


# -- energies ------------------------------------------------------------------


def potential_value(system: BodySystem, q) -> float:
    """``V(q)``; raises :class:`SingularityError` near collisions."""
    q2d = _as_q2d(system, q)
    terms = _pair_terms(system.potential)
    m = system.masses
    total = 0.0
    for i, j in system.pairs():
        r = float(np.linalg.norm(q2d[i] - q2d[j]))
        if r < COLLISION_TOL:
            raise SingularityError(
                f"bodies {i} and {j} are separated by {r:.3e}", pair=(i, j)
            )
        total -= m[i] * m[j] * _f_value(terms, r)
    for bump in _bumps(system.potential):
        total += bump(q2d.ravel())
    return total


def grad_potential(system: BodySystem, q) -> np.ndarray:
    """Flat gradient of ``V``; the force is its negative."""
    q2d = _as_q2d(system, q)
    terms = _pair_terms(system.potential)
    m = system.masses
    grad = np.zeros_like(q2d)
    for i, j in system.pairs():
        d = q2d[i] - q2d[j]
        r = float(np.linalg.norm(d))
        if r < COLLISION_TOL:
            raise SingularityError(
                f"bodies {i} and {j} are separated by {r:.3e}", pair=(i, j)
            )
        w = -m[i] * m[j] * _f_prime(terms, r) / r
        grad[i] += w * d
        grad[j] -= w * d
    out = grad.ravel()
    for bump in _bumps(system.potential):
        out = out + bump.grad(q2d.ravel())
    return out


def kinetic_energy(system: BodySystem, p) -> float:
    p2d = _as_q2d(system, p)
    return float(0.5 * np.sum(p2d ** 2 / system.masses[:, None]))


def hamiltonian(system: BodySystem, state: PhaseState) -> float:
    return kinetic_energy(system, state.p) + potential_value(system, state.q)


def moment_of_inertia(system: BodySystem, q) -> float:
    """``I = sum_i m_i |q_i - c|^2`` about the centre of mass ``c``."""
    q2d = _as_q2d(system, q)
    c = system.masses @ q2d / system.total_mass
    d = q2d - c
    return float(np.sum(system.masses[:, None] * d ** 2))


def angular_momentum(system: BodySystem, state: PhaseState) -> float:
    """Total angular momentum (scalar in the plane, norm in 3-D)."""
    q, p = state.q, state.p
    if system.space_dim == 2:
        return float(np.sum(q[:, 0] * p[:, 1] - q[:, 1] * p[:, 0]))
    if system.space_dim == 3:
        return float(np.linalg.norm(np.sum(np.cross(q, p), axis=0)))
    return 0.0


# -- exact jets ----------------------------------------------------------------


def _pair_r2_jet(system: BodySystem, q2d: np.ndarray, i: int, j: int,
                 degree: int) -> TruncatedJet:
    """Exact jet of ``|q_i - q_j|^2`` in the configuration variables."""
    nc = system.coord_dim
    d = q2d[i] - q2d[j]
    entries: dict[tuple, float] = {(0,) * nc: float(d @ d)}
    if degree >= 1:
        for c in range(system.space_dim):
            ei = [0] * nc
            ei[i * system.space_dim + c] = 1
            ej = [0] * nc
            ej[j * system.space_dim + c] = 1
            entries[tuple(ei)] = 2.0 * d[c]
            entries[tuple(ej)] = -2.0 * d[c]
    if degree >= 2:
        for c in range(system.space_dim):
            ii = [0] * nc
            ii[i * system.space_dim + c] = 2
            jj = [0] * nc
            jj[j * system.space_dim + c] = 2
            ij = [0] * nc
            ij[i * system.space_dim + c] = 1
            ij[j * system.space_dim + c] = 1
            entries[tuple(ii)] = 1.0
            entries[tuple(jj)] = 1.0
            entries[tuple(ij)] = -2.0
    return TruncatedJet.from_coeffs(nc, degree, q2d.ravel(), entries)


def potential_config_jet(system: BodySystem, q, degree: int) -> TruncatedJet:
    """Exact Taylor jet of ``V`` about ``q`` in the configuration variables."""
    q2d = _as_q2d(system, q)
    terms = _pair_terms(system.potential)
    m = system.masses
    out = TruncatedJet.zero(system.coord_dim, degree, q2d.ravel())
    for i, j in system.pairs():
        r2 = _pair_r2_jet(system, q2d, i, j, degree)
        if r2.value < COLLISION_TOL ** 2:
            raise SingularityError(
                f"bodies {i} and {j} are separated by {math.sqrt(r2.value):.3e}",
                pair=(i, j),
            )
        pair_f = None
        for beta, alpha in terms:
            t = jet_scale(jet_pow(r2, alpha / 2.0), beta)
            pair_f = t if pair_f is None else jet_add(pair_f, t)
        out = jet_add(out, jet_scale(pair_f, -m[i] * m[j]))
    for bump in _bumps(system.potential):
        out = jet_add(out, bump.jet(q2d.ravel(), degree))
    return out


class HamiltonianField:
    """Phase-space vector field of ``H = sum p^2/2m + V(q)``.

    Callable on flat states; exposes exact jets, the separable structure used
    by the symplectic integrator, and energy evaluation.
    """

    separable = True

    def __init__(self, system: BodySystem):
        self.system = system
        self.minv = 1.0 / system.mass_vector

    @property
    def dim(self) -> int:
        return self.system.phase_dim

    def grad_v(self, qflat: np.ndarray) -> np.ndarray:
        return grad_potential(self.system, qflat)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, float)
        nc = self.system.coord_dim
        return np.concatenate([z[nc:] * self.minv, -self.grad_v(z[:nc])])

    def energy(self, z) -> float:
        z = np.asarray(z, float)
        nc = self.system.coord_dim
        return (float(0.5 * np.sum(z[nc:] ** 2 * self.minv))
                + potential_value(self.system, z[:nc]))

    def jet_field(self, z, degree: int) -> JetField:
        z = np.asarray(z, float)
        sys = self.system
        nc = sys.coord_dim
        nph = sys.phase_dim
        comps: list[TruncatedJet] = []
        for c in range(nc):
            entries = {(0,) * nph: z[nc + c] * self.minv[c]}
            if degree >= 1:
                e = [0] * nph
                e[nc + c] = 1
                entries[tuple(e)] = self.minv[c]
            comps.append(TruncatedJet.from_coeffs(nph, degree, z, entries))
        vjet = potential_config_jet(sys, z[:nc], degree + 1)
        for c in range(nc):
            dv = jet_partial(vjet, c)
            comps.append(jet_scale(embed_jet(dv, nph, list(range(nc)), z), -1.0))
        return JetField(tuple(comps))


def build_hamiltonian_field(system: BodySystem) -> HamiltonianField:
    return HamiltonianField(system)


def inertia_observable(system: BodySystem) -> PolynomialObservable:
    """``I`` about the centre of mass, lifted to phase space (exact quadratic)."""
    nph = system.phase_dim
    sd = system.space_dim
    m = system.masses
    mt = system.total_mass
    entries: dict[tuple, float] = {}
    for c in range(sd):
        for i in range(system.n_bodies):
            e = [0] * nph
            e[i * sd + c] = 2
            entries[tuple(e)] = m[i] - m[i] ** 2 / mt
            for j in range(i + 1, system.n_bodies):
                e2 = [0] * nph
                e2[i * sd + c] = 1
                e2[j * sd + c] = 1
                entries[tuple(e2)] = -2.0 * m[i] * m[j] / mt
    return PolynomialObservable.from_coeffs(nph, 2, entries)


class EnergyObservable:
    """Total energy as a phase-space observable with exact jets."""

    def __init__(self, system: BodySystem):
        self.system = system
        self._minv = 1.0 / system.mass_vector

    @property
    def dim(self) -> int:
        return self.system.phase_dim

    def __call__(self, z) -> float:
        z = np.asarray(z, float)
        nc = self.system.coord_dim
        return (float(0.5 * np.sum(z[nc:] ** 2 * self._minv))
                + potential_value(self.system, z[:nc]))

    def grad(self, z) -> np.ndarray:
        z = np.asarray(z, float)
        nc = self.system.coord_dim
        return np.concatenate([
            grad_potential(self.system, z[:nc]), z[nc:] * self._minv
        ])

    def jet(self, z, degree: int) -> TruncatedJet:
        z = np.asarray(z, float)
        sys = self.system
        nc = sys.coord_dim
        nph = sys.phase_dim
        entries: dict[tuple, float] = {
            (0,) * nph: float(0.5 * np.sum(z[nc:] ** 2 * self._minv))
        }
        if degree >= 1:
            for c in range(nc):
                e = [0] * nph
                e[nc + c] = 1
                entries[tuple(e)] = z[nc + c] * self._minv[c]
        if degree >= 2:
            for c in range(nc):
                e = [0] * nph
                e[nc + c] = 2
                entries[tuple(e)] = 0.5 * self._minv[c]
        kin = TruncatedJet.from_coeffs(nph, degree, z, entries)
        vjet = potential_config_jet(sys, z[:nc], degree)
        return jet_add(kin, embed_jet(vjet, nph, list(range(nc)), z))


def energy_observable(system: BodySystem) -> EnergyObservable:
    return EnergyObservable(system)


# -- relative equilibria --------------------------------------------------------


@dataclass(frozen=True)
class RelEqSolution:
    """A central configuration rotating rigidly at angular velocity ``omega``.

    ``configuration`` is centre-of-mass centred; ``residual`` is the max-norm
    defect of ``grad V - omega^2 M q``.
    """

    system: BodySystem
    configuration: np.ndarray
    omega: float
    inertia: float
    residual: float

    def __post_init__(self):
        conf = np.asarray(self.configuration, float)
        conf.flags.writeable = False
        object.__setattr__(self, "configuration", conf)
        if self.omega <= 0:
            raise ValueError("relative equilibria need omega > 0")
        if not self.residual < 1e-10:
            raise NoConvergenceError(
                f"central-configuration residual {self.residual:.3e} "
                "exceeds 1e-10",
                residual=self.residual,
            )

    @property
    def omega_squared(self) -> float:
        return self.omega ** 2

    def to_json_dict(self) -> dict:
        return {
            "configuration": [[float(x) for x in row] for row in self.configuration],
            "omega": float(self.omega),
            "omega_squared": float(self.omega ** 2),
            "inertia": float(self.inertia),
            "residual": float(self.residual),
        }


def _central_residual(system: BodySystem, q2d: np.ndarray, omega2: float) -> float:
    g = grad_potential(system, q2d)
    mq = (system.masses[:, None] * q2d).ravel()
    return float(np.max(np.abs(g - omega2 * mq)))


def _recenter(system: BodySystem, q2d: np.ndarray) -> np.ndarray:
    return q2d - system.masses @ q2d / system.total_mass


def _make_solution(system: BodySystem, q2d: np.ndarray, omega2: float) -> RelEqSolution:
    q2d = _recenter(system, q2d)
    if omega2 <= 0:
        raise NoConvergenceError(
            f"balance requires omega^2 = {omega2:.3e} > 0 (repulsive range?)",
            residual=math.nan,
        )
    return RelEqSolution(
        system=system,
        configuration=q2d,
        omega=math.sqrt(omega2),
        inertia=moment_of_inertia(system, q2d),
        residual=_central_residual(system, q2d, omega2),
    )


def releq_lagrange(system: BodySystem, side: float = 1.0) -> RelEqSolution:
    """Equilateral-triangle relative equilibrium for three bodies.

    With all pair distances equal to ``side``, the balance closes for any
    masses at ``omega^2 = -f'(side) * M_total / side`` (Newtonian:
    ``M_total / side**3``).
    """
    if system.n_bodies != 3 or system.space_dim != 2:
        raise ValueError("Lagrange solutions need three planar bodies")
    if side <= 0:
        raise ValueError("side must be positive")
    radius = side / math.sqrt(3.0)
    angles = [math.pi / 2 + 2 * math.pi * k / 3 for k in range(3)]
    q = np.array([[radius * math.cos(a), radius * math.sin(a)] for a in angles])
    omega2 = -_f_prime(_pair_terms(system.potential), side) * system.total_mass / side
    return _make_solution(system, q, omega2)


def releq_euler(system: BodySystem, ordering: tuple[int, int, int] = (0, 1, 2),
                gap: float = 1.0) -> RelEqSolution:
    """Collinear three-body relative equilibrium.

    Bodies sit on a line in the given order with ``gap`` the distance between
    the first two; the spacing ratio ``u = r_23 / r_12`` solves a scalar
    balance equation found by bracketed root-finding (for the Newtonian pair
    law this is Euler's quintic).
    """
    if system.n_bodies != 3:
        raise ValueError("Euler solutions are for three bodies")
    if sorted(ordering) != [0, 1, 2]:
        raise ValueError("ordering must be a permutation of (0, 1, 2)")
    if gap <= 0:
        raise ValueError("gap must be positive")
    terms = _pair_terms(system.potential)
    m = system.masses

    def lambdas(u: float) -> tuple[float, float]:
        x = np.zeros(3)
        x[ordering[0]] = 0.0
        x[ordering[1]] = gap
        x[ordering[2]] = gap * (1.0 + u)
        c = float(m @ x / system.total_mass)
        g = np.zeros(3)
        for i, j in system.pairs():
            d = x[i] - x[j]
            r = abs(d)
            w = -m[i] * m[j] * _f_prime(terms, r) / r
            g[i] += w * d
            g[j] -= w * d
        a, b = ordering[0], ordering[2]
        return g[a] / (m[a] * (x[a] - c)), g[b] / (m[b] * (x[b] - c))

    def balance(u: float) -> float:
        la, lb = lambdas(u)
        return la - lb

    lo, hi = None, None
    grid = np.geomspace(1e-3, 1e3, 241)
    vals = [balance(u) for u in grid]
    for u0, u1, v0, v1 in zip(grid, grid[1:], vals, vals[1:]):
        if v0 == 0.0:
            lo = hi = u0
            break
        if v0 * v1 < 0:
            lo, hi = u0, u1
            break
    if lo is None:
        raise NoConvergenceError("no collinear balance bracket found")
    u = lo if lo == hi else optimize.brentq(balance, lo, hi, xtol=1e-15, rtol=1e-15)
    omega2 = lambdas(u)[0]
    x = np.zeros(3)
    x[ordering[1]] = gap
    x[ordering[2]] = gap * (1.0 + u)
    q = np.zeros((3, system.space_dim))
    q[:, 0] = x
    return _make_solution(system, q, omega2)


def releq_newton(system: BodySystem, initial_guess,
                 max_iter: int = 100, tol: float = 1e-12) -> RelEqSolution:
    """Gauss-Newton refinement of a central configuration from a guess.

    Unknowns are the configuration and ``omega^2``; the residual stacks the
    balance equations with centre-of-mass, scale (inertia of the guess) and
    rotational-gauge constraints.  Raises :class:`NoConvergenceError` with the
    final residual after ``max_iter`` iterations.
    """
    guess = _recenter(system, _as_q2d(system, np.asarray(initial_guess, float)))
    nc = system.coord_dim
    sd = system.space_dim
    m = system.masses
    i_target = moment_of_inertia(system, guess)
    mq = (m[:, None] * guess).ravel()
    g0 = grad_potential(system, guess)
    denom = float(mq @ guess.ravel())
    omega2 = float(g0 @ guess.ravel()) / denom if denom > 0 else 1.0

    if sd == 2:
        gauge_dirs = [np.column_stack([-guess[:, 1], guess[:, 0]]).ravel()]
    elif sd == 3:
        gauge_dirs = []
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = 1.0
            gauge_dirs.append(np.cross(np.broadcast_to(e, guess.shape), guess).ravel())
    else:
        gauge_dirs = []

    def residual(theta: np.ndarray) -> np.ndarray:
        q = theta[:nc].reshape(system.n_bodies, sd)
        w2 = theta[nc]
        parts = [grad_potential(system, q) - w2 * (m[:, None] * q).ravel()]
        parts.append(m @ q)
        parts.append([moment_of_inertia(system, q) - i_target])
        for d in gauge_dirs:
            parts.append([(m[:, None] * q).ravel() @ d / max(1.0, abs(denom))])
        return np.concatenate([np.atleast_1d(np.asarray(p, float)) for p in parts])

    theta = np.concatenate([guess.ravel(), [omega2]])
    r = residual(theta)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        jac = np.empty((r.size, theta.size))
        for k in range(theta.size):
            h = 1e-7 * max(1.0, abs(theta[k]))
            tp = theta.copy()
            tp[k] += h
            tm = theta.copy()
            tm[k] -= h
            jac[:, k] = (residual(tp) - residual(tm)) / (2 * h)
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        scale = 1.0
        for _ in range(12):
            trial = theta + scale * step
            rt = residual(trial)
            if np.linalg.norm(rt) <= np.linalg.norm(r) or scale < 1e-6:
                theta, r = trial, rt
                break
            scale *= 0.5
    else:
        raise NoConvergenceError(
            f"central-configuration solve stalled at residual "
            f"{float(np.max(np.abs(r))):.3e} after {max_iter} iterations",
            residual=float(np.max(np.abs(r))),
        )
    q = theta[:nc].reshape(system.n_bodies, sd)
    return _make_solution(system, q, float(theta[nc]))


def releq_trajectory(sol: RelEqSolution, t: float) -> PhaseState:
    """State of the rigidly rotating solution at time ``t`` (planar)."""
    if sol.system.space_dim != 2:
        raise ValueError("rigid-rotation states are generated in the plane")
    w = sol.omega
    c, s = math.cos(w * t), math.sin(w * t)
    rot = np.array([[c, -s], [s, c]])
    q = sol.configuration @ rot.T
    v = np.column_stack([-q[:, 1], q[:, 0]]) * w
    p = sol.system.masses[:, None] * v
    return PhaseState(q, p)


def find_equilibria(system: BodySystem, n_starts: int = 24, seed: int = 0,
                    box: float = 2.0) -> list[np.ndarray]:
    """Multistart search for genuine equilibria (``grad V = 0``).

    Returns distinct non-collision configurations found; for attractive pair
    laws like the Newtonian one there are none, and the list is empty.
    """
    nc = system.coord_dim
    found: list[np.ndarray] = []

    def wrapped(qflat: np.ndarray) -> np.ndarray:
        try:
            return grad_potential(system, qflat)
        except SingularityError:
            return np.full(nc, 1e6)

    for k in range(n_starts):
        rng = stream_rng(seed, 41, k)
        q0 = rng.uniform(-box, box, nc)
        sol = optimize.root(wrapped, q0, method="hybr", tol=1e-12)
        if not sol.success:
            continue
        q = sol.x.reshape(system.n_bodies, system.space_dim)
        if _min_separation(q) < 1e-3:
            continue
        if np.max(np.abs(grad_potential(system, q))) > 1e-8:
            continue
        if not any(np.allclose(q, prev, atol=1e-6) for prev in found):
            found.append(q)
    return found
