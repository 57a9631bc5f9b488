"""Random-perturbation experiments on the constant-observable obstruction.

The obstruction vector vanishes along any solution that keeps an observable
constant.  These tools measure, empirically, how rare such zeros are: perturb
the observable, the vector field, or the N-body potential by a seeded random
polynomial bump and count zero-obstruction samples across a phase-space box.
Random bumps are the constructive mechanism behind the density arguments this
mirrors, but a random draw is not a residual-set proof — every report labels
its conclusion "empirical".

Also here: the trajectory classifier that separates rigid rotations
(constant moment of inertia and shape) from orbits whose inertia genuinely
varies, using the measured energy drift as the noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientSamplesError, SingularityError
from .fields import (
    PolynomialObservable,
    SumField,
    SumObservable,
    stream_rng,
)
from .flow import Trajectory
from .lie_tower import default_tower_order, obstruction_at
from .mech import BodySystem, PerturbedPotential, build_hamiltonian_field

__all__ = [
    "TOL_ZERO",
    "PerturbationSpec",
    "perturb",
    "Sampler",
    "ScanReport",
    "obstruction_scan",
    "ExperimentReport",
    "genericity_experiment",
    "SaariClassification",
    "classify_trajectory",
]

#: Obstruction norms below this count as "zero" in scans.
TOL_ZERO = 1e-6

_TARGETS = ("observable", "vector_field", "potential")

# Stream tags keeping the named sub-streams of one global seed disjoint.
_TAG_BUMP = 7
_TAG_SAMPLE = 11


@dataclass(frozen=True)
class PerturbationSpec:
    """A seeded random polynomial bump.

    ``target`` names what receives the bump: the scalar observable, the
    vector field (componentwise), or the N-body potential (a bump in the
    configuration variables only).  Coefficients are iid standard normal
    scaled by ``epsilon``; identical spec and seed reproduce identical
    coefficients.
    """

    target: str
    degree: int
    epsilon: float
    seed: int

    def __post_init__(self):
        if self.target not in _TARGETS:
            raise ConfigError(
                f"unknown perturbation target {self.target!r}; "
                f"choose from {_TARGETS}"
            )
        if self.degree < 1:
            raise ConfigError("perturbation degree must be >= 1")
        if self.epsilon < 0:
            raise ConfigError("perturbation amplitude must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "target": self.target,
            "degree": int(self.degree),
            "epsilon": float(self.epsilon),
            "seed": int(self.seed),
        }


def _alphas(dim: int, degree: int):
    from .jet_algebra import _space

    return _space(dim, degree).alphas


def _bump_observable(spec: PerturbationSpec, dim: int,
                     *stream: int) -> PolynomialObservable:
    """iid N(0,1) * epsilon on every monomial coefficient up to the degree."""
    rng = stream_rng(spec.seed, _TAG_BUMP, *stream)
    alphas = _alphas(dim, spec.degree)
    coeffs = rng.normal(size=len(alphas)) * spec.epsilon
    return PolynomialObservable.from_coeffs(
        dim, spec.degree,
        {tuple(a): float(c) for a, c in zip(alphas, coeffs)},
    )


def perturb(spec: PerturbationSpec, base, trial: int = 0):
    """Return ``base`` plus the seeded random bump ``spec`` describes.

    * ``observable`` — ``base`` is a scalar handle; result sums it with a
      polynomial bump and exposes the bump as ``.bump``.
    * ``vector_field`` — ``base`` is a field handle; each component gets an
      independent bump; result exposes ``.bump``.
    * ``potential`` — ``base`` is a :class:`BodySystem`; the bump is a
      polynomial in the configuration variables only and the result is a new
      system with a :class:`PerturbedPotential`.

    ``epsilon == 0`` returns ``base`` itself.  ``trial`` separates the random
    streams of repeated draws under one spec.
    """
    if spec.epsilon == 0.0:
        return base
    if spec.target == "observable":
        bump = _bump_observable(spec, base.dim, trial, 0)
        out = SumObservable(base, bump)
        out.bump = bump
        return out
    if spec.target == "vector_field":
        from .fields import PolynomialField

        dim = base.dim
        rng = stream_rng(spec.seed, _TAG_BUMP, trial, 1)
        alphas = _alphas(dim, spec.degree)
        comps = []
        for _ in range(dim):
            coeffs = rng.normal(size=len(alphas)) * spec.epsilon
            comps.append(PolynomialObservable.from_coeffs(
                dim, spec.degree,
                {tuple(a): float(c) for a, c in zip(alphas, coeffs)},
            ))
        bump = PolynomialField(tuple(comps))
        out = SumField(base, bump)
        out.bump = bump
        if hasattr(base, "system"):
            out.system = base.system
        return out
    # potential bump lives on configuration space only
    if not isinstance(base, BodySystem):
        raise ConfigError("potential perturbation needs a BodySystem")
    bump = _bump_observable(spec, base.coord_dim, trial, 2)
    return BodySystem(
        n_bodies=base.n_bodies,
        space_dim=base.space_dim,
        masses=base.masses,
        potential=PerturbedPotential(base=base.potential, bump=bump),
        com_fixed=base.com_fixed,
    )


# -- phase-space sampling -------------------------------------------------------


@dataclass(frozen=True)
class Sampler:
    """Uniform box sampler with counter-based streams.

    Each sample is drawn from its own ``(seed, index, attempt)`` stream, so
    results do not depend on evaluation order.  For N-body fields the draw is
    projected to the centre-of-mass frame when the system declares it, then
    rejected (up to ``max_attempts``) until all separations clear
    ``min_separation``.
    """

    box: tuple[float, float]
    count: int
    seed: int
    min_separation: float = 0.1
    max_attempts: int = 100

    def __post_init__(self):
        lo, hi = self.box
        if not lo < hi:
            raise ConfigError("sampler box must satisfy lo < hi")
        if self.count < 1:
            raise ConfigError("sampler count must be >= 1")

    def draw(self, index: int, dim: int, system: BodySystem | None = None
             ) -> np.ndarray:
        lo, hi = self.box
        for attempt in range(self.max_attempts):
            rng = stream_rng(self.seed, _TAG_SAMPLE, index, attempt)
            z = rng.uniform(lo, hi, dim)
            if system is None:
                return z
            nc = system.coord_dim
            q = z[:nc].reshape(system.n_bodies, system.space_dim)
            p = z[nc:].reshape(system.n_bodies, system.space_dim)
            if system.com_fixed:
                q = q - system.masses @ q / system.total_mass
                p = p - p.sum(axis=0) / system.n_bodies
            ok = True
            for i in range(system.n_bodies):
                for j in range(i + 1, system.n_bodies):
                    if np.linalg.norm(q[i] - q[j]) < self.min_separation:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return np.concatenate([q.ravel(), p.ravel()])
        raise InsufficientSamplesError(
            f"sample {index}: no collision-free draw in "
            f"{self.max_attempts} attempts"
        )

    def to_json_dict(self) -> dict:
        return {
            "box": [float(self.box[0]), float(self.box[1])],
            "count": int(self.count),
            "seed": int(self.seed),
            "min_separation": float(self.min_separation),
        }


@dataclass(frozen=True)
class ScanReport:
    """Classified obstruction norms over one batch of samples.

    The four exclusive classes (equilibrium-excluded, F-critical-excluded,
    singular-excluded, zero/nonzero obstruction) partition ``n_samples``.
    """

    n_samples: int
    n_excluded_equilibrium: int
    n_excluded_F_critical: int
    n_excluded_singular: int
    n_obstruction_zero: int
    n_obstruction_nonzero: int
    min_nonexcluded_norm: float
    tol_zero: float
    tol_eq: float
    tol_crit: float
    seed: int
    tower_order: int

    def __post_init__(self):
        total = (self.n_excluded_equilibrium + self.n_excluded_F_critical
                 + self.n_excluded_singular + self.n_obstruction_zero
                 + self.n_obstruction_nonzero)
        if total != self.n_samples:
            raise ValueError("scan counts must partition n_samples")

    @property
    def n_nonexcluded(self) -> int:
        return self.n_obstruction_zero + self.n_obstruction_nonzero

    @property
    def zero_fraction(self) -> float:
        if self.n_nonexcluded == 0:
            return math.nan
        return self.n_obstruction_zero / self.n_nonexcluded

    def to_json_dict(self) -> dict:
        mn = self.min_nonexcluded_norm
        return {
            "n_samples": self.n_samples,
            "n_excluded_equilibrium": self.n_excluded_equilibrium,
            "n_excluded_F_critical": self.n_excluded_F_critical,
            "n_excluded_singular": self.n_excluded_singular,
            "n_obstruction_zero": self.n_obstruction_zero,
            "n_obstruction_nonzero": self.n_obstruction_nonzero,
            "min_nonexcluded_norm": None if math.isnan(mn) else float(mn),
            "tolerances": {
                "tol_zero": float(self.tol_zero),
                "tol_eq": float(self.tol_eq),
                "tol_crit": float(self.tol_crit),
            },
            "seed": int(self.seed),
            "tower_order": int(self.tower_order),
        }


def _field_and_system(X):
    if isinstance(X, BodySystem):
        return build_hamiltonian_field(X), X
    return X, getattr(X, "system", None)


def obstruction_scan(X, F, sampler: Sampler, m: int | None = None,
                     tol_zero: float = TOL_ZERO, tol_eq: float = 1e-9,
                     tol_crit: float = 1e-9) -> ScanReport:
    """Evaluate the obstruction at each sample and tally the outcomes.

    ``X`` may be a field handle or a :class:`BodySystem` (its Hamiltonian
    field is used).  Samples within ``tol_eq`` of an equilibrium or
    ``tol_crit`` of a critical point of ``F`` are excluded, mirroring the
    exclusion zones of the theory; singular evaluations are counted and
    excluded rather than fatal.  The default tower order is one more than the
    effective phase dimension.
    """
    fieldX, system = _field_and_system(X)
    dim = fieldX.dim if hasattr(fieldX, "dim") else system.phase_dim
    if m is None:
        n_eff = system.effective_phase_dim if system is not None else dim
        m = default_tower_order(n_eff)
    n_eq = n_crit = n_sing = n_zero = n_nonzero = 0
    min_norm = math.inf
    for idx in range(sampler.count):
        z = sampler.draw(idx, dim, system)
        try:
            samp = obstruction_at(F, fieldX, z, m=m, tol_eq=tol_eq,
                                  tol_crit=tol_crit)
        except SingularityError:
            n_sing += 1
            continue
        if samp.is_near_equilibrium:
            n_eq += 1
        elif samp.is_near_F_critical:
            n_crit += 1
        elif samp.norm_inf < tol_zero:
            n_zero += 1
            min_norm = min(min_norm, samp.norm_inf)
        else:
            n_nonzero += 1
            min_norm = min(min_norm, samp.norm_inf)
    return ScanReport(
        n_samples=sampler.count,
        n_excluded_equilibrium=n_eq,
        n_excluded_F_critical=n_crit,
        n_excluded_singular=n_sing,
        n_obstruction_zero=n_zero,
        n_obstruction_nonzero=n_nonzero,
        min_nonexcluded_norm=min_norm if min_norm < math.inf else math.nan,
        tol_zero=tol_zero,
        tol_eq=tol_eq,
        tol_crit=tol_crit,
        seed=sampler.seed,
        tower_order=m,
    )


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregate of repeated perturb-then-scan trials.

    ``pooled_zero_fraction`` pools zero counts over all non-excluded samples
    of all trials.  The ``note`` flags that random bumps give empirical
    evidence, not a residual-set proof.
    """

    spec: PerturbationSpec
    trials: tuple[ScanReport, ...]
    pooled_zero_fraction: float
    n_nonexcluded_total: int
    note: str = field(
        default="empirical evidence from seeded random polynomial "
                "perturbations; not a residuality proof"
    )

    def to_json_dict(self) -> dict:
        pz = self.pooled_zero_fraction
        return {
            "perturbation": self.spec.to_json_dict(),
            "trials": [t.to_json_dict() for t in self.trials],
            "pooled_zero_fraction": None if math.isnan(pz) else float(pz),
            "n_nonexcluded_total": int(self.n_nonexcluded_total),
            "note": self.note,
        }


def genericity_experiment(base, F, spec: PerturbationSpec, trials: int,
                          sampler: Sampler, m: int | None = None,
                          tol_zero: float = TOL_ZERO, tol_eq: float = 1e-9,
                          tol_crit: float = 1e-9) -> ExperimentReport:
    """Repeatedly perturb and scan; pool the zero-obstruction fraction.

    ``base`` is a field handle or :class:`BodySystem`; the perturbation
    applies per ``spec.target`` — bumping ``F`` (observable), the field, or
    the potential (leaving ``F`` fixed).  Each trial draws a fresh bump from
    the trial-indexed stream and scans with a trial-shifted sampler seed.
    """
    if trials < 1:
        raise ConfigError("need at least one trial")
    reports = []
    zero_total = 0
    nonexcluded_total = 0
    for t in range(trials):
        X_t, F_t = base, F
        if spec.target == "observable":
            F_t = perturb(spec, F, trial=t)
        else:
            X_t = perturb(spec, base, trial=t)
        trial_sampler = Sampler(
            box=sampler.box, count=sampler.count,
            seed=sampler.seed + t, min_separation=sampler.min_separation,
            max_attempts=sampler.max_attempts,
        )
        rep = obstruction_scan(X_t, F_t, trial_sampler, m=m,
                               tol_zero=tol_zero, tol_eq=tol_eq,
                               tol_crit=tol_crit)
        reports.append(rep)
        zero_total += rep.n_obstruction_zero
        nonexcluded_total += rep.n_nonexcluded
    pooled = (zero_total / nonexcluded_total if nonexcluded_total > 0
              else math.nan)
    return ExperimentReport(
        spec=spec,
        trials=tuple(reports),
        pooled_zero_fraction=pooled,
        n_nonexcluded_total=nonexcluded_total,
    )


# -- trajectory classification ---------------------------------------------------


@dataclass(frozen=True)
class SaariClassification:
    """Verdict on whether a trajectory rotates rigidly.

    ``RelativeEquilibrium`` needs both the inertia and the shape (mutual
    distances) to stay constant within tolerance; ``NonConstantF`` needs the
    inertia variation to clear the energy-drift noise floor by ``margin``;
    anything in between is ``Indeterminate``.
    """

    verdict: str
    inertia_rel_variation: float
    shape_variation: float
    energy_drift: float
    tol_inertia: float
    tol_shape: float
    margin: float

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "inertia_rel_variation": float(self.inertia_rel_variation),
            "shape_variation": float(self.shape_variation),
            "energy_drift": float(self.energy_drift),
            "tolerances": {
                "tol_inertia": float(self.tol_inertia),
                "tol_shape": float(self.tol_shape),
                "margin": float(self.margin),
            },
        }


def classify_trajectory(traj: Trajectory, tol_inertia: float | None = None,
                        tol_shape: float = 1e-6, margin: float = 100.0,
                        tol_eq: float = 1e-9) -> SaariClassification:
    """Classify an N-body trajectory by its inertia and shape variation.

    ``inertia_rel_variation`` is (max I - min I) / mean I; ``shape_variation``
    the worst relative spread of any mutual distance; ``energy_drift`` the
    relative energy spread, serving as the integration noise floor.  The
    inertia tolerance defaults to ``10 x energy_drift`` with a 1e-10 floor so
    that analytically generated rigid rotations (zero measured drift) still
    classify.
    """
    system = traj.system
    if system is None:
        raise ConfigError("classification needs an N-body trajectory")
    if traj.times.size < 10:
        raise InsufficientSamplesError(
            f"trajectory has {traj.times.size} samples; need >= 10"
        )
    inertia = traj.inertia
    mean_i = float(np.mean(inertia))
    irv = float((np.max(inertia) - np.min(inertia)) / abs(mean_i))
    energy = traj.energy
    drift = float((np.max(energy) - np.min(energy))
                  / max(abs(float(np.mean(energy))), 1e-300))
    nc = system.coord_dim
    q = traj.states[:, :nc].reshape(-1, system.n_bodies, system.space_dim)
    shape = 0.0
    for i, j in system.pairs():
        r = np.linalg.norm(q[:, i] - q[:, j], axis=1)
        spread = float((np.max(r) - np.min(r)) / np.mean(r))
        shape = max(shape, spread)
    if tol_inertia is None:
        tol_inertia = max(10.0 * drift, 1e-10)

    speeds = np.max(np.abs([np.asarray(traj.field(z), float)
                            for z in traj.states[:: max(1, traj.times.size // 32)]]),
                    axis=1)
    scale = max(1.0, float(np.max(np.abs(traj.states[0]))))
    if float(np.max(speeds)) < tol_eq * scale:
        verdict = "Equilibrium"
    elif irv < tol_inertia and shape < tol_shape:
        verdict = "RelativeEquilibrium"
    elif irv > margin * drift:
        verdict = "NonConstantF"
    else:
        verdict = "Indeterminate"
    return SaariClassification(
        verdict=verdict,
        inertia_rel_variation=irv,
        shape_variation=shape,
        energy_drift=drift,
        tol_inertia=tol_inertia,
        tol_shape=tol_shape,
        margin=margin,
    )
