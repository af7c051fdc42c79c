"""Minkowski kinematics and covariant spin observables for spin-1/2 particles.

Conventions, fixed package-wide:

* metric signature ``(+, -, -, -)``, natural units ``c = 1``;
* spin-1/2 generators ``s_k = sigma_k / 2`` (eigenvalues +-1/2);
* direction observables returned by :func:`spin_observable` are
  renormalized so their eigenvalues are exactly +-1.

The central geometric object is the effective measurement axis.  For a
particle moving with velocity ``beta_vec`` (unit direction ``n``), a lab
axis ``a`` acts on the spin like the deformed vector

    v(a) = sqrt(1 - beta^2) * (a - (a.n) n) + (a.n) n

whose transverse part is contracted by the Lorentz factor while the
longitudinal part is untouched.  Its length is
``|v| = sqrt(1 + beta^2 ((a.n)^2 - 1))``, which shrinks to ``|a.n|`` as
``beta -> 1``: in that limit every axis collapses onto the momentum
direction and all spin observables commute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateObservableError, DomainError

#: Effective axes shorter than this are treated as degenerate.
DEGENERACY_TOL = 1e-14

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: Rotation generators for spin 1/2, eigenvalues +-1/2.
SPIN_GENERATORS = 0.5 * np.stack([PAULI_X, PAULI_Y, PAULI_Z])


def _as_triple(values, name: str) -> tuple[float, float, float]:
    triple = tuple(float(c) for c in values)
    if len(triple) != 3:
        raise ValueError(f"{name} must have exactly 3 components, got {len(triple)}")
    if not all(math.isfinite(c) for c in triple):
        raise ValueError(f"{name} must be finite, got {triple}")
    return triple


@dataclass(frozen=True)
class FourVector:
    """A contravariant four-vector (t, x, y, z)."""

    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("t", "x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_spatial(cls, t: float, spatial) -> "FourVector":
        x, y, z = _as_triple(spatial, "spatial part")
        return cls(t, x, y, z)

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def minkowski_dot(u: FourVector, v: FourVector) -> float:
    """Lorentz-invariant product u.v with signature (+, -, -, -)."""
    return u.t * v.t - u.x * v.x - u.y * v.y - u.z * v.z


@dataclass(frozen=True)
class ParticleKinematics:
    """On-shell state of a massive particle: rest mass and 3-momentum.

    The energy is always ``sqrt(m^2 + |p|^2)``, so ``|beta| < 1`` holds for
    every finite momentum.
    """

    mass: float
    momentum: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        if not (math.isfinite(self.mass) and self.mass > 0.0):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")
        object.__setattr__(self, "momentum", _as_triple(self.momentum, "momentum"))

    @classmethod
    def from_beta(cls, beta_vec, mass: float = 1.0) -> "ParticleKinematics":
        """Build from a velocity vector with |beta| < 1."""
        return cls(mass, momentum_for_beta(beta_vec, mass))

    @classmethod
    def at_rest(cls, mass: float = 1.0) -> "ParticleKinematics":
        return cls(mass, (0.0, 0.0, 0.0))

    @property
    def momentum_vec(self) -> np.ndarray:
        return np.array(self.momentum)

    @property
    def energy(self) -> float:
        return math.sqrt(self.mass**2 + sum(c * c for c in self.momentum))

    @property
    def beta_vec(self) -> np.ndarray:
        return self.momentum_vec / self.energy

    @property
    def beta(self) -> float:
        return float(np.linalg.norm(self.beta_vec))

    @property
    def direction(self) -> np.ndarray:
        """Unit momentum direction; undefined (raises) at rest."""
        norm = float(np.linalg.norm(self.momentum_vec))
        if norm == 0.0:
            raise ValueError("direction is undefined at zero momentum")
        return self.momentum_vec / norm

    @property
    def four_momentum(self) -> FourVector:
        return FourVector.from_spatial(self.energy, self.momentum)


def momentum_for_beta(beta_vec, mass: float = 1.0) -> tuple[float, float, float]:
    """Momentum m*gamma*beta_vec realizing a given velocity; |beta| < 1."""
    bx, by, bz = _as_triple(beta_vec, "beta_vec")
    beta_sq = bx * bx + by * by + bz * bz
    if beta_sq >= 1.0:
        raise DomainError(f"|beta| must be < 1, got |beta| = {math.sqrt(beta_sq)}")
    gamma = 1.0 / math.sqrt(1.0 - beta_sq)
    return (mass * gamma * bx, mass * gamma * by, mass * gamma * bz)


def beta_from_momentum(momentum: np.ndarray, mass: float) -> np.ndarray:
    """Vectorized velocity p / sqrt(m^2 + |p|^2) for arrays of shape (..., 3)."""
    p = np.asarray(momentum, dtype=float)
    energy = np.sqrt(mass * mass + np.sum(p * p, axis=-1, keepdims=True))
    return p / energy


def pl_eigenvalue(a: FourVector, kin: ParticleKinematics, j3: float = 0.5) -> float:
    """Positive eigenvalue of the spin projection along a four-axis ``a``.

    For a spacelike axis and an on-shell momentum ``p`` the projection of
    the relativistic spin operator onto ``a`` has eigenvalues
    ``+- j3 * sqrt((a.p)^2 - a^2 p^2)``; this returns the positive one.
    ``j3`` must be a positive half-integer (0.5 for a single spin-1/2
    particle).
    """
    if j3 <= 0 or abs(2.0 * j3 - round(2.0 * j3)) > 1e-12:
        raise ValueError(f"j3 must be a positive half-integer, got {j3}")
    p = kin.four_momentum
    radicand = minkowski_dot(a, p) ** 2 - minkowski_dot(a, a) * minkowski_dot(p, p)
    if radicand < 0.0:
        raise DomainError(
            f"(a.p)^2 - a^2 p^2 = {radicand} < 0 for a = {a}, p = {p}; "
            "the axis must be spacelike relative to the momentum"
        )
    return j3 * math.sqrt(radicand)


def boosted_spin_axis(a_dir, beta_vec) -> np.ndarray:
    """Effective measurement axis v(a) for a particle with velocity beta_vec.

    Broadcasts over leading dimensions: ``a_dir`` and ``beta_vec`` may be
    single 3-vectors or arrays of shape (..., 3).  Rows with beta = 0 take
    the rest-frame branch v = a exactly (no momentum direction enters).
    """
    a = np.asarray(a_dir, dtype=float)
    b = np.asarray(beta_vec, dtype=float)
    beta_sq = np.sum(b * b, axis=-1, keepdims=True)
    norm = np.sqrt(beta_sq)
    # rest branch: force n = 0 so v reduces to a with no 0/0
    n = b / np.where(norm > 0.0, norm, 1.0)
    a_long = np.sum(a * n, axis=-1, keepdims=True) * n
    # clip guards |beta| = 1 against forming sqrt of a tiny negative
    root = np.sqrt(np.maximum(1.0 - beta_sq, 0.0))
    return root * (a - a_long) + a_long


def spin_observable(a_dir, kin: ParticleKinematics) -> np.ndarray:
    """2x2 spin observable for axis ``a_dir``, eigenvalues exactly +-1.

    The matrix is ``vhat . sigma`` where ``vhat`` is the normalized
    effective axis; equivalently, the projection of the spin onto ``a_dir``
    divided by its positive eigenvalue.  The overall scale of ``a_dir``
    cancels.  Raises :class:`DegenerateObservableError` when the effective
    axis is shorter than :data:`DEGENERACY_TOL`.
    """
    v = boosted_spin_axis(a_dir, kin.beta_vec)
    norm = float(np.linalg.norm(v))
    if norm < DEGENERACY_TOL:
        raise DegenerateObservableError(
            f"effective axis vanished for a = {np.asarray(a_dir)}, "
            f"beta = {kin.beta_vec} (|v| = {norm})"
        )
    unit = v / norm
    return unit[0] * PAULI_X + unit[1] * PAULI_Y + unit[2] * PAULI_Z


def commutator_norm(a_dir, b_dir, kin: ParticleKinematics) -> float:
    """Frobenius norm of the commutator of two spin projections.

    Uses the unnormalized projections ``v(a) . s`` and ``v(b) . s`` with
    generators ``s = sigma / 2``.  At rest and for orthogonal axes the value
    is ``sqrt(2)/2``; it collapses to zero as ``beta -> 1`` because both
    effective axes align with the momentum.
    """
    va = boosted_spin_axis(a_dir, kin.beta_vec)
    vb = boosted_spin_axis(b_dir, kin.beta_vec)
    sa = np.tensordot(va, SPIN_GENERATORS, axes=(0, 0))
    sb = np.tensordot(vb, SPIN_GENERATORS, axes=(0, 0))
    return float(np.linalg.norm(sa @ sb - sb @ sa))
