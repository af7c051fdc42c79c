"""Spin correlation of a singlet pair of massive spin-1/2 particles.

For measurement axes ``a`` (particle 1) and ``b`` (particle 2) the
expectation of the product of the two +-1 observables is

    K(a, b; p1, p2) = - v1(a) . v2(b) / (|v1(a)| |v2(b)|)

with the effective axes ``v_i`` of :func:`relbell.kinematics.boosted_spin_axis`
built from each particle's own velocity.  At zero momentum this is the
textbook ``-a.b``; for equal momenta along ``n`` with speed ``beta`` it
reduces to

    -(a.b - beta^2 a_perp.b_perp)
      / sqrt((1 + beta^2 ((n.a)^2 - 1)) (1 + beta^2 ((n.b)^2 - 1)))

Setting ``b = a`` gives exactly -1 for any momentum: the pair stays
perfectly anti-correlated along a shared axis.

Averages over momentum profiles are estimated by Monte Carlo with a
splittable, counter-based generator (Philox keyed through ``SeedSequence``
spawning, one child per fixed-size chunk), so results are bitwise
reproducible for a given ``(seed, samples, chunk_size)`` regardless of how
many worker threads evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import JointGaussian, MomentumDistribution, Sharp
from .errors import DegenerateObservableError, DomainError
from .kinematics import (
    DEGENERACY_TOL,
    ParticleKinematics,
    beta_from_momentum,
    boosted_spin_axis,
)

#: Default number of momentum samples evaluated per RNG chunk.
DEFAULT_CHUNK_SIZE = 65536

#: Cap on resampling sweeps for degenerate draws within one chunk.
_MAX_RESAMPLE_SWEEPS = 100


_DEGENERACY_TOL_SQ = DEGENERACY_TOL * DEGENERACY_TOL


def _kernel_parts(a_dir, b_dir, beta1, beta2):
    """Dot product and squared norms of the two effective axes."""
    v1 = boosted_spin_axis(a_dir, beta1)
    v2 = boosted_spin_axis(b_dir, beta2)
    n1_sq = np.sum(v1 * v1, axis=-1)
    n2_sq = np.sum(v2 * v2, axis=-1)
    return np.sum(v1 * v2, axis=-1), n1_sq, n2_sq


def kernel_from_beta(a_dir, b_dir, beta1, beta2) -> np.ndarray:
    """Vectorized singlet correlation from velocity vectors.

    Accepts arrays of shape (..., 3); degenerate rows raise.  Velocities
    with |beta| = 1 are allowed as a limit provided the axis keeps a
    longitudinal component.  Normalizing by one square root of the product
    of squared norms makes the shared-axis case land on -1 exactly.
    """
    dot, n1_sq, n2_sq = _kernel_parts(a_dir, b_dir, beta1, beta2)
    if np.any(n1_sq < _DEGENERACY_TOL_SQ) or np.any(n2_sq < _DEGENERACY_TOL_SQ):
        raise DegenerateObservableError(
            "an effective measurement axis vanished; the axis is transverse "
            "to an ultra relativistic momentum"
        )
    # adding zero folds -0.0 into 0.0 for orthogonal axes at rest
    return -dot / np.sqrt(n1_sq * n2_sq) + 0.0


def correlator_integrand(
    a_dir, b_dir, kin1: ParticleKinematics, kin2: ParticleKinematics
) -> float:
    """Correlation K(a, b; p1, p2) at two fixed single-particle momenta."""
    return float(kernel_from_beta(a_dir, b_dir, kin1.beta_vec, kin2.beta_vec))


def correlator_sharp(a_dir, b_dir, beta_vec, mass: float = 1.0) -> float:
    """Correlation when both particles share one velocity ``beta_vec``.

    ``mass`` does not enter the value (the velocity fixes it) and is
    accepted only for signature symmetry with the averaged estimators.
    Requires |beta| < 1.
    """
    b = np.asarray(beta_vec, dtype=float)
    if b.shape != (3,):
        raise ValueError(f"beta_vec must have shape (3,), got {b.shape}")
    speed = float(np.linalg.norm(b))
    if speed >= 1.0:
        raise DomainError(f"|beta| must be < 1, got {speed}")
    return float(kernel_from_beta(a_dir, b_dir, b, b))


def correlator_mixed(
    a_dir, b_dir, kin_slow: ParticleKinematics, kin_fast: ParticleKinematics
) -> float:
    """Correlation for asymmetric kinematics (one slow, one fast particle)."""
    return correlator_integrand(a_dir, b_dir, kin_slow, kin_fast)


@dataclass(frozen=True)
class CorrelatorEstimate:
    """Monte Carlo estimate with its one-sigma standard error."""

    value: float
    standard_error: float
    samples: int
    rejected: int = 0
    warning: str | None = None


def _chunk_sizes(samples: int, chunk_size: int) -> list[int]:
    full, rest = divmod(samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _pair_kernel_matrix(pairs, beta1, beta2, symmetrize: bool) -> np.ndarray:
    """Kernel values for several (a, b) axis pairs on one momentum sample.

    Returns shape (len(pairs), n); rows with a degenerate axis for any pair
    are NaN so the caller can resample them.
    """
    out = np.empty((len(pairs), beta1.shape[0]))
    bad = np.zeros(beta1.shape[0], dtype=bool)
    for row, (a_dir, b_dir) in enumerate(pairs):
        dot, n1_sq, n2_sq = _kernel_parts(a_dir, b_dir, beta1, beta2)
        bad |= (n1_sq < _DEGENERACY_TOL_SQ) | (n2_sq < _DEGENERACY_TOL_SQ)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[row] = -dot / np.sqrt(n1_sq * n2_sq)
        if symmetrize:
            dot, n1_sq, n2_sq = _kernel_parts(a_dir, b_dir, beta2, beta1)
            bad |= (n1_sq < _DEGENERACY_TOL_SQ) | (n2_sq < _DEGENERACY_TOL_SQ)
            with np.errstate(divide="ignore", invalid="ignore"):
                out[row] = 0.5 * (out[row] - dot / np.sqrt(n1_sq * n2_sq))
    out[:, bad] = np.nan
    return out


def _evaluate_chunk(pairs, dist, seed_seq, n: int):
    """Per-pair (sum, sum of squares) over one chunk, with resampling.

    Degenerate momentum draws are redrawn from the same chunk stream until
    clean; the redraw count is reported so callers can surface a warning.
    """
    rng = np.random.Generator(np.random.Philox(seed_seq))
    mass = dist.mass
    symmetrize = isinstance(dist, JointGaussian)
    p1, p2 = dist.sample(rng, n)
    kernels = _pair_kernel_matrix(
        pairs, beta_from_momentum(p1, mass), beta_from_momentum(p2, mass), symmetrize
    )
    rejected = 0
    for _ in range(_MAX_RESAMPLE_SWEEPS):
        bad = np.isnan(kernels[0])
        count = int(np.count_nonzero(bad))
        if count == 0:
            break
        rejected += count
        q1, q2 = dist.sample(rng, count)
        kernels[:, bad] = _pair_kernel_matrix(
            pairs, beta_from_momentum(q1, mass), beta_from_momentum(q2, mass), symmetrize
        )
    else:
        raise DegenerateObservableError(
            "could not draw nondegenerate momenta after "
            f"{_MAX_RESAMPLE_SWEEPS} resampling sweeps"
        )
    return kernels.sum(axis=1), (kernels * kernels).sum(axis=1), rejected


def _mc_means(pairs, dist, samples: int, seed: int, chunk_size: int, workers: int):
    """Chunked Monte Carlo means and standard errors for several axis pairs.

    All pairs are evaluated on the same momentum draws (common random
    numbers).  Chunk streams are spawned up front and partial sums are
    combined in chunk order, so the result does not depend on ``workers``.
    """
    if samples < 100:
        raise ValueError(f"samples must be >= 100, got {samples}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be positive, got {chunk_size}")
    sizes = _chunk_sizes(samples, chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(children, sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda job: _evaluate_chunk(pairs, dist, job[0], job[1]), jobs)
            )
    else:
        results = [_evaluate_chunk(pairs, dist, ss, n) for ss, n in jobs]

    sums = np.zeros(len(pairs))
    squares = np.zeros(len(pairs))
    rejected = 0
    for chunk_sum, chunk_sq, chunk_rej in results:
        sums += chunk_sum
        squares += chunk_sq
        rejected += chunk_rej
    means = sums / samples
    variances = np.maximum(squares - samples * means * means, 0.0) / (samples - 1)
    errors = np.sqrt(variances / samples)
    return means, errors, rejected


def _rejection_warning(rejected: int, samples: int) -> str | None:
    if rejected > 0.01 * samples:
        return (
            f"{rejected} degenerate momentum draws were resampled "
            f"({rejected / samples:.1%} of {samples} samples)"
        )
    return None


def correlator_mc(
    a_dir,
    b_dir,
    dist: MomentumDistribution,
    samples: int,
    seed: int,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> CorrelatorEstimate:
    """Monte Carlo average of the correlation over a momentum profile.

    A :class:`~relbell.distributions.Sharp` profile has no randomness, so
    the estimate equals the fixed-momentum value with zero error.  For a
    :class:`~relbell.distributions.JointGaussian` profile the kernel is
    symmetrized over the particle swap before averaging.
    """
    if samples < 100:
        raise ValueError(f"samples must be >= 100, got {samples}")
    if isinstance(dist, Sharp):
        kin = ParticleKinematics(dist.mass, dist.momentum)
        return CorrelatorEstimate(
            value=correlator_integrand(a_dir, b_dir, kin, kin),
            standard_error=0.0,
            samples=samples,
        )
    a = np.asarray(a_dir, dtype=float)
    b = np.asarray(b_dir, dtype=float)
    means, errors, rejected = _mc_means([(a, b)], dist, samples, seed, chunk_size, workers)
    return CorrelatorEstimate(
        value=float(means[0]),
        standard_error=float(errors[0]),
        samples=samples,
        rejected=rejected,
        warning=_rejection_warning(rejected, samples),
    )
