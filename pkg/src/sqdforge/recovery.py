"""Self-consistent configuration recovery and batched subspace diagonalization.

Sampled bitstrings that violate the target particle numbers are repaired by
flipping orbitals drawn with probability proportional to |x_ps - n_ps|,
where n is the current estimate of the orbital occupations. The repaired
pool is resampled into batches, each batch is diagonalized over the product
space of its spin strings, and the occupations are re-estimated from the
batch ground states. Iterating this loop to a fixed point is what lets
heavily corrupted samples still span a useful subspace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .determinants import Determinant
from .errors import ConfigurationError, ConvergenceError, RecoveryError
from .integrals import IntegralSet
from .lucj import SampleSet
from .rng import substream
from .subspace import (
    EnergyVariancePoint,
    SolverOptions,
    SubspaceWavefunction,
    build_basis,
    energy_and_variance,
    ground_state,
    project_hamiltonian,
)

__all__ = [
    "OccupationVector",
    "SqdPlan",
    "SqdResult",
    "recover_bitstring",
    "run_sqd",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OccupationVector:
    """Expected occupation of every (orbital, spin) mode.

    Attributes:
        n: Array of shape (2, M); row 0 is spin-up. Entries lie in [0, 1].
    """

    n: np.ndarray

    def __post_init__(self):
        if self.n.ndim != 2 or self.n.shape[0] != 2:
            raise ConfigurationError(f"occupations have shape {self.n.shape}, want (2, M)")
        if np.any(self.n < -1e-9) or np.any(self.n > 1.0 + 1e-9):
            raise ConfigurationError("occupations outside [0, 1]")
        self.n.flags.writeable = False

    @property
    def M(self) -> int:
        return self.n.shape[1]

    @classmethod
    def from_wavefunctions(cls, states: list[SubspaceWavefunction]) -> "OccupationVector":
        """Average one-body diagonal density over a list of wavefunctions."""
        if not states:
            raise ConfigurationError("no wavefunctions to average")
        m = states[0].basis.M
        total = np.zeros((2, m))
        for psi in states:
            dens = np.zeros((2, m))
            for i, det in enumerate(psi.basis):
                w = float(psi.coeffs[i]) ** 2
                for p in range(m):
                    if det.alpha >> p & 1:
                        dens[0, p] += w
                    if det.beta >> p & 1:
                        dens[1, p] += w
            total += dens
        return cls(n=np.clip(total / len(states), 0.0, 1.0))


@dataclass(frozen=True)
class SqdPlan:
    """Batching and convergence controls for one run_sqd call.

    Attributes:
        d: Maximum configurations per batch.
        K: Number of batches per recovery iteration.
        max_iter: Recovery iterations after the initial discard pass.
        energy_tol: Stop when the per-iteration best energy improves less
            than this, in hartree.
        zeta: Subspace-fraction label carried into the energy points.
        seed: Root seed for recovery and batch-draw streams.
    """

    d: int
    K: int = 1
    max_iter: int = 5
    energy_tol: float = 1e-6
    zeta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError(f"d={self.d} must be at least 1")
        if self.K < 1:
            raise ConfigurationError(f"K={self.K} must be at least 1")
        if self.max_iter < 0:
            raise ConfigurationError(f"max_iter={self.max_iter} is negative")


@dataclass(frozen=True, eq=False)
class SqdResult:
    """Everything run_sqd learned.

    Attributes:
        energy: Minimum energy over all batches and iterations.
        batch_points: Final-iteration (energy, variance) per batch.
        batch_wavefunctions: Final-iteration ground states per batch.
        energy_history: Per-iteration list of per-batch energies; entry 0 is
            the initial discard-only pass with its single combined batch.
        min_energies: Per-iteration minimum energies.
        occupation_history: Occupation estimate after each iteration.
        iterations: Recovery iterations actually run (excluding entry 0).
        converged: True when the stop came from energy_tol, not max_iter.
    """

    energy: float
    batch_points: list[EnergyVariancePoint]
    batch_wavefunctions: list[SubspaceWavefunction]
    energy_history: list[list[float]]
    min_energies: list[float]
    occupation_history: list[OccupationVector]
    iterations: int
    converged: bool


def _split_bitstring(text: str, m: int) -> tuple[int, int]:
    alpha = sum(1 << p for p in range(m) if text[p] == "1")
    beta = sum(1 << p for p in range(m) if text[m + p] == "1")
    return alpha, beta


def _join_bitstring(alpha: int, beta: int, m: int) -> str:
    return Determinant(alpha, beta).to_string(m)


def _recover_mask(
    mask: int, occ_row: np.ndarray, target: int, m: int, rng: np.random.Generator
) -> int:
    while mask.bit_count() != target:
        over = mask.bit_count() > target
        flippable = [p for p in range(m) if (mask >> p & 1) == (1 if over else 0)]
        weights = np.array(
            [abs((1.0 if over else 0.0) - occ_row[p]) for p in flippable]
        )
        total = weights.sum()
        if total == 0.0:
            logger.warning(
                "recovery weights all zero over %d candidates; falling back to uniform",
                len(flippable),
            )
            weights = np.ones(len(flippable))
            total = float(len(flippable))
        choice = flippable[rng.choice(len(flippable), p=weights / total)]
        mask ^= 1 << choice
    return mask


def recover_bitstring(
    x: str,
    occ: OccupationVector,
    targets: tuple[int, int],
    rng: np.random.Generator,
) -> str:
    """Repair one bitstring to exact target popcounts, spin by spin.

    While a spin sector's popcount is wrong, an orbital is drawn with
    probability proportional to |x_ps - n_ps| among the flippable positions
    (occupied bits when over target, empty bits when under) and flipped.
    Bitstrings already at the targets are returned unchanged.

    Args:
        x: Bitstring of length 2M, alpha half first.
        occ: Current occupation estimate.
        targets: (N_alpha, N_beta).
        rng: Stream for the flip draws.

    Returns:
        A bitstring with exact target popcounts.
    """
    m = occ.M
    if len(x) != 2 * m:
        raise ConfigurationError(f"bitstring length {len(x)} != 2M = {2 * m}")
    alpha, beta = _split_bitstring(x, m)
    alpha = _recover_mask(alpha, occ.n[0], targets[0], m, rng)
    beta = _recover_mask(beta, occ.n[1], targets[1], m, rng)
    return _join_bitstring(alpha, beta, m)


def _draw_batch(
    pool: dict[str, int], d: int, hf: str, rng: np.random.Generator
) -> list[str]:
    """Sample up to d distinct strings weighted by multiplicity, then add HF."""
    keys = sorted(pool)
    weights = np.array([pool[k] for k in keys], dtype=float)
    take = min(d, len(keys))
    idx = rng.choice(len(keys), size=take, replace=False, p=weights / weights.sum())
    batch = [keys[i] for i in idx]
    if hf not in batch:
        if len(batch) < d:
            batch.append(hf)
        else:
            batch[-1] = hf
    return batch


def _diagonalize_batch(
    strings: list[str],
    ints: IntegralSet,
    opts: SolverOptions,
) -> tuple[float, SubspaceWavefunction]:
    alphas = []
    betas = []
    for text in strings:
        a, b = _split_bitstring(text, ints.M)
        alphas.append(a)
        betas.append(b)
    basis = build_basis(
        alphas, betas, ints.M, mode="product", n_alpha=ints.n_alpha, n_beta=ints.n_beta
    )
    mat = project_hamiltonian(basis, ints)
    return ground_state(mat, opts, basis=basis)


def run_sqd(
    samples: SampleSet,
    ints: IntegralSet,
    plan: SqdPlan,
    solver: SolverOptions | None = None,
) -> SqdResult:
    """Full self-consistent recovery loop over a sample set.

    The initial pass discards every wrong-popcount sample and diagonalizes
    the survivors as one combined batch (the Hartree-Fock string is always
    included). Each later iteration repairs every violating copy with
    recover_bitstring under the latest occupations, draws K batches of up to
    d distinct configurations weighted by multiplicity, diagonalizes each
    over the product space of its spin strings, and averages the batch
    densities into the next occupation estimate. The loop stops after
    plan.max_iter iterations or once the per-iteration best energy improves
    by less than plan.energy_tol.

    Raises:
        RecoveryError: The sample set is empty, leaving nothing to repair.
        ConvergenceError: A batch solve failed; the batch id is attached.
    """
    m = ints.M
    if samples.M != m:
        raise ConfigurationError(f"samples are over M={samples.M}, integrals over {m}")
    if solver is None:
        solver = SolverOptions()
    if samples.n_shots == 0 or not samples.entries:
        raise RecoveryError("no sampled configurations to recover from")
    targets = (ints.n_alpha, ints.n_beta)
    hf = Determinant((1 << targets[0]) - 1, (1 << targets[1]) - 1).to_string(m)

    def is_valid(text: str) -> bool:
        return (
            text[:m].count("1") == targets[0] and text[m:].count("1") == targets[1]
        )

    # Initial pass: discard violators, one combined batch, no size cap.
    survivors = {t: c for t, c in sorted(samples.entries.items()) if is_valid(t)}
    strings = list(survivors)
    if hf not in survivors:
        strings.append(hf)
    try:
        energy0, psi0 = _diagonalize_batch(strings, ints, solver)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"initial batch failed: {exc}", residual=exc.residual
        ) from exc
    occ = OccupationVector.from_wavefunctions([psi0])
    point0 = energy_and_variance(psi0, ints, zeta=plan.zeta, batch=0)

    energy_history = [[energy0]]
    min_energies = [energy0]
    occupation_history = [occ]
    best_energy = energy0
    batch_points = [point0]
    batch_states = [psi0]
    converged = False
    iterations = 0

    for it in range(1, plan.max_iter + 1):
        pool: dict[str, int] = {}
        recover_rng = substream(plan.seed, "recover", it)
        for text, count in sorted(samples.entries.items()):
            if is_valid(text):
                pool[text] = pool.get(text, 0) + count
            else:
                for _ in range(count):
                    fixed = recover_bitstring(text, occ, targets, recover_rng)
                    pool[fixed] = pool.get(fixed, 0) + 1
        if not pool:
            raise RecoveryError("recovery produced an empty configuration pool")

        batch_states = []
        batch_points = []
        energies = []
        for k in range(plan.K):
            batch_rng = substream(plan.seed, "batch", it, k)
            batch = _draw_batch(pool, plan.d, hf, batch_rng)
            try:
                energy_k, psi_k = _diagonalize_batch(batch, ints, solver)
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"batch {k} of iteration {it} failed: {exc}",
                    residual=exc.residual,
                ) from exc
            batch_states.append(psi_k)
            batch_points.append(
                energy_and_variance(psi_k, ints, zeta=plan.zeta, batch=k)
            )
            energies.append(energy_k)

        occ = OccupationVector.from_wavefunctions(batch_states)
        occupation_history.append(occ)
        energy_history.append(energies)
        iteration_min = min(energies)
        min_energies.append(iteration_min)
        iterations = it
        improvement = best_energy - iteration_min
        best_energy = min(best_energy, iteration_min)
        if improvement < plan.energy_tol:
            converged = True
            break

    return SqdResult(
        energy=best_energy,
        batch_points=batch_points,
        batch_wavefunctions=batch_states,
        energy_history=energy_history,
        min_energies=min_energies,
        occupation_history=occupation_history,
        iterations=iterations,
        converged=converged,
    )
