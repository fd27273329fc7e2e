"""Projected Hamiltonians over determinant subspaces and their ground states.

The workflow is: collect determinant strings, build a DeterminantBasis,
project the Hamiltonian onto it as a sparse symmetric matrix, and find the
lowest eigenpair either densely (small problems) or with a Davidson
iteration. Energy and variance of any subspace wavefunction are evaluated
exactly by applying the Hamiltonian into the connected space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .determinants import Determinant, DeterminantBasis, enumerate_connected, slater_condon
from .errors import ConfigurationError, ConvergenceError
from .integrals import IntegralSet

__all__ = [
    "SubspaceWavefunction",
    "EnergyVariancePoint",
    "SolverOptions",
    "build_basis",
    "project_hamiltonian",
    "ground_state",
    "energy_and_variance",
]


@dataclass(frozen=True, eq=False)
class SubspaceWavefunction:
    """Real linear combination of the determinants of a basis.

    Attributes:
        basis: The determinant basis the coefficients refer to.
        coeffs: One real amplitude per basis determinant, unit 2-norm.
    """

    basis: DeterminantBasis
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (len(self.basis),):
            raise ConfigurationError(
                f"{len(self.coeffs)} coefficients for {len(self.basis)} determinants"
            )
        norm = float(np.linalg.norm(self.coeffs))
        if abs(norm - 1.0) > 1e-10:
            raise ConfigurationError(f"coefficient norm {norm} is not 1")
        self.coeffs.flags.writeable = False

    @classmethod
    def normalized(cls, basis: DeterminantBasis, raw: np.ndarray) -> "SubspaceWavefunction":
        """Wrap raw coefficients after dividing out their norm."""
        raw = np.asarray(raw, dtype=float)
        norm = np.linalg.norm(raw)
        if norm == 0.0:
            raise ConfigurationError("cannot normalize a zero vector")
        return cls(basis=basis, coeffs=raw / norm)

    def amplitude(self, det: Determinant) -> float:
        """Coefficient of one determinant, 0.0 if absent from the basis."""
        if det in self.basis:
            return float(self.coeffs[self.basis.index(det)])
        return 0.0


@dataclass(frozen=True)
class EnergyVariancePoint:
    """An (energy, variance) pair with its provenance labels.

    Attributes:
        energy: <psi|H|psi> in hartree.
        variance: <psi|H^2|psi> - energy^2 in hartree^2; tiny negative
            round-off (within 1e-10) is clamped to zero at construction.
        zeta: Subspace-fraction label, or None outside the ladder context.
        batch: Batch index, or None for combined states.
    """

    energy: float
    variance: float
    zeta: float | None = None
    batch: int | None = None

    def __post_init__(self):
        if -1e-10 <= self.variance < 0.0:
            object.__setattr__(self, "variance", 0.0)
        elif self.variance < 0.0:
            raise ConfigurationError(f"variance {self.variance} below -1e-10")


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for ground_state.

    Attributes:
        tol: Relative residual target; convergence requires
            ||Hv - Ev|| <= tol * max(1, |E|).
        max_iter: Davidson iteration cap.
        dense_cutoff: Dimensions at or below this use a direct dense solve.
    """

    tol: float = 1e-8
    max_iter: int = 200
    dense_cutoff: int = 2000


def build_basis(
    alpha_strings: Iterable[int],
    beta_strings: Iterable[int],
    M: int,
    mode: str = "product",
    n_alpha: int | None = None,
    n_beta: int | None = None,
) -> DeterminantBasis:
    """Assemble a determinant basis from per-spin occupation strings.

    Args:
        alpha_strings: Spin-up occupation masks.
        beta_strings: Spin-down occupation masks; in paired mode these are
            zipped positionally with alpha_strings.
        M: Number of spatial orbitals.
        mode: "product" spans the Cartesian product of the distinct strings;
            "paired" keeps only the given (alpha, beta) pairs, deduplicated.
        n_alpha: Expected spin-up popcount; defaults to the first string's.
        n_beta: Expected spin-down popcount, same default.

    Raises:
        ConfigurationError: Popcount violation, unknown mode, empty input,
            or length mismatch in paired mode.
    """
    alphas = list(alpha_strings)
    betas = list(beta_strings)
    if not alphas or not betas:
        raise ConfigurationError("no strings supplied")
    if n_alpha is None:
        n_alpha = alphas[0].bit_count()
    if n_beta is None:
        n_beta = betas[0].bit_count()
    for mask in alphas:
        if mask.bit_count() != n_alpha or mask >> M:
            raise ConfigurationError(f"alpha string {mask:b} violates popcount {n_alpha}")
    for mask in betas:
        if mask.bit_count() != n_beta or mask >> M:
            raise ConfigurationError(f"beta string {mask:b} violates popcount {n_beta}")
    if mode == "product":
        dets = [Determinant(a, b) for a in set(alphas) for b in set(betas)]
    elif mode == "paired":
        if len(alphas) != len(betas):
            raise ConfigurationError(
                f"paired mode needs equal counts, got {len(alphas)} and {len(betas)}"
            )
        dets = [Determinant(a, b) for a, b in zip(alphas, betas)]
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    return DeterminantBasis(dets, M)


def project_hamiltonian(basis: DeterminantBasis, ints: IntegralSet) -> sp.csr_matrix:
    """Project the Hamiltonian onto the basis as a sparse symmetric matrix.

    Only matrix elements between determinants within two substitutions of
    each other are stored; everything else is an exact zero.
    """
    if len(basis) == 0:
        raise ConfigurationError("empty basis")
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, det in enumerate(basis):
        rows.append(i)
        cols.append(i)
        vals.append(slater_condon(det, det, ints))
        for other in enumerate_connected(det, basis.M):
            if other not in basis:
                continue
            j = basis.index(other)
            if j <= i:
                continue
            element = slater_condon(det, other, ints)
            if element != 0.0:
                rows.extend((i, j))
                cols.extend((j, i))
                vals.extend((element, element))
    n = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _sign_fix(vec: np.ndarray) -> np.ndarray:
    """Flip the vector so its largest-magnitude entry is positive."""
    if vec[int(np.argmax(np.abs(vec)))] < 0.0:
        return -vec
    return vec


def _davidson(
    H, diag: np.ndarray, tol: float, max_iter: int, restart_dim: int = 20
) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a symmetric operator by single-vector Davidson."""
    dim = H.shape[0]
    start = np.zeros(dim)
    start[int(np.argmin(diag))] = 1.0
    basis = [start]
    images = [np.asarray(H @ start).ravel()]
    best_residual = np.inf
    theta = float(diag.min())
    ritz = start
    for _ in range(max_iter):
        v_mat = np.column_stack(basis)
        w_mat = np.column_stack(images)
        small = v_mat.T @ w_mat
        small = 0.5 * (small + small.T)
        evals, evecs = np.linalg.eigh(small)
        theta = float(evals[0])
        ritz = v_mat @ evecs[:, 0]
        h_ritz = w_mat @ evecs[:, 0]
        residual = h_ritz - theta * ritz
        res_norm = float(np.linalg.norm(residual))
        best_residual = min(best_residual, res_norm)
        if res_norm <= tol * max(1.0, abs(theta)):
            return theta, _sign_fix(ritz)
        if len(basis) >= restart_dim:
            basis = [ritz]
            images = [h_ritz]
            v_mat = np.column_stack(basis)
        denom = diag - theta
        denom[np.abs(denom) < 1e-10] = 1e-10
        direction = residual / denom
        # Orthogonalize twice against the current search space.
        for _ in range(2):
            direction = direction - np.column_stack(basis) @ (
                np.column_stack(basis).T @ direction
            )
        norm = np.linalg.norm(direction)
        if norm < 1e-12:
            # Preconditioned residual collapsed onto the space; steer along
            # the largest raw residual component instead.
            direction = np.zeros(dim)
            direction[int(np.argmax(np.abs(residual)))] = 1.0
            for _ in range(2):
                direction = direction - np.column_stack(basis) @ (
                    np.column_stack(basis).T @ direction
                )
            norm = np.linalg.norm(direction)
            if norm < 1e-12:
                break
        basis.append(direction / norm)
        images.append(np.asarray(H @ basis[-1]).ravel())
    raise ConvergenceError(
        f"Davidson did not reach tol {tol} within {max_iter} iterations",
        residual=best_residual,
    )


def ground_state(
    H,
    opts: SolverOptions | None = None,
    basis: DeterminantBasis | None = None,
) -> tuple[float, np.ndarray | SubspaceWavefunction]:
    """Lowest eigenpair of a symmetric matrix.

    Uses a direct dense solve at or below opts.dense_cutoff and Davidson
    iteration above it. The eigenvector sign is fixed by making its
    largest-magnitude coefficient positive.

    Args:
        H: Symmetric matrix, dense or scipy sparse.
        opts: Solver options; defaults used when None.
        basis: When given, the eigenvector is wrapped into a
            SubspaceWavefunction over it; otherwise the raw vector returns.

    Returns:
        (energy, eigenvector or wavefunction).

    Raises:
        ConvergenceError: Davidson missed the residual target within
            max_iter; carries the best residual seen.
    """
    if opts is None:
        opts = SolverOptions()
    dim = H.shape[0]
    if basis is not None and len(basis) != dim:
        raise ConfigurationError(f"basis size {len(basis)} != matrix dimension {dim}")
    if dim <= opts.dense_cutoff:
        dense = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float)
        evals, evecs = np.linalg.eigh(dense)
        energy = float(evals[0])
        vec = _sign_fix(evecs[:, 0])
    else:
        diag = H.diagonal() if sp.issparse(H) else np.diag(np.asarray(H, dtype=float))
        energy, vec = _davidson(H, np.asarray(diag, dtype=float), opts.tol, opts.max_iter)
    if basis is None:
        return energy, vec
    return energy, SubspaceWavefunction.normalized(basis, vec)


def apply_hamiltonian(
    psi: SubspaceWavefunction, ints: IntegralSet
) -> dict[Determinant, float]:
    """Expand sigma = H|psi> over the union of the basis and its connected space."""
    sigma: dict[Determinant, float] = {}
    for i, det in enumerate(psi.basis):
        c = float(psi.coeffs[i])
        if c == 0.0:
            continue
        targets = [det] + enumerate_connected(det, psi.basis.M)
        for target in targets:
            element = slater_condon(target, det, ints)
            if element != 0.0:
                sigma[target] = sigma.get(target, 0.0) + element * c
    return sigma


def energy_and_variance(
    psi: SubspaceWavefunction,
    ints: IntegralSet,
    zeta: float | None = None,
    batch: int | None = None,
) -> EnergyVariancePoint:
    """Exact energy and energy variance of a subspace wavefunction.

    sigma = H|psi> is accumulated over the basis plus all connected
    determinants; the energy is <psi|sigma> restricted to the basis and the
    variance is ||sigma||^2 - energy^2.
    """
    sigma = apply_hamiltonian(psi, ints)
    energy = 0.0
    for i, det in enumerate(psi.basis):
        energy += float(psi.coeffs[i]) * sigma.get(det, 0.0)
    norm_sq = sum(v * v for v in sigma.values())
    variance = norm_sq - energy * energy
    if -1e-10 <= variance < 0.0:
        variance = 0.0
    return EnergyVariancePoint(energy=energy, variance=variance, zeta=zeta, batch=batch)
