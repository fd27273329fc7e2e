"""Local unitary cluster Jastrow: parameters, exact simulation, sampling.

The ansatz is the single-layer circuit e^K e^(iJ) e^(-K) acting on a
reference determinant, where K is a real antisymmetric one-body rotation
generator applied to both spin channels and J is a diagonal density-density
coupling truncated to hardware-local pairs: same-spin couplings only between
adjacent orbitals (q = p+1) and opposite-spin couplings only on-site at every
fourth orbital (q = p with p mod 4 = 0).

Simulation never touches the full 2^(2M) Fock space. The state is built in
the fixed particle-number sector: the rotated reference is a Slater
determinant whose amplitudes are minors of the rotated occupied columns, the
Jastrow factor is diagonal there, and the final rotation is applied through
the one-body generator's sector matrix exponential, one spin channel at a
time.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm, logm
from scipy.sparse.linalg import expm_multiply

from .determinants import Determinant, DeterminantBasis, single_excitation_phase
from .errors import ConfigurationError, ResourceError, ShapeError
from .rng import substream

__all__ = [
    "PairLayout",
    "LucjParams",
    "NoiseModel",
    "SampleSet",
    "SectorState",
    "ResourceEstimate",
    "build_lucj_params",
    "simulate_lucj_state",
    "sample_bitstrings",
    "estimate_resources",
]

SIMULATION_QUBIT_CAP = 28


@dataclass(frozen=True)
class PairLayout:
    """Descriptor of which density-density pairs the hardware layout retains.

    Attributes:
        same_pairs: Retained same-spin (p, q) pairs, identical for both spins.
        cross_sites: Orbitals p whose on-site alpha-beta coupling is retained.
    """

    same_pairs: tuple[tuple[int, int], ...]
    cross_sites: tuple[int, ...]

    @classmethod
    def for_orbitals(cls, M: int) -> "PairLayout":
        """The adjacent-pair / every-fourth-site layout used throughout."""
        return cls(
            same_pairs=tuple((p, p + 1) for p in range(M - 1)),
            cross_sites=tuple(p for p in range(M) if p % 4 == 0),
        )


@dataclass(frozen=True, eq=False)
class LucjParams:
    """Parameters of one LUCJ layer.

    Attributes:
        K: Real antisymmetric (M, M) orbital-rotation generator.
        J_same: (2, M, M) same-spin coupling coefficients, index 0 = alpha;
            nonzero entries allowed only at [s, p, p+1].
        J_cross: (M,) on-site alpha-beta couplings; nonzero only where
            p mod 4 = 0.
        layout: The retained-pair descriptor the masks were taken from.
        trivial: True when the source amplitudes had nothing to factorize.
    """

    K: np.ndarray
    J_same: np.ndarray
    J_cross: np.ndarray
    layout: PairLayout
    trivial: bool = False

    def __post_init__(self):
        m = self.K.shape[0]
        if self.K.shape != (m, m):
            raise ShapeError(f"K has shape {self.K.shape}")
        if np.max(np.abs(self.K + self.K.T)) > 1e-12:
            raise ConfigurationError("K is not antisymmetric within 1e-12")
        if self.J_same.shape != (2, m, m):
            raise ShapeError(f"J_same has shape {self.J_same.shape}, expected (2, {m}, {m})")
        if self.J_cross.shape != (m,):
            raise ShapeError(f"J_cross has shape {self.J_cross.shape}, expected ({m},)")
        allowed_same = np.zeros((m, m), dtype=bool)
        for p, q in self.layout.same_pairs:
            allowed_same[p, q] = True
        for s in (0, 1):
            if np.any(self.J_same[s][~allowed_same] != 0.0):
                raise ConfigurationError("J_same has entries outside the retained pairs")
        allowed_cross = np.zeros(m, dtype=bool)
        for p in self.layout.cross_sites:
            allowed_cross[p] = True
        if np.any(self.J_cross[~allowed_cross] != 0.0):
            raise ConfigurationError("J_cross has entries outside the retained sites")
        self.K.flags.writeable = False
        self.J_same.flags.writeable = False
        self.J_cross.flags.writeable = False

    @property
    def M(self) -> int:
        return self.K.shape[0]


@dataclass(frozen=True)
class NoiseModel:
    """Two-parameter synthetic noise applied to sampled bitstrings.

    Attributes:
        p_flip: Independent per-bit readout flip probability.
        p_depol: Probability an entire shot is replaced by a uniform random
            bitstring before readout flips are applied.
        stream: Label mixed into the sampling random stream.
    """

    p_flip: float = 0.0
    p_depol: float = 0.0
    stream: str = "noise"

    def __post_init__(self):
        for name, p in (("p_flip", self.p_flip), ("p_depol", self.p_depol)):
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name}={p} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observed bitstrings with multiplicities.

    Attributes:
        entries: Map bitstring -> observation count.
        n_shots: Total shot count; equals the sum of the multiplicities.
        M: Number of spatial orbitals; bitstrings have length 2M.
    """

    entries: dict[str, int]
    n_shots: int
    M: int

    def __post_init__(self):
        total = sum(self.entries.values())
        if total != self.n_shots:
            raise ConfigurationError(f"multiplicities sum to {total}, not {self.n_shots}")
        for text in self.entries:
            if len(text) != 2 * self.M or set(text) - {"0", "1"}:
                raise ConfigurationError(f"bad bitstring {text!r} for M={self.M}")

    def weighted_fraction(self, predicate) -> float:
        """Multiplicity-weighted fraction of bitstrings satisfying a predicate."""
        if self.n_shots == 0:
            return 0.0
        hits = sum(count for text, count in self.entries.items() if predicate(text))
        return hits / self.n_shots


@dataclass(frozen=True, eq=False)
class SectorState:
    """Statevector over one fixed particle-number determinant sector.

    Attributes:
        basis: All sector determinants in lexicographic order.
        amplitudes: Complex amplitude per basis determinant, unit norm.
    """

    basis: DeterminantBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (len(self.basis),):
            raise ShapeError("amplitude count does not match basis size")
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > 1e-10:
            raise ConfigurationError(f"state norm {norm} is not 1")
        self.amplitudes.flags.writeable = False

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ResourceEstimate:
    """Two-qubit resource counts for one LUCJ layer on a linear layout.

    Attributes:
        n_qubits: System qubits, 2M.
        n_ancillas: Ancillas mediating cross-spin couplings.
        two_qubit_count: Native two-qubit gates.
        two_qubit_depth: Layers of the greedy as-soon-as-possible schedule.
    """

    n_qubits: int
    n_ancillas: int
    two_qubit_count: int
    two_qubit_depth: int

    def __post_init__(self):
        for name in ("n_qubits", "n_ancillas", "two_qubit_count", "two_qubit_depth"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} is negative")


def _dominant_eigenpair(mat: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest-|eigenvalue| pair of a symmetric matrix, sign-fixed."""
    evals, evecs = np.linalg.eigh(mat)
    idx = int(np.argmax(np.abs(evals)))
    vec = evecs[:, idx]
    if vec[int(np.argmax(np.abs(vec)))] < 0.0:
        vec = -vec
    return float(evals[idx]), vec


def build_lucj_params(
    t2: np.ndarray,
    t1: np.ndarray | None,
    M: int,
    n_occ_alpha: int,
    n_occ_beta: int,
) -> LucjParams:
    """Factorize t-amplitudes into one LUCJ layer.

    The t2 tensor, indexed (i, j, a, b) over doubly-occupied times fully
    virtual orbitals, is reshaped into the (ia) x (jb) matrix whose dominant
    eigenpair (lambda, u) defines the layer: u is embedded as the symmetric
    occupied-virtual block matrix X, whose eigendecomposition W diag(d) W^T
    yields the rotation generator K = log(W) and the full coupling matrix
    J = lambda * outer(d, d). J is then truncated to the retained-pair
    layout. A t1 table adds its antisymmetric occupied-virtual embedding
    directly to K.

    Args:
        t2: (n_docc, n_docc, n_virt, n_virt) doubles amplitudes, where
            n_docc = min(n_occ_alpha, n_occ_beta) and
            n_virt = M - max(n_occ_alpha, n_occ_beta).
        t1: Optional (n_docc, n_virt) singles amplitudes.
        M: Number of spatial orbitals.
        n_occ_alpha: Spin-up occupation of the reference.
        n_occ_beta: Spin-down occupation of the reference.

    Returns:
        LucjParams; ``trivial`` is set when t2 is identically zero.
    """
    n_docc = min(n_occ_alpha, n_occ_beta)
    n_virt = M - max(n_occ_alpha, n_occ_beta)
    if t2.shape != (n_docc, n_docc, n_virt, n_virt):
        raise ShapeError(
            f"t2 has shape {t2.shape}, expected {(n_docc, n_docc, n_virt, n_virt)}"
        )
    if t1 is not None and t1.shape != (n_docc, n_virt):
        raise ShapeError(f"t1 has shape {t1.shape}, expected {(n_docc, n_virt)}")
    layout = PairLayout.for_orbitals(M)
    virt_offset = max(n_occ_alpha, n_occ_beta)

    kmat = np.zeros((M, M))
    j_same = np.zeros((2, M, M))
    j_cross = np.zeros(M)
    trivial = not np.any(t2)

    if not trivial:
        paired = np.transpose(t2, (0, 2, 1, 3)).reshape(n_docc * n_virt, n_docc * n_virt)
        paired = 0.5 * (paired + paired.T)
        lam, u = _dominant_eigenpair(paired)
        umat = u.reshape(n_docc, n_virt)
        x = np.zeros((M, M))
        x[:n_docc, virt_offset:] = umat
        x[virt_offset:, :n_docc] = umat.T
        d, w = np.linalg.eigh(x)
        for col in range(M):
            if w[int(np.argmax(np.abs(w[:, col]))), col] < 0.0:
                w[:, col] = -w[:, col]
        if np.linalg.det(w) < 0.0:
            w[:, -1] = -w[:, -1]
        klog = logm(w)
        kmat = np.real(klog)
        kmat = 0.5 * (kmat - kmat.T)
        j_full = lam * np.outer(d, d)
        for p, q in layout.same_pairs:
            j_same[0, p, q] = j_full[p, q]
            j_same[1, p, q] = j_full[p, q]
        for p in layout.cross_sites:
            j_cross[p] = j_full[p, p]

    if t1 is not None and np.any(t1):
        k1 = np.zeros((M, M))
        k1[:n_docc, virt_offset:] = t1
        k1[virt_offset:, :n_docc] = -t1.T
        kmat = kmat + k1

    return LucjParams(K=kmat, J_same=j_same, J_cross=j_cross, layout=layout, trivial=trivial)


def _sector_masks(M: int, n: int) -> list[int]:
    return sorted(sum(1 << p for p in occ) for occ in combinations(range(M), n))


def _rotated_reference_amplitudes(
    rotation: np.ndarray, ref_mask: int, masks: list[int]
) -> np.ndarray:
    """Amplitudes of a rotated determinant: minors of the occupied columns."""
    occ = [p for p in range(rotation.shape[0]) if ref_mask >> p & 1]
    if not occ:
        return np.ones(len(masks))
    thin = rotation[:, occ]
    out = np.empty(len(masks))
    for i, mask in enumerate(masks):
        rows = [p for p in range(rotation.shape[0]) if mask >> p & 1]
        out[i] = np.linalg.det(thin[rows, :])
    return out


def _sector_generator(K: np.ndarray, masks: list[int]) -> sp.csr_matrix:
    """One-spin sector matrix of the one-body operator sum K[p,q] a+_p a_q."""
    m = K.shape[0]
    index = {mask: i for i, mask in enumerate(masks)}
    rows, cols, vals = [], [], []
    for j, mask in enumerate(masks):
        occ = [p for p in range(m) if mask >> p & 1]
        diag = sum(K[p, p] for p in occ)
        if diag != 0.0:
            rows.append(j)
            cols.append(j)
            vals.append(diag)
        for hole in occ:
            for particle in range(m):
                if mask >> particle & 1 or K[particle, hole] == 0.0:
                    continue
                new = mask ^ (1 << hole) | (1 << particle)
                phase = single_excitation_phase(mask, hole, particle)
                rows.append(index[new])
                cols.append(j)
                vals.append(phase * K[particle, hole])
    dim = len(masks)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def _jastrow_theta(params: LucjParams, alpha: int, beta: int) -> float:
    theta = 0.0
    occ = (alpha, beta)
    for s in (0, 1):
        for p, q in params.layout.same_pairs:
            coeff = params.J_same[s, p, q]
            if coeff != 0.0 and occ[s] >> p & 1 and occ[s] >> q & 1:
                theta += coeff
    for p in params.layout.cross_sites:
        coeff = params.J_cross[p]
        if coeff != 0.0 and alpha >> p & 1 and beta >> p & 1:
            theta += coeff
    return theta


def simulate_lucj_state(
    params: LucjParams,
    reference: Determinant,
    shape: tuple[int, int, int],
) -> SectorState:
    """Apply e^K e^(iJ) e^(-K) to the reference, exactly, in its sector.

    Args:
        params: LUCJ layer parameters over M orbitals.
        reference: Reference determinant with the sector's popcounts.
        shape: (M, n_alpha, n_beta).

    Returns:
        Normalized SectorState over all (n_alpha, n_beta) determinants.

    Raises:
        ResourceError: 2M exceeds the desk-scale simulation cap of 28.
        ConfigurationError: Reference popcounts disagree with the shape.
    """
    m, n_alpha, n_beta = shape
    if 2 * m > SIMULATION_QUBIT_CAP:
        raise ResourceError(f"2M = {2 * m} qubits exceeds the cap of {SIMULATION_QUBIT_CAP}")
    if params.M != m:
        raise ShapeError(f"params are for M={params.M}, shape says {m}")
    if reference.n_alpha != n_alpha or reference.n_beta != n_beta:
        raise ConfigurationError("reference popcounts disagree with the sector shape")

    alphas = _sector_masks(m, n_alpha)
    betas = _sector_masks(m, n_beta)
    basis = DeterminantBasis(
        [Determinant(a, b) for a in alphas for b in betas], m
    )

    rotation = expm(-params.K)
    amp_alpha = _rotated_reference_amplitudes(rotation, reference.alpha, alphas)
    amp_beta = _rotated_reference_amplitudes(rotation, reference.beta, betas)
    grid = np.outer(amp_alpha, amp_beta).astype(complex)

    thetas = np.array(
        [[_jastrow_theta(params, a, b) for b in betas] for a in alphas]
    )
    grid *= np.exp(1j * thetas)

    gen_alpha = _sector_generator(params.K, alphas)
    gen_beta = _sector_generator(params.K, betas)
    grid = expm_multiply(gen_alpha, grid)
    grid = expm_multiply(gen_beta, grid.T).T

    flat = grid.reshape(-1)
    norm = np.linalg.norm(flat)
    if norm == 0.0:
        raise ConfigurationError("state collapsed to zero norm")
    return SectorState(basis=basis, amplitudes=flat / norm)


def _mask_to_bitstring(mask: int, n_bits: int) -> str:
    return "".join("1" if mask >> k & 1 else "0" for k in range(n_bits))


def sample_bitstrings(
    state: SectorState, n_shots: int, noise: NoiseModel, seed: int
) -> SampleSet:
    """Draw measurement outcomes from a sector state under synthetic noise.

    Each shot samples a determinant from the squared amplitudes, is replaced
    by a uniform random bitstring with probability p_depol, and then has each
    bit flipped independently with probability p_flip. Reproducible for a
    fixed (seed, noise.stream) pair.
    """
    m = state.basis.M
    n_bits = 2 * m
    if n_shots == 0:
        return SampleSet(entries={}, n_shots=0, M=m)
    rng = substream(seed, "sample", noise.stream)
    probs = state.probabilities()
    probs = probs / probs.sum()
    drawn = rng.choice(len(probs), size=n_shots, p=probs)
    masks = np.array(
        [det.alpha | det.beta << m for det in state.basis], dtype=np.int64
    )[drawn]
    if noise.p_depol > 0.0:
        replace = rng.random(n_shots) < noise.p_depol
        uniform = rng.integers(0, 1 << n_bits, size=n_shots, dtype=np.int64)
        masks = np.where(replace, uniform, masks)
    if noise.p_flip > 0.0:
        flips = rng.random((n_shots, n_bits)) < noise.p_flip
        flip_masks = (flips.astype(np.int64) << np.arange(n_bits, dtype=np.int64)).sum(axis=1)
        masks = masks ^ flip_masks
    counter = Counter(int(v) for v in masks)
    entries = {_mask_to_bitstring(mask, n_bits): count for mask, count in counter.items()}
    return SampleSet(entries=entries, n_shots=n_shots, M=m)


def _emit_gate_list(M: int) -> tuple[list[tuple[int, int]], int]:
    """Native two-qubit gate list for one LUCJ layer on a linear layout.

    Qubits 0..M-1 are the alpha chain, M..2M-1 the beta chain, and 2M..
    the ancillas (one per retained cross-spin site). Each Givens rotation
    and each ZZ coupling compiles to two native gates on its pair; each
    cross-spin coupling compiles to one native gate from the alpha qubit to
    the ancilla and one from the ancilla to the beta qubit.
    """
    layout = PairLayout.for_orbitals(M)
    gates: list[tuple[int, int]] = []

    def givens_block():
        for layer in range(M):
            for p in range(layer % 2, M - 1, 2):
                for off in (0, M):
                    gates.extend([(off + p, off + p + 1)] * 2)

    givens_block()
    for parity in (0, 1):
        for p, q in layout.same_pairs:
            if p % 2 == parity:
                for off in (0, M):
                    gates.extend([(off + p, off + q)] * 2)
    for anc, p in enumerate(layout.cross_sites):
        gates.append((p, 2 * M + anc))
        gates.append((2 * M + anc, M + p))
    givens_block()
    return gates, len(layout.cross_sites)


def estimate_resources(M: int) -> ResourceEstimate:
    """Two-qubit gate count and depth of one LUCJ layer over M orbitals.

    The count follows the explicit construction (two Givens blocks, one
    same-spin ZZ round, the retained cross-spin couplings); the depth comes
    from greedy as-soon-as-possible scheduling of that gate list.
    """
    if M < 1:
        raise ConfigurationError(f"M={M} is not positive")
    gates, n_anc = _emit_gate_list(M)
    available: dict[int, int] = {}
    depth = 0
    for q1, q2 in gates:
        layer = max(available.get(q1, 0), available.get(q2, 0))
        available[q1] = layer + 1
        available[q2] = layer + 1
        depth = max(depth, layer + 1)
    return ResourceEstimate(
        n_qubits=2 * M,
        n_ancillas=n_anc,
        two_qubit_count=len(gates),
        two_qubit_depth=depth,
    )
