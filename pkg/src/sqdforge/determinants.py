"""Slater determinants as bitstrings and matrix elements between them.

A determinant is a pair of integer bitmasks, one per spin channel; bit p set
means spatial orbital p is occupied by an electron of that spin. The implied
operator ordering is creation operators applied in ascending orbital index,
all alpha before all beta. Matrix elements follow from the Slater-Condon
rules with fermionic phases computed per spin channel; the phases from beta
operators crossing the alpha block always cancel pairwise because the
Hamiltonian conserves the alpha electron count.

The text form of a determinant over M orbitals is 2M characters of 0/1,
alpha half first, orbital 0 leftmost within each half.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ShapeError
from .integrals import IntegralSet

__all__ = [
    "Determinant",
    "DeterminantBasis",
    "excitation_degree",
    "single_excitation_phase",
    "slater_condon",
    "enumerate_connected",
]


def _bits(mask: int) -> list[int]:
    """List the set bit positions of ``mask`` in ascending order."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _sign_annihilate(mask: int, p: int) -> int:
    """Phase of a_p applied to the occupation mask (bit p must be set)."""
    return -1 if (mask & ((1 << p) - 1)).bit_count() & 1 else 1


def _sign_create(mask: int, p: int) -> int:
    """Phase of a+_p applied to the occupation mask (bit p must be clear)."""
    return -1 if (mask & ((1 << p) - 1)).bit_count() & 1 else 1


def single_excitation_phase(mask: int, hole: int, particle: int) -> int:
    """Fermionic phase of a+_particle a_hole applied to one spin channel.

    ``hole`` must be occupied in ``mask`` and ``particle`` empty after its
    removal; no checks are performed.
    """
    sign = _sign_annihilate(mask, hole)
    mask &= ~(1 << hole)
    return sign * _sign_create(mask, particle)


def _double_phase(mask: int, holes: tuple[int, int], particles: tuple[int, int]) -> int:
    """Phase of a+_p1 a+_p2 a_h2 a_h1 on one spin channel, indices ascending."""
    h1, h2 = holes
    p1, p2 = particles
    sign = _sign_annihilate(mask, h1)
    mask &= ~(1 << h1)
    sign *= _sign_annihilate(mask, h2)
    mask &= ~(1 << h2)
    sign *= _sign_create(mask, p2)
    mask |= 1 << p2
    return sign * _sign_create(mask, p1)


@dataclass(frozen=True, order=True)
class Determinant:
    """One Slater determinant, stored as per-spin occupation bitmasks.

    The derived ordering is lexicographic on (alpha, beta), which is the
    basis ordering used throughout.

    Attributes:
        alpha: Bitmask of occupied spin-up orbitals.
        beta: Bitmask of occupied spin-down orbitals.
    """

    alpha: int
    beta: int

    @property
    def n_alpha(self) -> int:
        return self.alpha.bit_count()

    @property
    def n_beta(self) -> int:
        return self.beta.bit_count()

    def occupied_alpha(self) -> list[int]:
        """Occupied spin-up orbitals in ascending order."""
        return _bits(self.alpha)

    def occupied_beta(self) -> list[int]:
        """Occupied spin-down orbitals in ascending order."""
        return _bits(self.beta)

    def to_string(self, M: int) -> str:
        """Render as 2M characters, alpha half first, orbital 0 leftmost.

        Raises:
            ShapeError: An occupied orbital lies at or above M.
        """
        if self.alpha >> M or self.beta >> M:
            raise ShapeError(f"occupation does not fit in {M} orbitals")
        alpha = "".join("1" if self.alpha >> p & 1 else "0" for p in range(M))
        beta = "".join("1" if self.beta >> p & 1 else "0" for p in range(M))
        return alpha + beta

    @classmethod
    def from_string(cls, text: str) -> "Determinant":
        """Parse the 2M-character text form.

        Raises:
            ShapeError: Odd length or characters other than 0/1.
        """
        if len(text) % 2 != 0 or set(text) - {"0", "1"}:
            raise ShapeError(f"not a determinant string: {text!r}")
        m = len(text) // 2
        alpha = sum(1 << p for p in range(m) if text[p] == "1")
        beta = sum(1 << p for p in range(m) if text[m + p] == "1")
        return cls(alpha=alpha, beta=beta)


class DeterminantBasis:
    """An ordered, duplicate-free set of determinants with index lookup.

    Determinants are kept sorted lexicographically on (alpha, beta).
    """

    def __init__(self, determinants, M: int):
        self.M = M
        dets = sorted(set(determinants))
        for det in dets:
            if det.alpha >> M or det.beta >> M:
                raise ShapeError(f"determinant does not fit in {M} orbitals")
        self.determinants: list[Determinant] = dets
        self._index = {det: i for i, det in enumerate(dets)}

    def __len__(self) -> int:
        return len(self.determinants)

    def __iter__(self):
        return iter(self.determinants)

    def __getitem__(self, i: int) -> Determinant:
        return self.determinants[i]

    def __contains__(self, det: Determinant) -> bool:
        return det in self._index

    def index(self, det: Determinant) -> int:
        """Position of ``det`` in the basis ordering.

        Raises:
            KeyError: The determinant is not in the basis.
        """
        return self._index[det]


def excitation_degree(a: Determinant, b: Determinant) -> int:
    """Total number of orbital substitutions separating two determinants.

    Counted per spin channel and summed; each channel must conserve its
    electron count for the notion to make sense, but no check is done here.
    """
    return ((a.alpha ^ b.alpha).bit_count() + (a.beta ^ b.beta).bit_count()) // 2


def _diagonal_element(det: Determinant, ints: IntegralSet) -> float:
    occ_a = det.occupied_alpha()
    occ_b = det.occupied_beta()
    energy = ints.e_core
    for p in occ_a:
        energy += ints.h[p, p]
    for p in occ_b:
        energy += ints.h[p, p]
    for occ in (occ_a, occ_b):
        for i, p in enumerate(occ):
            for q in occ[i + 1 :]:
                energy += ints.two_electron(p, p, q, q) - ints.two_electron(p, q, q, p)
    for p in occ_a:
        for q in occ_b:
            energy += ints.two_electron(p, p, q, q)
    return energy


def _single_element(
    bra_same: int,
    ket_same: int,
    other_occ: list[int],
    ints: IntegralSet,
) -> float:
    """Element for a single excitation within one spin channel.

    Args:
        bra_same: Occupation mask of the excited spin channel in the bra.
        ket_same: Same channel in the ket.
        other_occ: Occupied orbitals of the spectator spin channel.
        ints: Integral table.
    """
    hole = _bits(ket_same & ~bra_same)[0]
    particle = _bits(bra_same & ~ket_same)[0]
    phase = single_excitation_phase(ket_same, hole, particle)
    value = ints.h[particle, hole]
    for q in _bits(ket_same & ~(1 << hole)):
        value += ints.two_electron(particle, hole, q, q)
        value -= ints.two_electron(particle, q, q, hole)
    for q in other_occ:
        value += ints.two_electron(particle, hole, q, q)
    return phase * value


def _same_spin_double(bra: int, ket: int, ints: IntegralSet) -> float:
    h1, h2 = _bits(ket & ~bra)
    p1, p2 = _bits(bra & ~ket)
    phase = _double_phase(ket, (h1, h2), (p1, p2))
    return phase * (
        ints.two_electron(p1, h1, p2, h2) - ints.two_electron(p1, h2, p2, h1)
    )


def slater_condon(a: Determinant, b: Determinant, ints: IntegralSet) -> float:
    """Hamiltonian matrix element <a|H|b> between two determinants.

    The core energy enters diagonal elements only. Determinants that differ
    in per-spin electron count, or by more than a double excitation, give
    exactly zero.

    Raises:
        ShapeError: Either determinant occupies orbitals at or above ints.M.
    """
    m = ints.M
    if (a.alpha | a.beta | b.alpha | b.beta) >> m:
        raise ShapeError(f"determinant does not fit in {m} orbitals")
    if a.n_alpha != b.n_alpha or a.n_beta != b.n_beta:
        return 0.0

    diff_a = (a.alpha ^ b.alpha).bit_count() // 2
    diff_b = (a.beta ^ b.beta).bit_count() // 2
    degree = diff_a + diff_b
    if degree > 2:
        return 0.0
    if degree == 0:
        return _diagonal_element(a, ints)
    if degree == 1:
        if diff_a == 1:
            return _single_element(a.alpha, b.alpha, b.occupied_beta(), ints)
        return _single_element(a.beta, b.beta, b.occupied_alpha(), ints)
    if diff_a == 2:
        return _same_spin_double(a.alpha, b.alpha, ints)
    if diff_b == 2:
        return _same_spin_double(a.beta, b.beta, ints)
    # One substitution in each spin channel.
    hole_a = _bits(b.alpha & ~a.alpha)[0]
    part_a = _bits(a.alpha & ~b.alpha)[0]
    hole_b = _bits(b.beta & ~a.beta)[0]
    part_b = _bits(a.beta & ~b.beta)[0]
    phase = single_excitation_phase(b.alpha, hole_a, part_a) * single_excitation_phase(
        b.beta, hole_b, part_b
    )
    return phase * ints.two_electron(part_a, hole_a, part_b, hole_b)


def enumerate_connected(det: Determinant, M: int) -> list[Determinant]:
    """All determinants reachable from ``det`` by one or two substitutions.

    The input determinant itself is excluded and the output is sorted in
    basis order with no duplicates.

    Args:
        det: Reference determinant.
        M: Number of spatial orbitals; occupations must fit below it.

    Raises:
        ShapeError: ``det`` occupies orbitals at or above M.
    """
    if det.alpha >> M or det.beta >> M:
        raise ShapeError(f"determinant does not fit in {M} orbitals")
    occ_a = det.occupied_alpha()
    occ_b = det.occupied_beta()
    vir_a = [p for p in range(M) if not det.alpha >> p & 1]
    vir_b = [p for p in range(M) if not det.beta >> p & 1]

    def singles(mask: int, occ: list[int], vir: list[int]) -> list[int]:
        return [mask ^ (1 << h) | (1 << p) for h in occ for p in vir]

    out = set()
    singles_a = singles(det.alpha, occ_a, vir_a)
    singles_b = singles(det.beta, occ_b, vir_b)
    for mask in singles_a:
        out.add(Determinant(mask, det.beta))
    for mask in singles_b:
        out.add(Determinant(det.alpha, mask))
    # Same-spin doubles: two holes, two particles within one channel.
    for mask, occ, vir, is_alpha in (
        (det.alpha, occ_a, vir_a, True),
        (det.beta, occ_b, vir_b, False),
    ):
        for i, h1 in enumerate(occ):
            for h2 in occ[i + 1 :]:
                for j, p1 in enumerate(vir):
                    for p2 in vir[j + 1 :]:
                        new = mask ^ (1 << h1) ^ (1 << h2) | (1 << p1) | (1 << p2)
                        if is_alpha:
                            out.add(Determinant(new, det.beta))
                        else:
                            out.add(Determinant(det.alpha, new))
    # Opposite-spin doubles: one substitution in each channel.
    for mask_a in singles_a:
        for mask_b in singles_b:
            out.add(Determinant(mask_a, mask_b))
    out.discard(det)
    return sorted(out)
