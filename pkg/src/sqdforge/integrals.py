"""Molecular Hamiltonian integrals in FCIDUMP form.

Stores the one-electron integrals h_pr as a dense symmetric matrix and the
two-electron integrals (pr|qs) in chemists' notation with full 8-fold
permutational symmetry, packed into the conventional compound-index lower
triangle: pr and qs each run over the lower triangle p >= r, and only
(pr) >= (qs) is kept. The core energy absorbs the nuclear repulsion plus any
frozen-core contribution supplied by the file producer; frozen-core reduction
itself is out of scope here.

FCIDUMP lines are `value p r q s` with 1-based indices; the index quadruple
(0,0,0,0) carries the core energy and (p,r,0,0) carries h_pr.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import ConsistencyError, ParseError

__all__ = [
    "IntegralSet",
    "parse_fcidump",
    "write_fcidump",
    "get_two_electron",
]


def _pair_index(p: int, r: int) -> int:
    """Compound index of the unordered orbital pair (p, r), 0-based."""
    if p < r:
        p, r = r, p
    return p * (p + 1) // 2 + r


def _packed_index(p: int, r: int, q: int, s: int) -> int:
    """Position of (pr|qs) in the packed two-electron table, 0-based."""
    pr = _pair_index(p, r)
    qs = _pair_index(q, s)
    if pr < qs:
        pr, qs = qs, pr
    return pr * (pr + 1) // 2 + qs


def _packed_size(m: int) -> int:
    npair = m * (m + 1) // 2
    return npair * (npair + 1) // 2


@dataclass(frozen=True, eq=False)
class IntegralSet:
    """Frozen-core molecular Hamiltonian in a basis of M spatial orbitals.

    Attributes:
        M: Number of spatial orbitals.
        n_alpha: Number of spin-up electrons.
        n_beta: Number of spin-down electrons.
        e_core: Scalar energy offset in hartree (nuclear repulsion plus any
            frozen-core energy).
        h: Dense (M, M) symmetric one-electron integrals h_pr in hartree.
        g: Packed two-electron integrals (pr|qs) in hartree, 8-fold symmetric.
        ms2: Twice the spin projection, n_alpha - n_beta.
    """

    M: int
    n_alpha: int
    n_beta: int
    e_core: float
    h: np.ndarray
    g: np.ndarray
    ms2: int

    def __post_init__(self):
        if self.h.shape != (self.M, self.M):
            raise ValueError(f"h has shape {self.h.shape}, expected ({self.M}, {self.M})")
        if self.g.shape != (_packed_size(self.M),):
            raise ValueError("g is not a packed two-electron table for M orbitals")
        if not (0 <= self.n_alpha <= self.M and 0 <= self.n_beta <= self.M):
            raise ConsistencyError(
                f"electron counts ({self.n_alpha}, {self.n_beta}) outside [0, {self.M}]"
            )
        if not np.allclose(self.h, self.h.T, atol=1e-12, rtol=0.0):
            raise ValueError("one-electron integrals are not symmetric")
        self.h.flags.writeable = False
        self.g.flags.writeable = False

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    def one_electron(self, p: int, r: int) -> float:
        """Return h_pr with 0-based orbital indices."""
        return float(self.h[p, r])

    def two_electron(self, p: int, r: int, q: int, s: int) -> float:
        """Return (pr|qs) with 0-based orbital indices."""
        return float(self.g[_packed_index(p, r, q, s)])

    @classmethod
    def from_arrays(
        cls,
        h: np.ndarray,
        g4: np.ndarray,
        n_alpha: int,
        n_beta: int,
        e_core: float = 0.0,
    ) -> "IntegralSet":
        """Build an IntegralSet from dense arrays, symmetrizing both tables.

        Args:
            h: (M, M) one-electron integrals; symmetrized as (h + h.T)/2.
            g4: (M, M, M, M) two-electron integrals (pr|qs); averaged over the
                8 equivalent index orders before packing.
            n_alpha: Spin-up electron count.
            n_beta: Spin-down electron count.
            e_core: Scalar energy offset.
        """
        h = np.asarray(h, dtype=float)
        g4 = np.asarray(g4, dtype=float)
        m = h.shape[0]
        hs = 0.5 * (h + h.T)
        gs = g4
        gs = 0.5 * (gs + gs.transpose(1, 0, 2, 3))
        gs = 0.5 * (gs + gs.transpose(0, 1, 3, 2))
        gs = 0.5 * (gs + gs.transpose(2, 3, 0, 1))
        packed = np.zeros(_packed_size(m))
        for p in range(m):
            for r in range(p + 1):
                for q in range(m):
                    for s in range(q + 1):
                        if _pair_index(p, r) >= _pair_index(q, s):
                            packed[_packed_index(p, r, q, s)] = gs[p, r, q, s]
        return cls(
            M=m,
            n_alpha=n_alpha,
            n_beta=n_beta,
            e_core=float(e_core),
            h=hs,
            g=packed,
            ms2=n_alpha - n_beta,
        )


_HEADER_FIELD = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*=\s*([-+0-9.,eEdD\s]*)")


def _parse_header(lines: list[str], n_lines: int) -> tuple[int, int, int]:
    """Extract NORB, NELEC, MS2 from the &FCI header lines."""
    text = " ".join(lines)
    text = text.lstrip()[4:]  # drop the &FCI tag
    text = text.replace("&END", " ").replace("/", " ")
    fields: dict[str, str] = {}
    for key, value in _HEADER_FIELD.findall(text):
        fields[key.upper()] = value
    try:
        norb = int(fields["NORB"].split(",")[0])
        nelec = int(fields["NELEC"].split(",")[0])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"header lacks a valid NORB/NELEC field ({exc})", line=1) from exc
    ms2 = 0
    if "MS2" in fields:
        try:
            ms2 = int(fields["MS2"].split(",")[0])
        except ValueError as exc:
            raise ParseError("header MS2 field is not an integer", line=1) from exc
    if norb < 1:
        raise ParseError(f"NORB={norb} is not positive", line=1)
    return norb, nelec, ms2


def parse_fcidump(text: str | TextIO) -> IntegralSet:
    """Parse an FCIDUMP character stream into a fully symmetrized IntegralSet.

    Unspecified integrals default to zero. NELEC and MS2 fix the per-spin
    electron counts through n_alpha - n_beta = MS2 and n_alpha + n_beta = NELEC.

    Args:
        text: FCIDUMP contents as a string or readable text stream.

    Returns:
        The parsed IntegralSet.

    Raises:
        ParseError: Malformed header or body line (carries the line number).
        IndexError: An orbital index outside [0, NORB].
        ConsistencyError: NELEC and MS2 of different parity, or electron
            counts outside [0, NORB].
    """
    if isinstance(text, str):
        stream: TextIO = io.StringIO(text)
    else:
        stream = text
    lines = stream.read().splitlines()

    first = 0
    while first < len(lines) and not lines[first].strip():
        first += 1
    if first >= len(lines) or not lines[first].lstrip().upper().startswith("&FCI"):
        raise ParseError("expected an &FCI header", line=first + 1)

    header_lines = []
    body_start = None
    for i in range(first, len(lines)):
        header_lines.append(lines[i])
        upper = lines[i].upper()
        if "&END" in upper or "/" in lines[i]:
            body_start = i + 1
            break
    if body_start is None:
        raise ParseError("header never terminated by &END or /", line=len(lines))

    norb, nelec, ms2 = _parse_header(header_lines, first + 1)
    if (nelec + ms2) % 2 != 0:
        raise ConsistencyError(f"NELEC={nelec} and MS2={ms2} have incompatible parity")
    n_alpha = (nelec + ms2) // 2
    n_beta = (nelec - ms2) // 2
    if not (0 <= n_alpha <= norb and 0 <= n_beta <= norb):
        raise ConsistencyError(
            f"electron counts ({n_alpha}, {n_beta}) outside [0, {norb}]"
        )

    h = np.zeros((norb, norb))
    g = np.zeros(_packed_size(norb))
    e_core = 0.0
    for lineno, raw in enumerate(lines[body_start:], start=body_start + 1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise ParseError(f"expected `value p r q s`, got {len(tokens)} tokens", line=lineno)
        try:
            value = float(tokens[0].replace("D", "e").replace("d", "e"))
            p, r, q, s = (int(t) for t in tokens[1:])
        except ValueError as exc:
            raise ParseError(f"unreadable body line ({exc})", line=lineno) from exc
        for idx in (p, r, q, s):
            if not 0 <= idx <= norb:
                raise IndexError(
                    f"line {lineno}: orbital index {idx} outside [0, {norb}]"
                )
        if p == r == q == s == 0:
            e_core = value
        elif q == 0 and s == 0 and p > 0 and r > 0:
            h[p - 1, r - 1] = value
            h[r - 1, p - 1] = value
        elif p > 0 and r > 0 and q > 0 and s > 0:
            g[_packed_index(p - 1, r - 1, q - 1, s - 1)] = value
        else:
            raise ParseError(f"unsupported index pattern ({p},{r},{q},{s})", line=lineno)

    return IntegralSet(
        M=norb, n_alpha=n_alpha, n_beta=n_beta, e_core=e_core, h=h, g=g, ms2=ms2
    )


def write_fcidump(ints: IntegralSet) -> str:
    """Serialize an IntegralSet back to FCIDUMP text.

    Indices are emitted bit-exactly; values carry 16 significant digits.
    Zero entries are omitted, and the core energy line closes the file.
    """
    out = [f"&FCI NORB={ints.M},NELEC={ints.n_electrons},MS2={ints.ms2},", "&END"]

    def fmt(value: float, p: int, r: int, q: int, s: int) -> str:
        return f"{value:.16g} {p} {r} {q} {s}"

    for p in range(ints.M):
        for r in range(p + 1):
            for q in range(p + 1):
                for s in range(q + 1):
                    if _pair_index(q, s) > _pair_index(p, r):
                        continue
                    value = ints.two_electron(p, r, q, s)
                    if value != 0.0:
                        out.append(fmt(value, p + 1, r + 1, q + 1, s + 1))
    for p in range(ints.M):
        for r in range(p + 1):
            if ints.h[p, r] != 0.0:
                out.append(fmt(float(ints.h[p, r]), p + 1, r + 1, 0, 0))
    out.append(fmt(ints.e_core, 0, 0, 0, 0))
    return "\n".join(out) + "\n"


def get_two_electron(ints: IntegralSet, p: int, r: int, q: int, s: int) -> float:
    """Return (pr|qs) for 1-based orbital indices, resolving 8-fold symmetry.

    Args:
        ints: Integral table.
        p, r, q, s: Orbital indices in [1, M].

    Raises:
        IndexError: Any index outside [1, M].
    """
    for idx in (p, r, q, s):
        if not 1 <= idx <= ints.M:
            raise IndexError(f"orbital index {idx} outside [1, {ints.M}]")
    return ints.two_electron(p - 1, r - 1, q - 1, s - 1)
