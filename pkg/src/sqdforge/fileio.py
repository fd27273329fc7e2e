"""Readers and writers for the pipeline's on-disk formats.

All writers are deterministic: lines are sorted, floats use fixed formats,
and JSON is emitted with sorted keys, so identical inputs give byte-identical
files. Readers raise ParseError with a line number on malformed input.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Any

import numpy as np

from .benchstats import Reaction, ReactionTable
from .determinants import Determinant, DeterminantBasis
from .errors import ParseError, ShapeError
from .lucj import SampleSet
from .subspace import SubspaceWavefunction

__all__ = [
    "write_samples",
    "read_samples",
    "write_wavefunction",
    "read_wavefunction",
    "write_amplitudes",
    "read_amplitudes",
    "write_energies",
    "read_energies",
    "write_reactions",
    "read_reactions",
    "canonical_json",
]


def write_samples(samples: SampleSet) -> str:
    """Render a sample set: `SHOTS n M m` header, then `bitstring count` lines."""
    lines = [f"SHOTS {samples.n_shots} M {samples.M}"]
    for text in sorted(samples.entries):
        lines.append(f"{text} {samples.entries[text]}")
    return "\n".join(lines) + "\n"


def read_samples(text: str) -> SampleSet:
    """Parse a sample file back into a SampleSet."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty sample file", line=1)
    header = lines[0].split()
    if len(header) != 4 or header[0] != "SHOTS" or header[2] != "M":
        raise ParseError(f"bad header {lines[0]!r}", line=1)
    try:
        n_shots, m = int(header[1]), int(header[3])
    except ValueError:
        raise ParseError(f"bad header {lines[0]!r}", line=1) from None
    entries: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected `bitstring count`, got {line!r}", line=lineno)
        bits, count_text = parts
        if len(bits) != 2 * m or set(bits) - {"0", "1"}:
            raise ParseError(f"bad bitstring {bits!r} for M={m}", line=lineno)
        if bits in entries:
            raise ParseError(f"duplicate bitstring {bits!r}", line=lineno)
        try:
            count = int(count_text)
        except ValueError:
            raise ParseError(f"bad count {count_text!r}", line=lineno) from None
        if count < 1:
            raise ParseError(f"count {count} must be positive", line=lineno)
        entries[bits] = count
    return SampleSet(entries=entries, n_shots=n_shots, M=m)


def write_wavefunction(psi: SubspaceWavefunction, n_alpha: int, n_beta: int) -> str:
    """Render a wavefunction: `M n_alpha n_beta d` header, then amplitude lines."""
    m = psi.basis.M
    lines = [f"{m} {n_alpha} {n_beta} {len(psi.basis)}"]
    for det, coeff in zip(psi.basis, psi.coeffs):
        lines.append(f"{det.to_string(m)} {coeff:.17g}")
    return "\n".join(lines) + "\n"


def read_wavefunction(text: str) -> tuple[SubspaceWavefunction, int, int]:
    """Parse a wavefunction file; returns (state, n_alpha, n_beta)."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty wavefunction file", line=1)
    header = lines[0].split()
    if len(header) != 4:
        raise ParseError(f"bad header {lines[0]!r}", line=1)
    try:
        m, n_alpha, n_beta, d = (int(x) for x in header)
    except ValueError:
        raise ParseError(f"bad header {lines[0]!r}", line=1) from None
    rows: list[tuple[Determinant, float]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected `bitstring coefficient`, got {line!r}", line=lineno)
        try:
            det = Determinant.from_string(parts[0])
        except ShapeError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if len(parts[0]) != 2 * m:
            raise ParseError(f"bitstring length {len(parts[0])} != 2M", line=lineno)
        try:
            coeff = float(parts[1])
        except ValueError:
            raise ParseError(f"bad coefficient {parts[1]!r}", line=lineno) from None
        rows.append((det, coeff))
    if len(rows) != d:
        raise ParseError(f"header promises {d} rows, file has {len(rows)}", line=1)
    basis = DeterminantBasis((det for det, _ in rows), m)
    if len(basis) != len(rows):
        raise ParseError("duplicate determinants", line=1)
    coeffs = np.empty(len(rows))
    for det, coeff in rows:
        coeffs[basis.index(det)] = coeff
    return SubspaceWavefunction(basis=basis, coeffs=coeffs), n_alpha, n_beta


def _write_tensor_section(
    lines: list[str], tag: str, array: np.ndarray, m: int, n_occ_alpha: int, n_occ_beta: int
) -> None:
    lines.append(f"{tag} {m} {n_occ_alpha} {n_occ_beta}")
    for index in np.ndindex(*array.shape):
        value = float(array[index])
        if value == 0.0:
            continue
        lines.append(" ".join(str(i) for i in index) + f" {value:.17g}")


def write_amplitudes(
    t2: np.ndarray,
    t1: np.ndarray | None,
    m: int,
    n_occ_alpha: int,
    n_occ_beta: int,
) -> str:
    """Render t-amplitudes: a T2 section, then a T1 section when present.

    Zero entries are skipped; indices are 0-based (i, j over doubly-occupied
    orbitals, a, b over virtuals).
    """
    n_docc = min(n_occ_alpha, n_occ_beta)
    n_virt = m - max(n_occ_alpha, n_occ_beta)
    if t2.shape != (n_docc, n_docc, n_virt, n_virt):
        raise ShapeError(f"t2 shape {t2.shape} does not match the occupations")
    lines: list[str] = []
    _write_tensor_section(lines, "T2", t2, m, n_occ_alpha, n_occ_beta)
    if t1 is not None:
        if t1.shape != (n_docc, n_virt):
            raise ShapeError(f"t1 shape {t1.shape} does not match the occupations")
        _write_tensor_section(lines, "T1", t1, m, n_occ_alpha, n_occ_beta)
    return "\n".join(lines) + "\n"


def read_amplitudes(text: str) -> tuple[np.ndarray, np.ndarray | None, int, int, int]:
    """Parse an amplitude file; returns (t2, t1 or None, M, n_occ_alpha, n_occ_beta)."""
    t2 = t1 = None
    m = n_occ_alpha = n_occ_beta = None
    current = None
    current_rank = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if parts[0] in ("T2", "T1"):
            if len(parts) != 4:
                raise ParseError(f"bad section header {line!r}", line=lineno)
            try:
                header = tuple(int(x) for x in parts[1:])
            except ValueError:
                raise ParseError(f"bad section header {line!r}", line=lineno) from None
            if m is None:
                m, n_occ_alpha, n_occ_beta = header
            elif header != (m, n_occ_alpha, n_occ_beta):
                raise ParseError("section headers disagree", line=lineno)
            n_docc = min(n_occ_alpha, n_occ_beta)
            n_virt = m - max(n_occ_alpha, n_occ_beta)
            if parts[0] == "T2":
                if t2 is not None:
                    raise ParseError("duplicate T2 section", line=lineno)
                t2 = np.zeros((n_docc, n_docc, n_virt, n_virt))
                current, current_rank = t2, 4
            else:
                if t1 is not None:
                    raise ParseError("duplicate T1 section", line=lineno)
                t1 = np.zeros((n_docc, n_virt))
                current, current_rank = t1, 2
            continue
        if current is None:
            raise ParseError(f"value line before any section header: {line!r}", line=lineno)
        if len(parts) != current_rank + 1:
            raise ParseError(
                f"expected {current_rank} indices and a value, got {line!r}", line=lineno
            )
        try:
            index = tuple(int(x) for x in parts[:-1])
            value = float(parts[-1])
        except ValueError:
            raise ParseError(f"bad amplitude line {line!r}", line=lineno) from None
        for axis, i in enumerate(index):
            if not 0 <= i < current.shape[axis]:
                raise ParseError(f"index {i} out of range on axis {axis}", line=lineno)
        current[index] = value
    if t2 is None:
        raise ParseError("no T2 section", line=1)
    return t2, t1, m, n_occ_alpha, n_occ_beta


def write_energies(energies: dict[str, dict[str, float]]) -> str:
    """Render a species/method/energy table as CSV, rows sorted."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["species", "method", "energy_hartree"])
    for species in sorted(energies):
        for method in sorted(energies[species]):
            writer.writerow([species, method, f"{energies[species][method]:.17g}"])
    return buffer.getvalue()


def read_energies(text: str) -> dict[str, dict[str, float]]:
    """Parse an energies CSV into a species -> method -> energy map."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty energies file", line=1) from None
    if header != ["species", "method", "energy_hartree"]:
        raise ParseError(f"bad header {header!r}", line=1)
    energies: dict[str, dict[str, float]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 columns, got {row!r}", line=lineno)
        species, method, energy_text = row
        try:
            energy = float(energy_text)
        except ValueError:
            raise ParseError(f"bad energy {energy_text!r}", line=lineno) from None
        cell = energies.setdefault(species, {})
        if method in cell:
            raise ParseError(f"duplicate cell ({species!r}, {method!r})", line=lineno)
        cell[method] = energy
    return energies


def write_reactions(table: ReactionTable) -> str:
    """Render a reaction table as JSON."""
    payload = [
        {
            "id": r.id,
            "class": r.reaction_class,
            "reactants": [[s, c] for s, c in r.reactants],
            "products": [[s, c] for s, c in r.products],
        }
        for r in table
    ]
    return canonical_json(payload)


def read_reactions(text: str) -> ReactionTable:
    """Parse a reactions JSON file."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(payload, list):
        raise ParseError("reactions file must hold a list", line=1)
    reactions = []
    for entry in payload:
        try:
            reactions.append(
                Reaction(
                    id=entry["id"],
                    reaction_class=entry["class"],
                    reactants=tuple((s, int(c)) for s, c in entry["reactants"]),
                    products=tuple((s, int(c)) for s, c in entry["products"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad reaction entry {entry!r}: {exc}", line=1) from None
    return ReactionTable(reactions=tuple(reactions))


def canonical_json(obj: Any) -> str:
    """JSON with sorted keys and a stable layout, for byte-identical reruns."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
