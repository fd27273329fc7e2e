"""Benchmark bookkeeping: subspace sizing, sample quality, and error tables.

Everything here is plain arithmetic over immutable inputs: the coupled-cluster
parameter count that sets the subspace-size ladder, particle-number
diagnostics of sampled bitstrings, total and reaction energy errors against a
reference column, and box-plot style summaries of signed error lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, MissingDataError, ShapeError
from .lucj import SampleSet

__all__ = [
    "REACTION_CLASSES",
    "DEFAULT_ZETA_LADDER",
    "SampleDiagnostics",
    "StatProfile",
    "Reaction",
    "ReactionTable",
    "EnergyError",
    "ccsd_param_count",
    "subspace_plan",
    "sample_diagnostics",
    "energy_errors",
    "reaction_energy_errors",
    "stat_profile",
]

REACTION_CLASSES = ("TAE", "BDE", "ISO", "HAT", "SN")
DEFAULT_ZETA_LADDER = (0.25, 0.50, 1.00, 2.00, 4.00)


@dataclass(frozen=True)
class SampleDiagnostics:
    """Particle-number quality metrics of a sample set.

    Attributes:
        p_hw: Weighted fraction of bitstrings with the correct total
            electron count.
        p_unif: Probability that a uniformly random bitstring lands in the
            correct sector, the floor p_hw decays to under heavy noise.
        f_sz: Fraction with the alpha half correct minus fraction with the
            beta half correct; nonzero values flag a spin asymmetry.
    """

    p_hw: float
    p_unif: float
    f_sz: float

    def __post_init__(self):
        if not 0.0 <= self.p_hw <= 1.0:
            raise ConfigurationError(f"p_hw={self.p_hw} outside [0, 1]")
        if not 0.0 <= self.p_unif <= 1.0:
            raise ConfigurationError(f"p_unif={self.p_unif} outside [0, 1]")
        if not -1.0 <= self.f_sz <= 1.0:
            raise ConfigurationError(f"f_sz={self.f_sz} outside [-1, 1]")


@dataclass(frozen=True)
class StatProfile:
    """Quartile summary of a list of signed errors, with outlier flags.

    Attributes:
        median: Middle value.
        q1: Lower quartile (inclusive median-of-halves convention).
        q3: Upper quartile.
        iqr: q3 - q1.
        max_w: Upper whisker, q3 + 1.5 * iqr.
        min_w: Lower whisker, q1 - 1.5 * iqr.
        outliers: Sorted values falling strictly outside [min_w, max_w].
    """

    median: float
    q1: float
    q3: float
    iqr: float
    max_w: float
    min_w: float
    outliers: tuple[float, ...]

    def __post_init__(self):
        if not self.q1 <= self.median <= self.q3:
            raise ConfigurationError("quartiles out of order")
        if abs(self.iqr - (self.q3 - self.q1)) > 1e-12:
            raise ConfigurationError("iqr does not match q3 - q1")


@dataclass(frozen=True)
class Reaction:
    """One stoichiometric reaction with a benchmark class label."""

    id: str
    reaction_class: str
    reactants: tuple[tuple[str, int], ...]
    products: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if self.reaction_class not in REACTION_CLASSES:
            raise ConfigurationError(f"unknown reaction class {self.reaction_class!r}")
        if not self.reactants or not self.products:
            raise ConfigurationError(f"reaction {self.id!r} has an empty side")
        for species, coefficient in self.reactants + self.products:
            if not isinstance(coefficient, int) or coefficient < 1:
                raise ConfigurationError(
                    f"reaction {self.id!r}: coefficient {coefficient!r} for "
                    f"{species!r} is not a positive integer"
                )

    def species(self) -> set[str]:
        """All species ids appearing on either side."""
        return {s for s, _ in self.reactants} | {s for s, _ in self.products}


@dataclass(frozen=True)
class ReactionTable:
    """An ordered collection of reactions with unique ids."""

    reactions: tuple[Reaction, ...]

    def __post_init__(self):
        ids = [r.id for r in self.reactions]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("duplicate reaction ids")

    def __iter__(self):
        return iter(self.reactions)

    def __len__(self) -> int:
        return len(self.reactions)


class EnergyError(NamedTuple):
    signed: float
    absolute: float


def ccsd_param_count(n_alpha: int, n_beta: int, m: int) -> int:
    """Number of coupled-cluster singles-and-doubles parameters.

    Counts the reference amplitude, all single substitutions, and all double
    substitutions for (n_alpha, n_beta) electrons in m spatial orbitals. The
    spin-unrestricted count applies when the two electron counts differ; the
    closed-shell count keeps one spin's singles and the ordered double list
    (pairs i<j, a<b kept when the compound index (a,i) does not exceed
    (b,j) lexicographically).
    """
    if not (0 <= n_alpha <= m and 0 <= n_beta <= m):
        raise ConfigurationError(
            f"electron counts ({n_alpha}, {n_beta}) do not fit in {m} orbitals"
        )
    v_alpha = m - n_alpha
    v_beta = m - n_beta
    if n_alpha != n_beta:
        total = 1
        for n, v in ((n_alpha, v_alpha), (n_beta, v_beta)):
            total += n * v + math.comb(n, 2) * math.comb(v, 2)
        total += (n_alpha * v_alpha) * (n_beta * v_beta)
        return total
    n, v = n_alpha, v_alpha
    doubles = sum(
        1
        for i in range(n)
        for j in range(i + 1, n)
        for a in range(v)
        for b in range(a + 1, v)
        if (a, i) <= (b, j)
    )
    return 1 + n * v + doubles


def subspace_plan(
    n_ccsd: int,
    zetas: Sequence[float] = DEFAULT_ZETA_LADDER,
    full_dim: int | None = None,
) -> list[int]:
    """Subspace dimensions d = ceil(zeta * n_ccsd), one per ladder entry.

    Each dimension is clamped to [1, full_dim] when the full sector
    dimension is supplied.
    """
    if n_ccsd < 1:
        raise ConfigurationError(f"n_ccsd={n_ccsd} must be positive")
    plan = []
    for zeta in zetas:
        if zeta <= 0.0:
            raise ConfigurationError(f"zeta={zeta} must be positive")
        d = max(1, math.ceil(zeta * n_ccsd))
        if full_dim is not None:
            d = min(d, full_dim)
        plan.append(d)
    return plan


def sample_diagnostics(
    samples: SampleSet, n_alpha: int, n_beta: int, m: int
) -> SampleDiagnostics:
    """Particle-number diagnostics of a sample set against a target sector.

    p_hw counts a bitstring as correct only when both halves carry the right
    electron number, so a fully depolarized sample set lands on p_unif, the
    probability that a uniform random bitstring does the same.
    """
    if samples.M != m:
        raise ShapeError(f"sample set has M={samples.M}, expected {m}")
    p_hw = samples.weighted_fraction(
        lambda text: text[:m].count("1") == n_alpha and text[m:].count("1") == n_beta
    )
    alpha_ok = samples.weighted_fraction(lambda text: text[:m].count("1") == n_alpha)
    beta_ok = samples.weighted_fraction(lambda text: text[m:].count("1") == n_beta)
    p_unif = math.comb(m, n_alpha) * math.comb(m, n_beta) / 4**m
    return SampleDiagnostics(p_hw=p_hw, p_unif=p_unif, f_sz=alpha_ok - beta_ok)


def energy_errors(
    energies: dict[str, dict[str, float]], reference: str
) -> dict[str, dict[str, EnergyError]]:
    """Signed and absolute per-species energy errors against a reference.

    Args:
        energies: Map species id -> method -> total energy.
        reference: Method name every species must have a value for.

    Raises:
        MissingDataError: A species lacks the reference energy.
    """
    table: dict[str, dict[str, EnergyError]] = {}
    for species in sorted(energies):
        methods = energies[species]
        if reference not in methods:
            raise MissingDataError(species, reference)
        ref = methods[reference]
        table[species] = {}
        for method in sorted(methods):
            signed = methods[method] - ref
            table[species][method] = EnergyError(signed=signed, absolute=abs(signed))
    return table


def reaction_energy_errors(
    table: ReactionTable,
    energies: dict[str, dict[str, float]],
    reference: str,
) -> tuple[dict[str, dict[str, float]], dict[str, dict[str, float]]]:
    """Reaction energy errors and their per-class averages.

    For each reaction the error is the stoichiometric sum of per-species
    errors, reactants minus products. Returns (per-reaction signed errors,
    per-class mean absolute errors), both keyed method-last.

    Raises:
        MissingDataError: A referenced species lacks a needed energy cell.
    """
    errors = energy_errors(energies, reference)
    methods: set[str] = set()
    for reaction in table:
        for species in reaction.species():
            if species not in errors:
                raise MissingDataError(species, reference)
            methods.update(errors[species])
    per_reaction: dict[str, dict[str, float]] = {}
    for reaction in table:
        row = {}
        for method in sorted(methods):
            total = 0.0
            for species, coefficient in reaction.reactants:
                if method not in errors[species]:
                    raise MissingDataError(species, method)
                total += coefficient * errors[species][method].signed
            for species, coefficient in reaction.products:
                if method not in errors[species]:
                    raise MissingDataError(species, method)
                total -= coefficient * errors[species][method].signed
            row[method] = total
        per_reaction[reaction.id] = row
    class_means: dict[str, dict[str, float]] = {}
    for cls in REACTION_CLASSES:
        rows = [per_reaction[r.id] for r in table if r.reaction_class == cls]
        if not rows:
            continue
        class_means[cls] = {
            method: float(np.mean([abs(row[method]) for row in rows]))
            for method in sorted(methods)
        }
    return per_reaction, class_means


def _median_of(half: np.ndarray) -> float:
    return float(np.median(half))


def stat_profile(values: Iterable[float]) -> StatProfile:
    """Quartiles, whiskers, and outliers of a list of signed errors.

    Quartiles use the inclusive convention: the lower quartile is the median
    of the lower half including the middle element when the count is odd,
    and likewise above. Whiskers sit 1.5 interquartile ranges beyond the
    quartiles; values strictly outside are flagged as outliers.
    """
    data = np.sort(np.asarray(list(values), dtype=float))
    n = data.size
    if n == 0:
        raise ConfigurationError("no values to profile")
    median = _median_of(data)
    q1 = _median_of(data[: (n + 1) // 2])
    q3 = _median_of(data[n // 2 :])
    iqr = q3 - q1
    max_w = q3 + 1.5 * iqr
    min_w = q1 - 1.5 * iqr
    outliers = tuple(float(v) for v in data if v < min_w or v > max_w)
    return StatProfile(
        median=median, q1=q1, q3=q3, iqr=iqr, max_w=max_w, min_w=min_w, outliers=outliers
    )
