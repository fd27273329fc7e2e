"""Zero-variance extrapolation of energy-variance point sets.

Three routes to a ground-state estimate from (V, E) data:

* ols_fit: classical least squares, intercept plus a Student-t confidence
  interval under the homoskedastic linear model.
* GEV: per subspace-fraction group, recombine the batch wavefunctions into
  their lowest generalized eigenvector (with Lowdin regularization of the
  overlap), then fit the combined points. Falls back to the minimum observed
  energy when a combined variance is already below 1e-5 or the fitted slope
  turns negative.
* LMM: spectral clustering of the points followed by an E-M loop of
  per-cluster fits; the cluster with the lowest intercept is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import t as student_t
from sklearn.cluster import SpectralClustering

from .determinants import DeterminantBasis
from .errors import (
    ClusterSizeError,
    ConfigurationError,
    DegenerateAbscissa,
    RegularizationError,
)
from .integrals import IntegralSet
from .subspace import (
    SubspaceWavefunction,
    energy_and_variance,
    project_hamiltonian,
)

__all__ = [
    "LinearFit",
    "ExtrapolationResult",
    "ols_fit",
    "gev_combine",
    "gev_extrapolate",
    "lmm_fit",
]

VARIANCE_FLOOR = 1e-5
DEFAULT_OVERLAP_EPS = 1e-5


@dataclass(frozen=True)
class LinearFit:
    """One least-squares line E = slope * V + intercept.

    Attributes:
        slope: Fitted slope in hartree per hartree^2.
        intercept: Fitted zero-variance energy in hartree.
        ci_half_width: Half-width of the 95% confidence interval on the
            intercept; infinite for a 2-point fit.
        adj_r2: Adjusted R^2; NaN for a 2-point fit.
        n_points: Number of points behind the fit.
    """

    slope: float
    intercept: float
    ci_half_width: float
    adj_r2: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigurationError(f"a fit needs at least 2 points, got {self.n_points}")
        if self.ci_half_width < 0.0:
            raise ConfigurationError("negative confidence half-width")


@dataclass(frozen=True)
class ExtrapolationResult:
    """A ground-state estimate with its provenance.

    Attributes:
        estimate: Energy estimate in hartree.
        ci_low: Lower 95% bound, None when the method carries no interval.
        ci_high: Upper 95% bound, likewise.
        method: One of OLS, GEV, LMM, MIN_FALLBACK.
        diagnostics: Method-specific extras (points used, truncation counts,
            cluster assignments).
    """

    estimate: float
    ci_low: float | None
    ci_high: float | None
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("OLS", "GEV", "LMM", "MIN_FALLBACK"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.method == "MIN_FALLBACK":
            if self.ci_low is not None or self.ci_high is not None:
                raise ConfigurationError("fallback results carry no interval")
        else:
            if self.ci_low is None or self.ci_high is None:
                raise ConfigurationError("fit results need an interval")
            if not self.ci_low <= self.estimate <= self.ci_high:
                raise ConfigurationError("estimate outside its own interval")


def ols_fit(points: Sequence[tuple[float, float]]) -> LinearFit:
    """Least-squares line through (V, E) points with an intercept interval.

    The interval follows the classical homoskedastic model:
    SE(q) = s * sqrt(1/n + mean(V)^2 / Sxx) with s^2 = SSR/(n-2), scaled by
    the two-sided Student-t quantile at 95% with n-2 degrees of freedom.

    Raises:
        ConfigurationError: Fewer than 2 points.
        DegenerateAbscissa: All abscissae identical.
    """
    pts = [(float(v), float(e)) for v, e in points]
    n = len(pts)
    if n < 2:
        raise ConfigurationError(f"a fit needs at least 2 points, got {n}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise DegenerateAbscissa("all variance abscissae are identical")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    if n == 2:
        return LinearFit(
            slope=slope,
            intercept=intercept,
            ci_half_width=np.inf,
            adj_r2=float("nan"),
            n_points=2,
        )
    s2 = ssr / (n - 2)
    se_intercept = float(np.sqrt(s2 * (1.0 / n + x.mean() ** 2 / sxx)))
    half = float(student_t.ppf(0.975, n - 2) * se_intercept)
    if sst <= 1e-300:
        r2 = 1.0 if ssr <= 1e-300 else 0.0
    else:
        r2 = 1.0 - ssr / sst
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - 2)
    return LinearFit(
        slope=slope, intercept=intercept, ci_half_width=half, adj_r2=adj_r2, n_points=n
    )


def _embed(states: list[SubspaceWavefunction], union: DeterminantBasis) -> np.ndarray:
    mat = np.zeros((len(union), len(states)))
    for col, psi in enumerate(states):
        for i, det in enumerate(psi.basis):
            mat[union.index(det), col] = psi.coeffs[i]
    return mat


def _gev_combine_impl(
    states: list[SubspaceWavefunction],
    ints: IntegralSet,
    eps: float,
) -> tuple[SubspaceWavefunction, float, int]:
    """Shared core: returns (combined state, eigenvalue, truncated count)."""
    if not states:
        raise ConfigurationError("no states to combine")
    m = states[0].basis.M
    union_dets = set()
    for psi in states:
        if psi.basis.M != m:
            raise ConfigurationError("states span different orbital counts")
        union_dets.update(psi.basis)
    union = DeterminantBasis(union_dets, m)
    vmat = _embed(states, union)
    overlap = vmat.T @ vmat
    hmat_union = project_hamiltonian(union, ints)
    hsub = vmat.T @ (hmat_union @ vmat)
    hsub = 0.5 * (hsub + hsub.T)

    svals, svecs = np.linalg.eigh(overlap)
    keep = svals >= eps
    n_truncated = int(np.sum(~keep))
    if not np.any(keep):
        raise RegularizationError(
            f"all {len(svals)} overlap eigenvalues fall below eps={eps}"
        )
    xmat = svecs[:, keep] / np.sqrt(svals[keep])
    s_reg = xmat.T @ overlap @ xmat
    s_eigs = np.linalg.eigvalsh(0.5 * (s_reg + s_reg.T))
    kappa = float(s_eigs[-1] / s_eigs[0])
    if abs(kappa - 1.0) >= 1e-8:
        raise RegularizationError(
            f"regularized overlap has condition number {kappa}, not 1"
        )
    h_reg = xmat.T @ hsub @ xmat
    h_reg = 0.5 * (h_reg + h_reg.T)
    evals, evecs = np.linalg.eigh(h_reg)
    coeffs = vmat @ (xmat @ evecs[:, 0])
    norm = np.linalg.norm(coeffs)
    coeffs = coeffs / norm
    if coeffs[int(np.argmax(np.abs(coeffs)))] < 0.0:
        coeffs = -coeffs
    combined = SubspaceWavefunction(basis=union, coeffs=coeffs)
    return combined, float(evals[0]), n_truncated


def gev_combine(
    states: list[SubspaceWavefunction],
    ints: IntegralSet,
    eps: float = DEFAULT_OVERLAP_EPS,
) -> SubspaceWavefunction:
    """Lowest-energy linear combination of subspace wavefunctions.

    Builds the cross-state Hamiltonian and overlap matrices over the union
    basis, discards overlap eigendirections below eps (Lowdin step), checks
    the surviving block is conditioned like the identity, and solves the
    reduced eigenproblem. The combination is returned on the union basis,
    normalized, with the usual sign convention.

    Raises:
        RegularizationError: Every overlap eigenvalue fell below eps, or the
            regularized overlap failed the |cond - 1| < 1e-8 check.
    """
    combined, _, _ = _gev_combine_impl(states, ints, eps)
    return combined


def _min_fallback(points: list[tuple[float, float, float]], diagnostics: dict) -> ExtrapolationResult:
    best = min(e for _, _, e in points)
    return ExtrapolationResult(
        estimate=best, ci_low=None, ci_high=None, method="MIN_FALLBACK", diagnostics=diagnostics
    )


def gev_extrapolate(
    grouped: dict[float, list[SubspaceWavefunction]],
    ints: IntegralSet,
    eps: float = DEFAULT_OVERLAP_EPS,
) -> ExtrapolationResult:
    """Recombine each subspace-fraction group, then extrapolate to V = 0.

    Each group is reduced to one combined state whose exact (V, E) pair
    becomes a fit point. If any combined variance is below 1e-5 the ground
    state is considered reached and the minimum combined energy is returned
    as MIN_FALLBACK; a negative fitted slope triggers the same fallback.

    Args:
        grouped: Map of subspace-fraction label to that group's states.
        ints: Integral table shared by all states.
        eps: Overlap truncation threshold.
    """
    if not grouped:
        raise ConfigurationError("no groups to extrapolate")
    rows: list[tuple[float, float, float]] = []
    truncated: dict[float, int] = {}
    for zeta in sorted(grouped):
        combined, _, n_trunc = _gev_combine_impl(grouped[zeta], ints, eps)
        point = energy_and_variance(combined, ints, zeta=zeta)
        rows.append((zeta, point.variance, point.energy))
        truncated[zeta] = n_trunc
    diagnostics = {
        "points": [
            {"zeta": z, "variance": v, "energy": e} for z, v, e in rows
        ],
        "truncated_eigenvalues": truncated,
    }
    if any(v < VARIANCE_FLOOR for _, v, _ in rows):
        return _min_fallback(rows, diagnostics)
    if len(rows) < 2:
        raise ConfigurationError("need at least 2 subspace-fraction groups for a fit")
    fit = ols_fit([(v, e) for _, v, e in rows])
    diagnostics["fit"] = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "adj_r2": fit.adj_r2,
        "n_points": fit.n_points,
    }
    if fit.slope < 0.0:
        return _min_fallback(rows, diagnostics)
    return ExtrapolationResult(
        estimate=fit.intercept,
        ci_low=fit.intercept - fit.ci_half_width,
        ci_high=fit.intercept + fit.ci_half_width,
        method="GEV",
        diagnostics=diagnostics,
    )


def _cluster_fits(
    x: np.ndarray, y: np.ndarray, labels: np.ndarray, n_clusters: int
) -> dict[int, tuple[float, float]]:
    fits = {}
    for c in range(n_clusters):
        mask = labels == c
        if not np.any(mask):
            continue
        design = np.column_stack([x[mask], np.ones(int(mask.sum()))])
        coef, *_ = np.linalg.lstsq(design, y[mask], rcond=None)
        fits[c] = (float(coef[0]), float(coef[1]))
    return fits


def lmm_fit(
    points: Sequence[tuple[float, float]],
    n_clusters: int = 1,
    seed: int = 0,
) -> ExtrapolationResult:
    """Mixture-of-lines fit: cluster the points, report the lowest intercept.

    Spectral clustering with an RBF affinity (gamma set to one over the
    squared median pairwise distance) seeds the assignment; an E-M loop then
    alternates per-cluster least squares with reassignment of every point to
    the line predicting it best, until assignments stop changing, a cluster
    empties, or 1000 iterations pass. A single cluster degenerates to plain
    ols_fit on all points, reported as method OLS.

    Raises:
        ClusterSizeError: Fewer than 5 points per requested cluster up
            front, or any final cluster smaller than 5 points.
    """
    pts = [(float(v), float(e)) for v, e in points]
    if n_clusters < 1:
        raise ConfigurationError(f"n_clusters={n_clusters} must be at least 1")
    if len(pts) < 5 * n_clusters:
        raise ClusterSizeError(
            f"{len(pts)} points cannot give {n_clusters} clusters of at least 5"
        )
    if n_clusters == 1:
        fit = ols_fit(pts)
        return ExtrapolationResult(
            estimate=fit.intercept,
            ci_low=fit.intercept - fit.ci_half_width,
            ci_high=fit.intercept + fit.ci_half_width,
            method="OLS",
            diagnostics={
                "fit": {
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "adj_r2": fit.adj_r2,
                    "n_points": fit.n_points,
                },
                "assignments": [0] * len(pts),
            },
        )

    data = np.array(pts)
    x, y = data[:, 0], data[:, 1]
    distances = pdist(data)
    d_med = float(np.median(distances)) if len(distances) else 1.0
    gamma = 1.0 / d_med**2 if d_med > 0.0 else 1.0
    clustering = SpectralClustering(
        n_clusters=n_clusters, affinity="rbf", gamma=gamma, random_state=seed
    )
    labels = clustering.fit_predict(data)

    objective_trace = []
    for _ in range(1000):
        fits = _cluster_fits(x, y, labels, n_clusters)
        if len(fits) < n_clusters:
            break
        errors = np.column_stack(
            [(y - (fits[c][0] * x + fits[c][1])) ** 2 for c in range(n_clusters)]
        )
        objective_trace.append(float(errors[np.arange(len(pts)), labels].sum()))
        new_labels = np.argmin(errors, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    counts = np.bincount(labels, minlength=n_clusters)
    small = [int(c) for c in range(n_clusters) if counts[c] < 5]
    if small:
        raise ClusterSizeError(
            f"clusters {small} ended with fewer than 5 points (sizes {counts.tolist()})"
        )
    cluster_fits = {}
    for c in range(n_clusters):
        cluster_fits[c] = ols_fit([pts[i] for i in range(len(pts)) if labels[i] == c])
    best = min(cluster_fits, key=lambda c: cluster_fits[c].intercept)
    fit = cluster_fits[best]
    return ExtrapolationResult(
        estimate=fit.intercept,
        ci_low=fit.intercept - fit.ci_half_width,
        ci_high=fit.intercept + fit.ci_half_width,
        method="LMM",
        diagnostics={
            "assignments": [int(c) for c in labels],
            "objective_trace": objective_trace,
            "clusters": {
                str(c): {
                    "slope": f.slope,
                    "intercept": f.intercept,
                    "adj_r2": f.adj_r2,
                    "n_points": f.n_points,
                }
                for c, f in cluster_fits.items()
            },
            "reported_cluster": int(best),
        },
    )
