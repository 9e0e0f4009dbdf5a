"""Dispersive readout: phase response, IQ synthesis, classification, mitigation.

Single-shot readouts are points in the IQ plane, one blob per level.  A
spherical Gaussian mixture (isotropic per-component covariance) is fitted by
EM and used as the classifier; prepared-versus-reported counts build the
assignment matrix whose inverse mitigates readout error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DIM

DEFAULT_KAPPA_MHZ = 0.524
DEFAULT_CHI_MHZ = 0.288
DEFAULT_PROBE_MHZ = 8782.41


@dataclass(frozen=True)
class ResonatorParams:
    """Reflection readout resonator coupled to the four-level system.

    The resonator frequency when the system sits in level n is
    ``bare_mhz + shift_mhz[n]``; by default successive levels pull the
    resonator down by one dispersive shift each, which reproduces the
    usual two-level design rule (full pi separation when chi equals the
    linewidth) and puts the four responses roughly a quarter turn apart
    when chi is half the linewidth.
    """

    kappa_mhz: float = DEFAULT_KAPPA_MHZ
    chi_mhz: float = DEFAULT_CHI_MHZ
    probe_mhz: float = DEFAULT_PROBE_MHZ
    bare_mhz: float | None = None
    shift_mhz: tuple | None = None

    def __post_init__(self):
        if self.kappa_mhz <= 0:
            raise ValueError("resonator linewidth must be positive")
        if self.shift_mhz is None:
            object.__setattr__(
                self, "shift_mhz", tuple(-n * self.chi_mhz for n in range(DIM))
            )
        if self.bare_mhz is None:
            # centre the probe between the middle pair of responses
            mid = 0.5 * (self.shift_mhz[1] + self.shift_mhz[2])
            object.__setattr__(self, "bare_mhz", self.probe_mhz - mid)


def phase_response(params: ResonatorParams, state: int) -> float:
    """Reflection phase seen by the probe with the system in ``state``.

    The response is the single-port arctangent S-curve: monotone in the
    detuning and saturating to constant values far off resonance.
    """
    if state not in range(DIM):
        raise ValueError("state must be one of 0..3")
    resonance = params.bare_mhz + params.shift_mhz[state]
    detuning = params.probe_mhz - resonance
    return float(2.0 * np.arctan(2.0 * detuning / params.kappa_mhz))


@dataclass(frozen=True)
class IQRecord:
    """Single-shot readout points, optionally with true prepared labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (len(pts),):
                raise ValueError("labels must match the number of points")
            object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return len(self.points)

    def to_csv(self) -> str:
        lines = []
        for k, (i, q) in enumerate(self.points):
            if self.labels is None:
                lines.append(f"{i!r},{q!r}")
            else:
                lines.append(f"{i!r},{q!r},{self.labels[k]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "IQRecord":
        pts, labs = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            pts.append((float(fields[0]), float(fields[1])))
            if len(fields) > 2:
                labs.append(int(fields[2]))
        labels = np.array(labs) if labs else None
        if labels is not None and len(labels) != len(pts):
            raise ValueError("inconsistent label column")
        return cls(np.array(pts), labels)


@dataclass(frozen=True)
class SphericalGmm:
    """Four-component Gaussian mixture with isotropic per-component variance."""

    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.means, dtype=float)
        var = np.asarray(self.variances, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        k = len(mu)
        if mu.shape != (k, 2) or var.shape != (k,) or w.shape != (k,):
            raise ValueError("inconsistent mixture shapes")
        if var.min() <= 0:
            raise ValueError("variances must be positive")
        if abs(w.sum() - 1.0) > 1e-9 or w.min() < 0:
            raise ValueError("weights must be a distribution")
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)
        object.__setattr__(self, "weights", w)

    @property
    def n_components(self) -> int:
        return len(self.means)

    def log_component_densities(self, points: np.ndarray) -> np.ndarray:
        """(n, k) log N(x | mu_k, var_k I)."""
        d2 = ((points[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        return -0.5 * d2 / self.variances[None, :] - np.log(
            2.0 * np.pi * self.variances[None, :]
        )

    def to_text(self) -> str:
        lines = ["# spherical gmm: mean_i mean_q variance weight"]
        for k in range(self.n_components):
            lines.append(
                f"{self.means[k, 0]!r} {self.means[k, 1]!r} "
                f"{self.variances[k]!r} {self.weights[k]!r}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SphericalGmm":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(x) for x in line.split()])
        arr = np.array(rows)
        return cls(arr[:, :2], arr[:, 2], arr[:, 3])


def gmm_from_phase_response(
    params: ResonatorParams,
    radius: float = 1.0,
    sigmas=(0.09, 0.09, 0.11, 0.11),
) -> SphericalGmm:
    """Blob geometry implied by the phase model: means on a circle.

    The two highest states get the larger spread, matching the observed
    blob shapes; exact numbers are configuration, not physics.
    """
    angles = np.array([phase_response(params, n) for n in range(DIM)])
    means = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    var = np.asarray(sigmas, dtype=float) ** 2
    return SphericalGmm(means, var, np.full(DIM, 1.0 / DIM))


def synthesize_shots(p, gmm: SphericalGmm, n: int, seed) -> IQRecord:
    """Draw ``n`` IQ points: component by ``p``, then an isotropic Gaussian."""
    p = np.asarray(p, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9 or p.min() < -1e-12:
        raise ValueError("probabilities must be normalized")
    rng = np.random.default_rng(seed)
    labels = rng.choice(gmm.n_components, size=n, p=p.clip(min=0) / p.clip(min=0).sum())
    noise = rng.standard_normal((n, 2))
    points = gmm.means[labels] + np.sqrt(gmm.variances[labels])[:, None] * noise
    return IQRecord(points, labels)


def synthesize_from_labels(labels, gmm: SphericalGmm, seed) -> IQRecord:
    """IQ points for an explicit per-shot label sequence."""
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((len(labels), 2))
    points = gmm.means[labels] + np.sqrt(gmm.variances[labels])[:, None] * noise
    return IQRecord(points, labels)


class GmmFitError(RuntimeError):
    pass


def fit_gmm(
    record: IQRecord,
    k: int = DIM,
    seed=0,
    tol: float = 1e-8,
    max_iter: int = 500,
    max_restarts: int = 10,
) -> SphericalGmm:
    """EM fit of the spherical mixture.

    Initialized from the record's calibration labels when present, otherwise
    with seeded farthest-point means.  The log likelihood is checked to be
    non-decreasing at every step; a collapsing component triggers a
    re-seeded restart.  With labels present, components are re-ordered to
    match the prepared states via maximum-overlap matching.
    """
    pts = record.points
    if len(pts) < 4 * k:
        raise ValueError("need at least 4k points to fit k components")
    rng = np.random.default_rng(seed)
    last_error: Exception | None = None
    for _ in range(max_restarts):
        try:
            gmm = _fit_gmm_once(pts, record.labels, k, rng, tol, max_iter)
            if record.labels is not None:
                gmm = _relabel(gmm, record)
            return gmm
        except GmmFitError as exc:
            last_error = exc
    raise GmmFitError(f"EM failed after {max_restarts} restarts: {last_error}")


def _init_means(pts: np.ndarray, k: int, rng) -> np.ndarray:
    means = [pts[rng.integers(len(pts))]]
    for _ in range(1, k):
        d2 = np.min(
            ((pts[:, None, :] - np.array(means)[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        total = d2.sum()
        if total <= 0:
            means.append(pts[rng.integers(len(pts))])
        else:
            means.append(pts[rng.choice(len(pts), p=d2 / total)])
    return np.array(means)


def _fit_gmm_once(pts, labels, k, rng, tol, max_iter) -> SphericalGmm:
    n = len(pts)
    if labels is not None and len(np.unique(labels)) == k:
        means = np.stack([pts[labels == c].mean(axis=0) for c in range(k)])
        var = np.array(
            [((pts[labels == c] - means[c]) ** 2).sum(axis=1).mean() / 2.0 for c in range(k)]
        )
        weights = np.bincount(labels, minlength=k) / n
    else:
        means = _init_means(pts, k, rng)
        var = np.full(k, ((pts - pts.mean(axis=0)) ** 2).sum(axis=1).mean() / 2.0)
        weights = np.full(k, 1.0 / k)
    var = var.clip(min=1e-12)

    prev_ll = -np.inf
    for _ in range(max_iter):
        gmm = SphericalGmm(means, var, weights.clip(min=1e-300) / weights.sum())
        log_dens = gmm.log_component_densities(pts) + np.log(gmm.weights[None, :])
        m = log_dens.max(axis=1, keepdims=True)
        log_norm = m[:, 0] + np.log(np.exp(log_dens - m).sum(axis=1))
        ll = float(log_norm.mean())
        if ll < prev_ll - 1e-10:
            raise GmmFitError("log likelihood decreased during EM")
        resp = np.exp(log_dens - log_norm[:, None])
        nk = resp.sum(axis=0)
        if nk.min() < 1e-10:
            raise GmmFitError("component collapsed to zero responsibility")
        means = (resp.T @ pts) / nk[:, None]
        d2 = ((pts[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        var = (resp * d2).sum(axis=0) / (2.0 * nk)
        if var.min() < 1e-12:
            raise GmmFitError("component variance collapsed")
        weights = nk / n
        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll
    return SphericalGmm(means, var, weights / weights.sum())


def _relabel(gmm: SphericalGmm, record: IQRecord) -> SphericalGmm:
    assigned = classify(gmm, record.points)
    overlap = np.zeros((gmm.n_components, gmm.n_components))
    for comp, true in zip(assigned, record.labels):
        overlap[comp, true] += 1
    rows, cols = linear_sum_assignment(-overlap)
    order = np.empty(gmm.n_components, dtype=int)
    order[cols] = rows
    return SphericalGmm(gmm.means[order], gmm.variances[order], gmm.weights[order])


def classify(gmm: SphericalGmm, points) -> np.ndarray:
    """Maximum-posterior component per point; ties break to the lower index."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scores = gmm.log_component_densities(pts) + np.log(gmm.weights[None, :])
    return np.argmax(scores, axis=1)


def classification_counts(gmm: SphericalGmm, record: IQRecord) -> np.ndarray:
    return np.bincount(classify(gmm, record.points), minlength=gmm.n_components)


@dataclass(frozen=True)
class AssignmentMatrix:
    """A[i][j] = P(reported j | prepared i); rows are distributions."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.shape != (DIM, DIM):
            raise ValueError("assignment matrix must be 4x4")
        if np.abs(a.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("assignment matrix rows must sum to 1 within 1e-9")
        if a.min() < -1e-12 or a.max() > 1 + 1e-12:
            raise ValueError("assignment matrix entries must lie in [0, 1]")
        object.__setattr__(self, "matrix", a)

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.matrix))

    def to_csv(self) -> str:
        return "\n".join(",".join(repr(v) for v in row) for row in self.matrix) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "AssignmentMatrix":
        rows = [
            [float(v) for v in line.split(",")]
            for line in text.splitlines()
            if line.strip() and not line.startswith("#")
        ]
        return cls(np.array(rows))


def estimate_assignment(counts_per_prepared) -> AssignmentMatrix:
    """Row-normalized prepared-versus-reported counts."""
    c = np.asarray(counts_per_prepared, dtype=float)
    if c.shape != (DIM, DIM):
        raise ValueError("need a 4x4 table of counts")
    totals = c.sum(axis=1)
    if totals.min() < 1:
        raise ValueError("every prepared state needs at least one shot")
    return AssignmentMatrix(c / totals[:, None])


def mitigate(assignment: AssignmentMatrix, reported) -> np.ndarray:
    """Invert the assignment: solve A^T x = reported.

    With rows of A holding P(reported | prepared), the reported column
    vector is A^T times the underlying distribution, hence the transpose
    solve.  The output sums to one but may leave [0, 1]; it is returned
    unclipped on purpose.
    """
    r = np.asarray(reported, dtype=float)
    if r.shape != (DIM,):
        raise ValueError("reported vector must have four entries")
    cond = assignment.condition_number()
    if cond > 1e6:
        raise np.linalg.LinAlgError(
            f"assignment matrix is ill-conditioned (cond = {cond:.3g})"
        )
    total = r.sum()
    x = np.linalg.solve(assignment.matrix.T, r / total if total > 0 else r)
    return x * (total if total > 0 else 1.0)


def remove_outliers(record: IQRecord, fraction: float) -> IQRecord:
    """Drop the lowest-likelihood ceil(n * fraction) points.

    Each point is scored under a plain Gaussian fitted to its own cluster
    (true labels when available, otherwise a fitted mixture's assignment),
    so every removed point scores no better than every kept one.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    n = len(record)
    n_remove = int(np.ceil(n * fraction))
    if n_remove == 0:
        return record
    pts = record.points
    if record.labels is not None:
        clusters = record.labels
    else:
        clusters = classify(fit_gmm(record, seed=0), pts)
    scores = np.empty(n)
    for c in np.unique(clusters):
        sel = clusters == c
        sub = pts[sel]
        mean = sub.mean(axis=0)
        cov = np.cov(sub.T) if len(sub) > 2 else np.eye(2)
        cov = cov + 1e-12 * np.eye(2)
        diff = sub - mean
        inv = np.linalg.inv(cov)
        maha = np.einsum("ni,ij,nj->n", diff, inv, diff)
        scores[sel] = -0.5 * maha - 0.5 * np.log(np.linalg.det(cov))
    keep = np.argsort(scores, kind="stable")[n_remove:]
    keep.sort()
    labels = record.labels[keep] if record.labels is not None else None
    return IQRecord(pts[keep], labels)
