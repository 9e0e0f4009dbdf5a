"""Noise processes of the four-level device.

Population transfer between levels is generated by a per-microsecond rate
matrix; the same rates feed a multi-level amplitude-damping Kraus channel.
Readout imperfections are a two-state misclassification mix and, at the
session level, an assignment matrix estimated elsewhere.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import fractional_matrix_power

from .core import DIM, KrausChannel, QuditDensity, X, gate_unitary

#: reference decay-rate matrix of the target device, 1/us.  Row j holds the
#: transfer out of level j; off-diagonals are negative by convention.
REFERENCE_GAMMA = np.array(
    [
        [0.00044, -0.00044, 0.0, 0.0],
        [-0.00599, 0.00706, -0.00108, 0.0],
        [-0.00055, -0.00802, 0.01112, -0.00255],
        [-0.00017, -0.00078, -0.0118, 0.01222],
    ]
)

#: echo coherence times per neighbouring subspace, us (dephasing disabled by
#: default; see dephasing_factors)
REFERENCE_T2_US = (118.0, 76.0, 35.0)


@dataclass(frozen=True)
class DecayMatrix:
    """Rate generator: populations evolve as P(t) = (I - G^T)^t P(0).

    Invariants: nonnegative diagonal, nonpositive off-diagonals, zero row
    sums within 1e-5, so that I - G^T is column-stochastic with nonnegative
    entries.  Use :meth:`from_rates` to adopt a measured matrix whose rows
    do not balance exactly.
    """

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (DIM, DIM):
            raise ValueError("decay matrix must be 4x4")
        if np.diag(g).min() < 0:
            raise ValueError("decay matrix diagonal must be nonnegative")
        off = g - np.diag(np.diag(g))
        if off.max() > 0:
            raise ValueError("decay matrix off-diagonals must be nonpositive")
        if np.abs(g.sum(axis=1)).max() > 1e-5:
            raise ValueError(
                "decay matrix rows must sum to zero within 1e-5; "
                "repair with DecayMatrix.from_rates"
            )
        if np.diag(g).max() > 1.0:
            raise ValueError("per-unit-time escape probability exceeds 1")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def from_rates(cls, gamma) -> "DecayMatrix":
        """Build from measured rates, rebalancing the diagonal exactly.

        Off-diagonal transfer rates are kept verbatim; each diagonal entry is
        reset to the negated sum of its row's off-diagonals so probability is
        conserved exactly.
        """
        g = np.asarray(gamma, dtype=float).copy()
        off = g - np.diag(np.diag(g))
        np.fill_diagonal(g, -off.sum(axis=1))
        return cls(g)

    def one_step(self) -> np.ndarray:
        """Column-stochastic transfer matrix for one microsecond."""
        return np.eye(DIM) - self.gamma.T


def reference_decay() -> DecayMatrix:
    return DecayMatrix.from_rates(REFERENCE_GAMMA)


def decay_propagate(p0, decay: DecayMatrix, t: float) -> np.ndarray:
    """Populations after waiting ``t`` microseconds.

    Integer ``t`` uses the exact matrix power of the one-microsecond map;
    fractional ``t`` interpolates with the fractional matrix power.
    """
    p = np.asarray(p0, dtype=float)
    if p.shape != (DIM,):
        raise ValueError("population vector must have four entries")
    if abs(p.sum() - 1.0) > 1e-9 or p.min() < -1e-12:
        raise ValueError("populations must be normalized and nonnegative")
    if t < 0:
        raise ValueError("waiting time must be nonnegative")
    M = decay.one_step()
    if float(t).is_integer():
        T = np.linalg.matrix_power(M, int(round(t)))
    else:
        T = fractional_matrix_power(M, float(t)).real
    out = T @ p
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def effective_t1(decay: DecayMatrix | np.ndarray) -> dict[str, float]:
    """Effective T1 per neighbouring subspace: 1 / |rate(j -> j-1)|, us."""
    g = decay.gamma if isinstance(decay, DecayMatrix) else np.asarray(decay, dtype=float)
    return {
        "01": 1.0 / abs(g[1, 0]),
        "12": 1.0 / abs(g[2, 1]),
        "23": 1.0 / abs(g[3, 2]),
    }


@dataclass(frozen=True)
class DampingSpec:
    """Decay probabilities gamma[j][i] for each downward path j -> i (i < j)."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (DIM, DIM):
            raise ValueError("damping spec must be 4x4 (lower triangle used)")
        if np.abs(np.triu(g)).max() > 0:
            raise ValueError("damping spec must be strictly lower triangular")
        if g.min() < 0 or g.max() > 1:
            raise ValueError("decay probabilities must lie in [0, 1]")
        xi = g.sum(axis=1)
        if xi.max() > 1 + 1e-12:
            raise ValueError("total escape probability exceeds 1 for some level")
        object.__setattr__(self, "gamma", g)

    @property
    def xi(self) -> np.ndarray:
        """Total escape probability per level."""
        return self.gamma.sum(axis=1)


def gamma_from_rates(decay: DecayMatrix, t: float) -> DampingSpec:
    """Decay probabilities accumulated over ``t`` microseconds.

    gamma_ji = 1 - exp(-t * |rate(j -> i)|); rate magnitudes are used so the
    conventionally negative off-diagonal entries give positive probabilities.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    g = np.zeros((DIM, DIM))
    for j in range(1, DIM):
        for i in range(j):
            g[j, i] = 1.0 - np.exp(-t * abs(decay.gamma[j, i]))
    return DampingSpec(g)


def damping_channel(spec: DampingSpec) -> KrausChannel:
    """Multi-level amplitude damping.

    One jump operator sqrt(gamma_ji) |i><j| per downward path, and a no-jump
    operator |0><0| + sum_j sqrt(1 - xi_j) |j><j| covering every excited
    level, which is what the completeness sum requires.
    """
    ops = []
    k0 = np.zeros((DIM, DIM), dtype=complex)
    k0[0, 0] = 1.0
    xi = spec.xi
    for j in range(1, DIM):
        k0[j, j] = np.sqrt(1.0 - xi[j])
    ops.append(k0)
    for j in range(1, DIM):
        for i in range(j):
            if spec.gamma[j, i] > 0.0:
                k = np.zeros((DIM, DIM), dtype=complex)
                k[i, j] = np.sqrt(spec.gamma[j, i])
                ops.append(k)
    return KrausChannel(tuple(ops))


@dataclass(frozen=True)
class MisclassificationModel:
    """Symmetric label mixing between the two highest readout states."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in [0, 0.5]")

    def matrix(self) -> np.ndarray:
        e = self.epsilon
        m = np.eye(DIM)
        m[2, 2] = m[3, 3] = 1.0 - e
        m[2, 3] = m[3, 2] = e
        return m


def misclassify(p, model: MisclassificationModel) -> np.ndarray:
    """Reported probabilities under the label-mixing model."""
    p = np.asarray(p, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must be normalized")
    return model.matrix() @ p


def thermal_init(populations) -> QuditDensity:
    """Diagonal density operator with the given level populations."""
    p = np.asarray(populations, dtype=float)
    if abs(p.sum() - 1.0) > 1e-9 or p.min() < 0:
        raise ValueError("populations must be normalized and nonnegative")
    return QuditDensity.from_populations(p / p.sum())


# unitary of the conditional pi-pulse chain applied after classifying level c
def _reset_chain_unitary(classified: int) -> np.ndarray:
    U = np.eye(DIM, dtype=complex)
    for level in range(classified, 0, -1):
        g = X(f"{level - 1}{level}", np.pi)
        U = gate_unitary(g) @ U
    return U


def active_reset(
    rho: QuditDensity,
    rounds: int,
    classifier_error: "MisclassificationModel | np.ndarray | None" = None,
) -> QuditDensity:
    """Measure-and-walk-down reset.

    Each round projectively measures the qudit, classifies the outcome
    (optionally through an error model: a MisclassificationModel or a
    row-stochastic matrix P(classified | actual)), and applies the chain of
    pi pulses that steps the classified level back to the ground state.
    """
    if rounds < 1:
        raise ValueError("need at least one reset round")
    if classifier_error is None:
        confusion = np.eye(DIM)
    elif isinstance(classifier_error, MisclassificationModel):
        confusion = classifier_error.matrix().T  # symmetric anyway
    else:
        confusion = np.asarray(classifier_error, dtype=float)
        if confusion.shape != (DIM, DIM) or np.abs(confusion.sum(axis=1) - 1).max() > 1e-9:
            raise ValueError("classifier error must be a row-stochastic 4x4 matrix")
    chains = [_reset_chain_unitary(c) for c in range(DIM)]
    mat = rho.matrix
    for _ in range(rounds):
        pops = np.real(np.diag(mat)).clip(min=0.0)
        out = np.zeros((DIM, DIM), dtype=complex)
        for actual in range(DIM):
            if pops[actual] <= 0.0:
                continue
            projected = np.zeros((DIM, DIM), dtype=complex)
            projected[actual, actual] = pops[actual]
            for classified in range(DIM):
                w = confusion[actual, classified]
                if w > 0.0:
                    U = chains[classified]
                    out += w * (U @ projected @ U.conj().T)
        mat = out
    return QuditDensity(mat)


def dephasing_factors(duration_us: float, t2_us=REFERENCE_T2_US) -> np.ndarray:
    """Off-diagonal decay multipliers for pure dephasing over a duration.

    Per-level phase-diffusion rates are solved from the three neighbouring
    echo times (ground level pinned to zero), giving the elementwise factor
    exp(-(lam_i + lam_j) t / 2) for coherence (i, j).  This is the Gaussian
    phase-noise channel, CPTP by construction.  Disabled by default in the
    execution pipeline.
    """
    t2 = np.asarray(t2_us, dtype=float)
    lam = np.zeros(DIM)
    for k in range(1, DIM):
        lam[k] = 2.0 / t2[k - 1] - lam[k - 1]
    if lam.min() < 0:
        warnings.warn("echo times imply a negative per-level dephasing rate; clipping")
        lam = lam.clip(min=0.0)
    factors = np.exp(-0.5 * np.add.outer(lam, lam) * duration_us)
    np.fill_diagonal(factors, 1.0)
    return factors
