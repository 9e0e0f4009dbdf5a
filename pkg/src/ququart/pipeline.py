"""Noisy execution of native circuits and the shared measurement pipeline.

One NoiseModel instance describes everything an experiment needs: decay
rates (applied per physical pulse and during the readout window), the
label-mixing strength between the two highest states, and the initial-state
populations.  Label mixing in sampled runs is realized as a per-repeat
swap event with probability epsilon, whose ensemble average equals the
closed-form mixing model; this is what produces the characteristic second
branch ("shadow") in repeated-estimate histograms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DIM, QuditCircuit, QuditDensity, gate_unitary
from .noise import (
    DampingSpec,
    DecayMatrix,
    MisclassificationModel,
    damping_channel,
    decay_propagate,
    dephasing_factors,
    gamma_from_rates,
    thermal_init,
)

US_PER_NS = 1e-3


def derived_rng(master_seed: int, *key) -> np.random.Generator:
    """Deterministic child generator for a work item.

    The key tuple fully determines the stream, so scheduling work items in
    any order (or in parallel) reproduces sequential results bit for bit.
    """
    return np.random.default_rng(np.random.SeedSequence((int(master_seed),) + tuple(int(k) for k in key)))


@dataclass(frozen=True)
class NoiseModel:
    """Dial settings for the simulated device.

    decay            -- rate matrix driving amplitude damping (None = off)
    epsilon          -- 2<->3 label-mixing probability
    thermal_populations -- initial diagonal populations (None = ground state)
    pulse_damping    -- apply a damping channel per physical pulse
    readout_damping  -- apply decay over the readout window before sampling
    readout_us       -- readout window length, us
    readout_mode     -- 'kraus' (amplitude-damping channel) or 'classical'
                        (stochastic transfer matrix) for the readout window
    dephasing        -- apply pure dephasing per pulse (off by default)
    reset_rounds     -- bookkeeping for the active-reset experiment
    """

    decay: DecayMatrix | None = None
    epsilon: float = 0.0
    thermal_populations: tuple | None = None
    pulse_damping: bool = True
    readout_damping: bool = True
    readout_us: float = 10.0
    readout_mode: str = "kraus"
    dephasing: bool = False
    t2_us: tuple = (118.0, 76.0, 35.0)
    reset_rounds: int = 2

    def __post_init__(self):
        if self.readout_mode not in ("kraus", "classical"):
            raise ValueError("readout_mode must be 'kraus' or 'classical'")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError("epsilon must lie in [0, 0.5]")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls(decay=None, epsilon=0.0, pulse_damping=False, readout_damping=False)

    def misclassification(self) -> MisclassificationModel:
        return MisclassificationModel(self.epsilon)

    def initial_density(self) -> QuditDensity:
        if self.thermal_populations is None:
            return QuditDensity.basis(0)
        return thermal_init(np.asarray(self.thermal_populations, dtype=float))

    def pulse_kraus(self, duration_ns: float):
        if self.decay is None or not self.pulse_damping or duration_ns <= 0:
            return None
        spec = gamma_from_rates(self.decay, duration_ns * US_PER_NS)
        return damping_channel(spec).operators

    def readout_transfer(self) -> np.ndarray:
        """Stochastic matrix acting on populations during the readout window."""
        if self.decay is None or not self.readout_damping:
            return np.eye(DIM)
        if self.readout_mode == "classical":
            cols = [decay_propagate(np.eye(DIM)[k], self.decay, self.readout_us) for k in range(DIM)]
            return np.stack(cols, axis=1)
        spec = gamma_from_rates(self.decay, self.readout_us)
        T = np.zeros((DIM, DIM))
        for j in range(DIM):
            T[j, j] = 1.0 - spec.xi[j]
            for i in range(j):
                T[i, j] = spec.gamma[j, i]
        T[0, 0] = 1.0
        return T

    def measurement_map(self) -> np.ndarray:
        """Ensemble-averaged map from circuit populations to reported ones."""
        return self.misclassification().matrix() @ self.readout_transfer()

    def assignment_exact(self) -> np.ndarray:
        """Closed-form assignment matrix, rows = prepared, columns = reported."""
        return self.measurement_map().T.copy()


def run_native(circuit: QuditCircuit, noise: NoiseModel, rho: QuditDensity | None = None) -> QuditDensity:
    """Execute a native circuit on a density matrix under the noise model."""
    mat = (rho or noise.initial_density()).matrix
    cache: dict[float, tuple] = {}
    deph = dephasing_factors(1.0, noise.t2_us) if noise.dephasing else None
    for g in circuit.gates:
        U = gate_unitary(g)
        mat = U @ mat @ U.conj().T
        if g.duration_ns > 0:
            ops = cache.get(g.duration_ns)
            if ops is None:
                ops = noise.pulse_kraus(g.duration_ns)
                cache[g.duration_ns] = ops
            if ops is not None:
                out = np.zeros_like(mat)
                for K in ops:
                    out += K @ mat @ K.conj().T
                mat = 0.5 * (out + out.conj().T)
            if deph is not None:
                mat = mat * dephasing_factors(g.duration_ns * US_PER_NS, noise.t2_us)
    return QuditDensity(mat)


def circuit_populations(circuit: QuditCircuit, noise: NoiseModel) -> np.ndarray:
    """Populations right before the readout window."""
    rho = run_native(circuit, noise)
    p = np.real(np.diag(rho.matrix)).clip(min=0.0)
    return p / p.sum()


def reported_distribution(circuit: QuditCircuit, noise: NoiseModel) -> np.ndarray:
    """Ensemble-mean reported distribution (readout decay plus label mixing)."""
    return noise.measurement_map() @ circuit_populations(circuit, noise)


def sample_readout(
    populations: np.ndarray,
    noise: NoiseModel,
    shots: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample one repeat of ``shots`` readouts.

    Decay during the window enters the sampling distribution; the label
    mixing is drawn once per repeat as a full 2<->3 relabeling event with
    probability epsilon.
    """
    p = noise.readout_transfer() @ populations
    p = p.clip(min=0.0)
    p /= p.sum()
    if noise.epsilon > 0.0 and rng.random() < noise.epsilon:
        p = p[[0, 1, 3, 2]]
    return rng.multinomial(shots, p)


def estimate_assignment_counts(
    noise: NoiseModel,
    repeats: int,
    shots: int,
    master_seed: int,
    prep_circuits: "dict[int, QuditCircuit] | None" = None,
) -> np.ndarray:
    """Calibration counts: rows = prepared level, columns = reported level.

    Each prepared basis state is sent through the same measurement pipeline
    the experiments use, ``repeats`` times so that per-repeat relabeling
    events average out to the closed-form mixing.
    """
    counts = np.zeros((DIM, DIM), dtype=np.int64)
    for level in range(DIM):
        if prep_circuits is not None and level in prep_circuits:
            pops = circuit_populations(prep_circuits[level], noise)
        else:
            pops = np.eye(DIM)[level]
        for r in range(repeats):
            rng = derived_rng(master_seed, 9100 + level, r)
            counts[level] += sample_readout(pops, noise, shots, rng)
    return counts
