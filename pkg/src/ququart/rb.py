"""Randomized benchmarking on the emulated qubits.

Sequences of uniformly random Clifford elements are closed with the exact
group inverse, lowered to native pulses (two-qubit elements route through
the ZX90 entangler), and executed either under the physical noise model or
with an injected per-element depolarizing channel.  Survival is always the
population found back in the embedded |00> state, fitted to A p^m + B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .compiler import (
    clifford_group,
    compile_clifford_1q,
    compile_clifford_2q,
    two_qubit_operator,
)
from .core import DIM, QuditCircuit
from .pipeline import NoiseModel, derived_rng, run_native

RB_KINDS = ("single-A", "single-B", "simultaneous", "two-qubit", "interleaved")


@dataclass(frozen=True)
class RBRun:
    """Configuration of one benchmarking experiment."""

    kind: str
    lengths: tuple
    sequences_per_length: int
    shots: int
    seed: int
    interleaved_index: int | None = None

    def __post_init__(self):
        if self.kind not in RB_KINDS:
            raise ValueError(f"kind must be one of {RB_KINDS}")
        if min(self.lengths) < 1:
            raise ValueError("sequence lengths must be at least 1")
        if self.sequences_per_length < 1:
            raise ValueError("need at least one sequence per length")
        if self.kind == "interleaved" and self.interleaved_index is None:
            raise ValueError("interleaved runs need the interleaved element index")
        object.__setattr__(self, "lengths", tuple(int(m) for m in self.lengths))


@dataclass
class RBResult:
    kind: str
    lengths: tuple
    survivals: np.ndarray  # (n_lengths, n_sequences)
    amplitude: float
    decay: float
    baseline: float
    stderr: dict
    dimension: int
    converged: bool

    @property
    def infidelity(self) -> float:
        d = self.dimension
        return (1.0 - self.decay) * (d - 1) / d

    @property
    def infidelity_stderr(self) -> float:
        d = self.dimension
        return self.stderr["p"] * (d - 1) / d

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "A": self.amplitude,
            "p": self.decay,
            "B": self.baseline,
            "r": self.infidelity,
            "A_stderr": self.stderr["A"],
            "p_stderr": self.stderr["p"],
            "B_stderr": self.stderr["B"],
            "r_stderr": self.infidelity_stderr,
            "d": self.dimension,
            "converged": self.converged,
        }


def rb_dimension(kind: str) -> int:
    return 4 if kind in ("two-qubit", "interleaved") else 2


def _sequence_indices(kind: str, m: int, rng, interleaved: int | None = None):
    """Random element indices plus the exact closing inverse.

    For 'simultaneous' the layers are (a, b) index pairs inverted per qubit;
    interleaved runs alternate random elements with the fixed one.
    """
    if kind in ("single-A", "single-B"):
        group = clifford_group(1)
        picks = [int(rng.integers(group.size)) for _ in range(m)]
        U = np.eye(2, dtype=complex)
        for i in picks:
            U = group.matrices[i] @ U
        return picks, group.index_of(U.conj().T)
    if kind == "simultaneous":
        group = clifford_group(1)
        picks = [
            (int(rng.integers(group.size)), int(rng.integers(group.size)))
            for _ in range(m)
        ]
        Ua = np.eye(2, dtype=complex)
        Ub = np.eye(2, dtype=complex)
        for ia, ib in picks:
            Ua = group.matrices[ia] @ Ua
            Ub = group.matrices[ib] @ Ub
        return picks, (group.index_of(Ua.conj().T), group.index_of(Ub.conj().T))
    group = clifford_group(2)
    picks = [int(rng.integers(group.size)) for _ in range(m)]
    if kind == "interleaved":
        alternated = []
        for i in picks:
            alternated.extend([i, int(interleaved)])
        picks = alternated
    U = np.eye(DIM, dtype=complex)
    for i in picks:
        U = group.matrices[i] @ U
    return picks, group.index_of(U.conj().T)


def _layer_unitaries(kind: str, picks, inverse) -> list[np.ndarray]:
    """Embedded 4x4 unitary per layer, inversion included."""
    eye = np.eye(2, dtype=complex)
    out = []
    if kind in ("single-A", "single-B"):
        group = clifford_group(1)
        for i in list(picks) + [inverse]:
            U = group.matrices[i]
            out.append(
                two_qubit_operator(eye, U)
                if kind == "single-A"
                else two_qubit_operator(U, eye)
            )
    elif kind == "simultaneous":
        group = clifford_group(1)
        for ia, ib in list(picks) + [inverse]:
            out.append(two_qubit_operator(group.matrices[ib], group.matrices[ia]))
    else:
        group = clifford_group(2)
        for i in list(picks) + [inverse]:
            out.append(group.matrices[i])
    return out


def sequence_layers(kind: str, m: int, seed, interleaved_index: int | None = None):
    """(picks, inverse) for a seeded random sequence."""
    rng = np.random.default_rng(seed)
    return _sequence_indices(kind, m, rng, interleaved_index)


def rb_sequence(kind: str, m: int, seed, interleaved_index: int | None = None) -> QuditCircuit:
    """Native circuit of one random sequence (m elements plus the inverse)."""
    picks, inverse = sequence_layers(kind, m, seed, interleaved_index)
    circ = QuditCircuit()
    if kind in ("single-A", "single-B"):
        target = "A" if kind == "single-A" else "B"
        for i in list(picks) + [inverse]:
            circ = circ + compile_clifford_1q(i, target)
    elif kind == "simultaneous":
        for ia, ib in picks:
            circ = circ + compile_clifford_1q(ia, "A") + compile_clifford_1q(ib, "B")
        circ = circ + compile_clifford_1q(inverse[0], "A") + compile_clifford_1q(inverse[1], "B")
    else:
        for i in list(picks) + [inverse]:
            circ = circ + compile_clifford_2q(i)
    return circ


def sequence_unitary(kind: str, m: int, seed, interleaved_index: int | None = None) -> np.ndarray:
    """Composed ideal unitary of a sequence; identity up to phase by design."""
    picks, inverse = sequence_layers(kind, m, seed, interleaved_index)
    U = np.eye(DIM, dtype=complex)
    for layer in _layer_unitaries(kind, picks, inverse):
        U = layer @ U
    return U


def _depolarize(rho: np.ndarray, keep: float, scope: str) -> np.ndarray:
    """Mix ``rho`` with the maximally mixed state on the given scope.

    scope 'full' mixes over the whole four-level space; 'A'/'B' depolarize
    only the corresponding emulated qubit.  Index order: row n = a + 2b.
    """
    if scope == "full":
        return keep * rho + (1.0 - keep) * np.trace(rho).real * np.eye(DIM) / DIM
    t = rho.reshape(2, 2, 2, 2)  # axes (b, a, b', a')
    eye = np.eye(2) / 2.0
    if scope == "A":
        red = np.einsum("baca->bc", t)  # keep B
        mixed = np.einsum("bc,ad->bacd", red, eye).reshape(DIM, DIM)
    else:
        red = np.einsum("babd->ad", t)  # keep A
        mixed = np.einsum("bc,ad->bacd", eye, red).reshape(DIM, DIM)
    return keep * rho + (1.0 - keep) * mixed


def run_rb(
    run: RBRun,
    noise: NoiseModel | None = None,
    depolarizing: float | None = None,
) -> RBResult:
    """Execute a benchmarking run and fit the decay model.

    Exactly one error mechanism applies: the physical noise model (native
    lowering, per-pulse damping, readout effects) or an injected
    depolarizing channel of strength ``depolarizing`` per Clifford layer,
    applied at the emulated-unitary level.
    """
    if (noise is None) == (depolarizing is None):
        raise ValueError("pass exactly one of noise or depolarizing")
    survivals = np.zeros((len(run.lengths), run.sequences_per_length))
    for im, m in enumerate(run.lengths):
        for s in range(run.sequences_per_length):
            rng = derived_rng(run.seed, 7000, im, s)
            if depolarizing is not None:
                p00 = _survival_depolarizing(run, m, rng, depolarizing)
            else:
                p00 = _survival_native(run, m, rng, noise)
            shot_rng = derived_rng(run.seed, 7500, im, s)
            survivals[im, s] = shot_rng.binomial(run.shots, p00) / run.shots
    return fit_rb(run, survivals)


def _survival_depolarizing(run: RBRun, m: int, rng, strength: float) -> float:
    picks, inverse = _sequence_indices(run.kind, m, rng, run.interleaved_index)
    scope = {"single-A": "A", "single-B": "B"}.get(run.kind, "full")
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[0, 0] = 1.0
    for U in _layer_unitaries(run.kind, picks, inverse):
        rho = U @ rho @ U.conj().T
        rho = _depolarize(rho, strength, scope)
    return float(np.clip(rho[0, 0].real, 0.0, 1.0))


def _survival_native(run: RBRun, m: int, rng, noise: NoiseModel) -> float:
    seq_seed = int(rng.integers(2**63))
    circ = rb_sequence(run.kind, m, seq_seed, run.interleaved_index)
    rho = run_native(circ, noise)
    pops = np.real(np.diag(rho.matrix)).clip(min=0.0)
    pops /= pops.sum()
    reported = noise.measurement_map() @ pops
    return float(np.clip(reported[0], 0.0, 1.0))


class RBFitError(RuntimeError):
    pass


def fit_rb(run: RBRun, survivals: np.ndarray) -> RBResult:
    """Least-squares fit of P = A p^m + B with parameter standard errors."""
    ms = np.repeat(run.lengths, run.sequences_per_length).astype(float)
    ys = survivals.ravel()
    d = rb_dimension(run.kind)
    guess_b = 1.0 / d
    guess = (max(float(ys[: run.sequences_per_length].mean()) - guess_b, 0.1), 0.95, guess_b)

    def model(m, a, p, b):
        return a * np.power(p, m) + b

    try:
        params, cov = curve_fit(
            model,
            ms,
            ys,
            p0=guess,
            bounds=([-2.0, 1e-6, -1.0], [2.0, 1.0 - 1e-9, 1.0]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise RBFitError(f"decay fit failed to converge: {exc}") from exc
    a, p, b = params
    converged = bool(np.all(np.isfinite(cov)))
    err = np.sqrt(np.abs(np.diag(cov)))
    return RBResult(
        kind=run.kind,
        lengths=run.lengths,
        survivals=survivals,
        amplitude=float(a),
        decay=float(p),
        baseline=float(b),
        stderr={"A": float(err[0]), "p": float(err[1]), "B": float(err[2])},
        dimension=d,
        converged=converged,
    )


def interleaved_infidelity(reference: RBResult, interleaved: RBResult) -> dict:
    """Gate infidelity from the decay ratio of interleaved over reference."""
    d = interleaved.dimension
    ratio = interleaved.decay / reference.decay
    r = (1.0 - ratio) * (d - 1) / d
    rel = np.hypot(
        interleaved.stderr["p"] / interleaved.decay,
        reference.stderr["p"] / reference.decay,
    )
    return {"r_gate": float(r), "r_gate_stderr": float(ratio * rel * (d - 1) / d)}
