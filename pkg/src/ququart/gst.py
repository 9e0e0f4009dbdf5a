"""Gate-set tomography circuits and linear-inversion reconstruction.

The gate set is the six native quarter-turn operations; preparation and
measurement fiducials are fixed gate sequences chosen to span the full
operator space.  Reconstruction is plain linear inversion followed by a
least-squares gauge fix to the ideal measurement frame, so state
preparation error lands in the reconstructed initial state where it can
be read off directly.  All matrices live in the embedded two-qubit Pauli
basis ordered II, IX, IY, IZ, XI, ..., ZZ.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .compiler import PAULI_LABELS_2Q, pauli_matrix
from .core import DIM, VZ, QuditCircuit, X
from .pipeline import NoiseModel, derived_rng, run_native

GATE_NAMES = ("X01", "X12", "X23", "Z1", "Z2", "Z3")

_PREP_FIDUCIAL_TABLE = (
    (),
    ("X01",),
    ("X01", "Z1"),
    ("X01", "X01"),
    ("X01", "X01", "X12"),
    ("X01", "X01", "X12", "Z2"),
    ("X01", "X12", "X12"),
    ("X01", "Z1", "X12", "X12"),
    ("X01", "X01", "X12", "X12"),
    ("X01", "X12", "X12", "X23", "X23"),
    ("X01", "Z1", "X12", "X12", "X23", "X23"),
    ("X01", "X01", "X12", "X23", "X23"),
    ("X01", "X01", "X12", "Z2", "X23", "X23"),
    ("X01", "X01", "X12", "X12", "X23"),
    ("X01", "X01", "X12", "X12", "X23", "Z3"),
    ("X01", "X01", "X12", "X12", "X23", "X23"),
)

_MEAS_FIDUCIAL_TABLE = (
    (),
    ("Z1", "Z3", "X01", "X23"),
    ("X01", "X23"),
    ("X12", "X12", "Z1", "Z2", "Z1", "Z3", "X01", "X23", "X12", "X12", "Z1", "Z2"),
    (
        "X12", "X12", "Z1", "Z2", "Z1", "Z3", "X01", "X23",
        "X12", "X12", "Z1", "Z2", "Z1", "Z3", "X01", "X23",
    ),
    (
        "X12", "X12", "Z1", "Z2", "Z1", "Z3", "X01", "X23",
        "X12", "X12", "Z1", "Z2", "X01", "X23",
    ),
    ("X12", "X12", "Z1", "Z2", "X01", "X23", "X12", "X12", "Z1", "Z2"),
    (
        "X12", "X12", "Z1", "Z2", "X01", "X23", "X12", "X12",
        "Z1", "Z2", "Z1", "Z3", "X01", "X23",
    ),
    (
        "X12", "X12", "Z1", "Z2", "X01", "X23", "X12", "X12",
        "Z1", "Z2", "X01", "X23",
    ),
)


def gate_circuit(name: str) -> QuditCircuit:
    """One quarter-turn element of the tomography gate set."""
    if name.startswith("X"):
        return QuditCircuit((X(name[1:], np.pi / 2),))
    if name.startswith("Z"):
        return QuditCircuit((VZ(int(name[1]), np.pi / 2),))
    raise ValueError(f"unknown gate-set element {name!r}")


def _sequence_circuit(names) -> QuditCircuit:
    circ = QuditCircuit()
    for name in names:
        circ = circ + gate_circuit(name)
    return circ


@dataclass(frozen=True)
class FiducialSet:
    """Preparation and measurement fiducial circuits (gate lists read in
    time order: the leftmost gate is applied first)."""

    prep: tuple
    meas: tuple

    @property
    def n_prep(self) -> int:
        return len(self.prep)

    @property
    def n_meas(self) -> int:
        return len(self.meas)


@lru_cache(maxsize=None)
def gst_fiducials() -> FiducialSet:
    return FiducialSet(
        prep=tuple(_sequence_circuit(seq) for seq in _PREP_FIDUCIAL_TABLE),
        meas=tuple(_sequence_circuit(seq) for seq in _MEAS_FIDUCIAL_TABLE),
    )


def gst_circuits(
    germs=GATE_NAMES,
    powers=(0, 1),
    fiducials: FiducialSet | None = None,
):
    """Ordered circuit list: prep fiducial, germ repetitions, meas fiducial.

    Keys are (prep_index, germ_name, power, meas_index); power 0 yields the
    SPAM-only circuits once (germ recorded as None).
    """
    fids = fiducials or gst_fiducials()
    out = []
    if 0 in powers:
        for j in range(fids.n_prep):
            for i in range(fids.n_meas):
                out.append(((j, None, 0, i), fids.prep[j] + fids.meas[i]))
    for k in sorted(p for p in set(powers) if p > 0):
        for germ in germs:
            body = QuditCircuit()
            for _ in range(k):
                body = body + gate_circuit(germ)
            for j in range(fids.n_prep):
                for i in range(fids.n_meas):
                    out.append(((j, germ, k, i), fids.prep[j] + body + fids.meas[i]))
    return out


def simulate_gst_dataset(
    circuits,
    noise: NoiseModel | None = None,
    shots: int = 0,
    seed: int = 0,
) -> dict:
    """Outcome data per circuit key.

    With ``shots`` zero the exact outcome distribution is stored (unit
    normalization); otherwise multinomial counts sampled through the noise
    model's measurement pipeline.
    """
    noise = noise or NoiseModel.ideal()
    data = {}
    for n, (key, circ) in enumerate(circuits):
        rho = run_native(circ, noise)
        pops = np.real(np.diag(rho.matrix)).clip(min=0.0)
        pops /= pops.sum()
        reported = noise.measurement_map() @ pops
        if shots == 0:
            data[key] = reported
        else:
            rng = derived_rng(seed, 8000, n)
            data[key] = rng.multinomial(shots, reported / reported.sum()).astype(float)
    return data


# ---------------------------------------------------------------------------
# Pauli transfer machinery

@lru_cache(maxsize=None)
def pauli_basis() -> tuple:
    """Sixteen orthonormal Hermitian basis matrices P_label / 2."""
    return tuple(pauli_matrix(label) / 2.0 for label in PAULI_LABELS_2Q)


def state_to_vec(rho: np.ndarray) -> np.ndarray:
    basis = pauli_basis()
    return np.array([np.trace(B @ rho).real for B in basis])


def vec_to_state(vec: np.ndarray) -> np.ndarray:
    basis = pauli_basis()
    rho = np.zeros((DIM, DIM), dtype=complex)
    for v, B in zip(vec, basis):
        rho += v * B
    return rho


def effect_to_vec(effect: np.ndarray) -> np.ndarray:
    return state_to_vec(effect)


def ptm_of_unitary(U: np.ndarray) -> np.ndarray:
    basis = pauli_basis()
    R = np.empty((16, 16))
    conj = [U @ B @ U.conj().T for B in basis]
    for a, Ba in enumerate(basis):
        for b in range(16):
            R[a, b] = np.trace(Ba @ conj[b]).real
    return R


def ptm_of_kraus(operators) -> np.ndarray:
    basis = pauli_basis()
    R = np.empty((16, 16))
    mapped = []
    for B in basis:
        out = np.zeros((DIM, DIM), dtype=complex)
        for K in operators:
            out += K @ B @ K.conj().T
        mapped.append(out)
    for a, Ba in enumerate(basis):
        for b in range(16):
            R[a, b] = np.trace(Ba @ mapped[b]).real
    return R


@lru_cache(maxsize=None)
def ideal_gate_ptms() -> dict:
    return {name: ptm_of_unitary(gate_circuit(name).unitary()) for name in GATE_NAMES}


def avg_gate_infidelity(R_est: np.ndarray, R_ideal: np.ndarray) -> float:
    """1 - (Tr(R_ideal^-1 R_est) + d) / (d^2 + d) with d = 4."""
    d = DIM
    fidelity = (np.trace(np.linalg.solve(R_ideal, R_est)).real + d) / (d * d + d)
    return float(1.0 - fidelity)


def state_infidelity(rho: np.ndarray, level: int = 0) -> float:
    return float(1.0 - rho[level, level].real)


# ---------------------------------------------------------------------------
# linear inversion

class GstRankError(RuntimeError):
    pass


@dataclass
class GstResult:
    gates: dict
    rho: np.ndarray
    effects: list
    gram_singular_values: np.ndarray

    def gate_infidelities(self) -> dict:
        ideal = ideal_gate_ptms()
        return {name: avg_gate_infidelity(R, ideal[name]) for name, R in self.gates.items()}

    def initial_state_infidelity(self) -> float:
        return state_infidelity(self.rho)


def _frequencies(data_entry: np.ndarray) -> np.ndarray:
    v = np.asarray(data_entry, dtype=float)
    return v / v.sum()


def linear_inversion_gst(dataset: dict, germs=GATE_NAMES) -> GstResult:
    """Reconstruct gate PTMs and SPAM from fiducial-framed outcome data.

    The raw inversion recovers every gate up to a common similarity (the
    fiducial frame).  The gauge is then fixed by least squares against the
    ideal measurement fiducial effects, which leaves preparation error in
    the reconstructed initial state.  On noiseless data the whole loop is
    exact to numerical precision.
    """
    fids = gst_fiducials()
    n_rows = fids.n_meas * DIM
    n_cols = fids.n_prep

    gram = np.empty((n_rows, n_cols))
    for j in range(n_cols):
        for i in range(fids.n_meas):
            freqs = _frequencies(dataset[(j, None, 0, i)])
            gram[i * DIM : (i + 1) * DIM, j] = freqs

    svals = np.linalg.svd(gram, compute_uv=False)
    if svals[15] / svals[0] < 1e-10:
        deficient = 16 - int(np.sum(svals / svals[0] > 1e-10))
        raise GstRankError(
            f"fiducial span is rank deficient: gram matrix misses {deficient} "
            "direction(s); extend the preparation or measurement fiducials"
        )

    gram_pinv = np.linalg.pinv(gram, rcond=1e-12)

    raw_gates = {}
    for germ in germs:
        M = np.empty((n_rows, n_cols))
        for j in range(n_cols):
            for i in range(fids.n_meas):
                freqs = _frequencies(dataset[(j, germ, 1, i)])
                M[i * DIM : (i + 1) * DIM, j] = freqs
        raw_gates[germ] = gram_pinv @ M

    # ideal measurement-frame rows: effect vec of F_meas^dag |o><o| F_meas
    A_ideal = np.empty((n_rows, 16))
    for i, circ in enumerate(fids.meas):
        F = circ.unitary()
        for o in range(DIM):
            proj = np.zeros((DIM, DIM), dtype=complex)
            proj[o, o] = 1.0
            A_ideal[i * DIM + o] = effect_to_vec(F.conj().T @ proj @ F)

    X_gauge, *_ = np.linalg.lstsq(gram, A_ideal, rcond=None)
    M_gauge = np.linalg.inv(X_gauge)

    gates = {g: M_gauge @ R @ X_gauge for g, R in raw_gates.items()}
    rho_vec = M_gauge[:, 0]
    effects = [gram[o, :] @ X_gauge for o in range(DIM)]

    return GstResult(
        gates=gates,
        rho=vec_to_state(rho_vec),
        effects=[vec_to_state(e) for e in effects],
        gram_singular_values=svals,
    )
