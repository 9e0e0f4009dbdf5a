"""Exact linear algebra for a single four-level qudit.

States are plain 4-vectors or 4x4 density operators, gates are the native
alphabet of subspace drives {X_ij, Y_ij} plus zero-duration virtual-Z
phase gates, and noise enters through Kraus channels.  Everything here is
value-semantic: no function mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIM = 4

#: duration of a physical drive pulse, ns
PULSE_NS = 50.0
#: idle buffer inserted between consecutive physical pulses, ns
BUFFER_NS = 10.0

ATOL_ALGEBRA = 1e-12
ATOL_PSD = 1e-10

_SUBSPACES = ("01", "12", "23")
_VZ_LEVELS = (1, 2, 3)


def _as_complex_array(values, shape) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise ValueError("array contains non-finite entries")
    return arr


@dataclass(frozen=True)
class QuditState:
    """Pure state of the ququart; ``amplitudes[n]`` is the |n> amplitude."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _as_complex_array(self.amplitudes, (DIM,))
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > ATOL_ALGEBRA:
            raise ValueError(f"state norm^2 = {norm} deviates from 1 beyond {ATOL_ALGEBRA}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n: int) -> "QuditState":
        amps = np.zeros(DIM, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    def to_density(self) -> "QuditDensity":
        return QuditDensity(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class QuditDensity:
    """Density operator of the ququart: Hermitian, unit trace, PSD."""

    matrix: np.ndarray

    def __post_init__(self):
        rho = _as_complex_array(self.matrix, (DIM, DIM))
        if np.abs(rho - rho.conj().T).max() > ATOL_ALGEBRA:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > ATOL_ALGEBRA:
            raise ValueError(f"density matrix trace {tr} deviates from 1 beyond {ATOL_ALGEBRA}")
        if np.linalg.eigvalsh(rho).min() < -ATOL_PSD:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def basis(cls, n: int) -> "QuditDensity":
        rho = np.zeros((DIM, DIM), dtype=complex)
        rho[n, n] = 1.0
        return cls(rho)

    @classmethod
    def from_populations(cls, populations) -> "QuditDensity":
        p = np.asarray(populations, dtype=float)
        if p.shape != (DIM,):
            raise ValueError("need exactly four populations")
        return cls(np.diag(p.astype(complex)))


def wrap_angle(theta: float) -> float:
    """Reduce an angle into (-2*pi, 2*pi] using the exact 4*pi pulse period.

    A subspace pulse is 4*pi-periodic including its identity-block phase, so
    this normalization never changes the unitary, not even by a global phase.
    """
    theta = float(theta)
    two = 2.0 * np.pi
    while theta > two:
        theta -= 2.0 * two
    while theta <= -two:
        theta += 2.0 * two
    return theta


@dataclass(frozen=True)
class NativeGate:
    """One native qudit operation.

    kind      -- "X" or "Y" (physical drive) or "VZ" (virtual phase gate)
    subspace  -- "01", "12" or "23" for drives
    level     -- 1, 2 or 3 for virtual-Z gates
    theta     -- rotation angle, radians, in (-2*pi, 2*pi]
    phase     -- extra drive-phase offset (radians) applied on top of the
                 kind's axis; produced by virtual-Z propagation
    """

    kind: str
    theta: float
    subspace: str | None = None
    level: int | None = None
    phase: float = 0.0

    def __post_init__(self):
        if self.kind in ("X", "Y"):
            if self.subspace not in _SUBSPACES:
                raise ValueError(f"drive gate needs subspace in {_SUBSPACES}")
            if self.level is not None:
                raise ValueError("drive gates carry no level index")
        elif self.kind == "VZ":
            if self.level not in _VZ_LEVELS:
                raise ValueError(f"virtual-Z gate needs level in {_VZ_LEVELS}")
            if self.subspace is not None:
                raise ValueError("virtual-Z gates carry no subspace")
            if self.phase != 0.0:
                raise ValueError("virtual-Z gates carry no drive phase")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        theta = float(self.theta)
        if not -2.0 * np.pi < theta <= 2.0 * np.pi:
            raise ValueError(f"theta {theta} outside (-2*pi, 2*pi]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phase", float(self.phase))

    @property
    def duration_ns(self) -> float:
        return 0.0 if self.kind == "VZ" else PULSE_NS

    @property
    def levels(self) -> tuple[int, int]:
        i = int(self.subspace[0])
        return i, i + 1


def X(subspace: str, theta: float, phase: float = 0.0) -> NativeGate:
    return NativeGate("X", wrap_angle(theta), subspace=subspace, phase=phase)


def Y(subspace: str, theta: float, phase: float = 0.0) -> NativeGate:
    return NativeGate("Y", wrap_angle(theta), subspace=subspace, phase=phase)


def VZ(level: int, theta: float) -> NativeGate:
    return NativeGate("VZ", wrap_angle(theta), level=level)


@dataclass(frozen=True)
class QuditCircuit:
    """Timed sequence of native gates plus optional shot-count metadata."""

    gates: tuple[NativeGate, ...] = ()
    shots: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.shots is not None and self.shots < 1:
            raise ValueError("shot count must be positive")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "QuditCircuit") -> "QuditCircuit":
        return QuditCircuit(self.gates + other.gates, shots=self.shots or other.shots)

    @property
    def pulse_count(self) -> int:
        return sum(1 for g in self.gates if g.duration_ns > 0)

    def duration_ns(self) -> float:
        """Wall-clock duration: pulse lengths plus one buffer per pulse gap."""
        n = self.pulse_count
        if n == 0:
            return 0.0
        return sum(g.duration_ns for g in self.gates) + BUFFER_NS * (n - 1)

    def unitary(self) -> np.ndarray:
        U = np.eye(DIM, dtype=complex)
        for g in self.gates:
            U = gate_unitary(g) @ U
        return U


def gate_unitary(g: NativeGate) -> np.ndarray:
    """4x4 unitary of a native gate.

    Drives exponentiate the published subspace generators: the generator is
    the identity outside the driven subspace, so the complementary levels
    accrue the phase exp(i*theta/2).  That phase is kept on purpose; the
    compiler's virtual-Z corrections are built to cancel it.
    """
    if g.kind == "VZ":
        U = np.eye(DIM, dtype=complex)
        U[g.level, g.level] = np.exp(1j * g.theta)
        return U
    # drive with axis phase: X has phi = 0, Y sits a quarter turn behind
    phi = g.phase + (0.0 if g.kind == "X" else -np.pi / 2.0)
    i, j = g.levels
    c = np.cos(g.theta / 2.0)
    s = np.sin(g.theta / 2.0)
    U = np.exp(1j * g.theta / 2.0) * np.eye(DIM, dtype=complex)
    U[i, i] = c
    U[i, j] = s * np.exp(-1j * phi)
    U[j, i] = -s * np.exp(1j * phi)
    U[j, j] = c
    return U


def apply_gate(state: QuditState | QuditDensity, g: NativeGate):
    """Apply a native gate, returning the same state flavour."""
    U = gate_unitary(g)
    if isinstance(state, QuditState):
        return QuditState(U @ state.amplitudes)
    return QuditDensity(U @ state.matrix @ U.conj().T)


def apply_unitary(state: QuditState | QuditDensity, U: np.ndarray):
    if isinstance(state, QuditState):
        return QuditState(U @ state.amplitudes)
    return QuditDensity(U @ state.matrix @ U.conj().T)


def run_circuit(state: QuditState | QuditDensity, circuit: QuditCircuit):
    """Noiseless circuit execution."""
    for g in circuit.gates:
        state = apply_gate(state, g)
    return state


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map given by Kraus operators; completeness checked on build."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(_as_complex_array(K, (DIM, DIM)) for K in self.operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        total = sum(K.conj().T @ K for K in ops)
        if np.abs(total - np.eye(DIM)).max() > ATOL_ALGEBRA:
            raise ValueError("Kraus operators fail the completeness sum within 1e-12")
        object.__setattr__(self, "operators", ops)

    @classmethod
    def identity(cls) -> "KrausChannel":
        return cls((np.eye(DIM, dtype=complex),))


def apply_channel(rho: QuditDensity, channel: KrausChannel) -> QuditDensity:
    return QuditDensity(_apply_channel_matrix(rho.matrix, channel.operators))


def _apply_channel_matrix(rho: np.ndarray, operators) -> np.ndarray:
    out = np.zeros((DIM, DIM), dtype=complex)
    for K in operators:
        out += K @ rho @ K.conj().T
    # scrub the one-ulp Hermiticity drift from the Kraus sum
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class DiagObservable:
    """Observable diagonal in the computational basis."""

    diagonal: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diagonal, dtype=float)
        if diag.shape != (DIM,):
            raise ValueError("diagonal must have exactly four entries")
        object.__setattr__(self, "diagonal", diag)


def measure_probs(state: QuditState | QuditDensity) -> np.ndarray:
    """Computational-basis Born probabilities."""
    if isinstance(state, QuditState):
        p = np.abs(state.amplitudes) ** 2
    else:
        p = np.real(np.diag(state.matrix)).copy()
        p[np.abs(p) < ATOL_PSD] = np.abs(p[np.abs(p) < ATOL_PSD])
    return p / p.sum()


def expectation(observable: DiagObservable, probs) -> float:
    """<M> = diag(M)^T R.

    ``probs`` is any 4-vector of outcome weights.  Mitigated quasi-probability
    vectors may carry entries outside [0, 1]; no clipping is applied, so the
    result can exceed the physical range on purpose.
    """
    r = np.asarray(probs, dtype=float)
    if r.shape != (DIM,):
        raise ValueError("probability vector must have four entries")
    return float(observable.diagonal @ r)


def sample_shots(probs, n: int, seed) -> np.ndarray:
    """Multinomial counts for ``n`` shots; identical (p, n, seed) -> identical counts."""
    if n < 1:
        raise ValueError("shot count must be at least 1")
    p = np.asarray(probs, dtype=float).copy()
    if p.shape != (DIM,):
        raise ValueError("probability vector must have four entries")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1 within 1e-9")
    if p.min() < -1e-9:
        raise ValueError("probabilities contain a negative entry beyond tolerance")
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    return rng.multinomial(n, p)


# ---------------------------------------------------------------------------
# circuit serialization: one gate per line, e.g. "X01 1.5708" / "VZ2 -0.7854";
# a third field carries a propagated drive phase when nonzero.

def format_circuit(circuit: QuditCircuit) -> str:
    lines = []
    if circuit.shots is not None:
        lines.append(f"shots {circuit.shots}")
    for g in circuit.gates:
        if g.kind == "VZ":
            lines.append(f"VZ{g.level} {g.theta!r}")
        elif g.phase != 0.0:
            lines.append(f"{g.kind}{g.subspace} {g.theta!r} {g.phase!r}")
        else:
            lines.append(f"{g.kind}{g.subspace} {g.theta!r}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> QuditCircuit:
    gates = []
    shots = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "shots":
            shots = int(fields[1])
            continue
        name = fields[0]
        try:
            theta = float(fields[1])
            if name.startswith("VZ"):
                gates.append(NativeGate("VZ", theta, level=int(name[2:])))
            else:
                phase = float(fields[2]) if len(fields) > 2 else 0.0
                gates.append(NativeGate(name[0], theta, subspace=name[1:], phase=phase))
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: cannot parse gate {raw!r}: {exc}") from exc
    return QuditCircuit(tuple(gates), shots=shots)


def unitaries_equal_up_to_phase(U: np.ndarray, V: np.ndarray, tol: float = 1e-10) -> bool:
    """|Tr(U^dag V)| / 4 > 1 - tol, the basis-free equality test."""
    return abs(np.trace(U.conj().T @ V)) / DIM > 1.0 - tol
