"""Lowering of emulated two-qubit operations onto the native qudit alphabet.

Embedding convention, fixed once here and used everywhere:

* physical level n encodes (a, b) with n = a + 2*b;
* qubit A is the bit flipped by neighbouring-transition drives
  ({0,1} and {2,3}), qubit B the bit flipped by next-neighbour pairs
  ({0,2} and {1,3});
* ket labels read "ba": embedded |01> means b=0, a=1, i.e. level 1;
* two-letter Pauli labels read the same way: in "IZ" the Z acts on
  qubit A, in "ZI" on qubit B, and the embedded matrix is kron(P_B, P_A).

All compile_* functions return circuits whose composed unitary equals the
target two-qubit operation up to a global phase; phase corrections are
explicit virtual-Z gates with angles frozen by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    DIM,
    VZ,
    NativeGate,
    QuditCircuit,
    X,
    Y,
    gate_unitary,
    wrap_angle,
)

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

#: two-qubit Pauli labels in PTM order
PAULI_LABELS_2Q = tuple(p + q for p in "IXYZ" for q in "IXYZ")


def embed_two_qubit(a: int, b: int) -> int:
    """Physical level for qubit-A bit ``a`` and qubit-B bit ``b``."""
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError("qubit values must be 0 or 1")
    return a + 2 * b


def ket_index(label: str) -> int:
    """Physical level for a two-qubit ket label like '01' (reads 'ba')."""
    b, a = int(label[0]), int(label[1])
    return embed_two_qubit(a, b)


def pauli_matrix(label: str) -> np.ndarray:
    """Embedded 4x4 matrix of a two-letter Pauli label."""
    if len(label) != 2 or label[0] not in PAULI_1Q or label[1] not in PAULI_1Q:
        raise ValueError(f"bad Pauli label {label!r}")
    return np.kron(PAULI_1Q[label[0]], PAULI_1Q[label[1]])


def two_qubit_operator(op_b: np.ndarray, op_a: np.ndarray) -> np.ndarray:
    """Embed separate single-qubit operators acting on B and A."""
    return np.kron(op_b, op_a)


def rotation_matrix(axis: str, theta: float) -> np.ndarray:
    """Single-qubit rotation exp(-i*theta/2 * sigma_axis)."""
    sigma = PAULI_1Q[axis.upper()]
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return c * np.eye(2, dtype=complex) - 1j * s * sigma


# ---------------------------------------------------------------------------
# single-qubit rotations

def compile_rotation_a(axis: str, theta: float) -> QuditCircuit:
    """Rotation on qubit A: matched drives in both neighbouring subspaces.

    The identity-block phases of the two pulses combine into a global phase,
    so no virtual-Z correction is needed.  Rz is purely virtual.
    """
    theta = float(theta)
    if theta == 0.0:
        return QuditCircuit()
    axis = axis.lower()
    if axis == "x":
        return QuditCircuit((Y("01", -theta), Y("23", -theta)))
    if axis == "y":
        return QuditCircuit((X("01", -theta), X("23", -theta)))
    if axis == "z":
        return QuditCircuit((VZ(1, theta), VZ(3, theta)))
    raise ValueError(f"unknown rotation axis {axis!r}")


def compile_rotation_word_a(word) -> QuditCircuit:
    circ = QuditCircuit()
    for axis, theta in word:
        circ = circ + compile_rotation_a(axis, theta)
    return circ


def compile_rotation_b(axis: str, theta: float) -> QuditCircuit:
    return compile_rotation_word_b([(axis, float(theta))])


def compile_rotation_word_b(word) -> QuditCircuit:
    """Rotations on qubit B.

    Z rotations are diagonal and compile to virtual-Z gates directly; any
    word containing x/y content is routed through a single emulated-SWAP
    sandwich around the same word compiled on qubit A.
    """
    word = [(axis.lower(), float(theta)) for axis, theta in word]
    word = [(axis, theta) for axis, theta in word if theta != 0.0]
    if not word:
        return QuditCircuit()
    if all(axis == "z" for axis, _ in word):
        circ = QuditCircuit()
        for _, theta in word:
            circ = circ + QuditCircuit((VZ(2, theta), VZ(3, theta)))
        return circ
    return compile_swap() + compile_rotation_word_a(word) + compile_swap()


# ---------------------------------------------------------------------------
# two-qubit primitives

def compile_swap() -> QuditCircuit:
    """SWAP: one qubit-like pulse in the middle subspace plus two phase fixes."""
    return QuditCircuit((X("12", np.pi), VZ(1, np.pi / 2), VZ(2, -np.pi / 2)))


def compile_iswap() -> QuditCircuit:
    return QuditCircuit((Y("12", np.pi), VZ(1, np.pi / 2), VZ(2, np.pi / 2)))


def compile_zz(theta: float) -> QuditCircuit:
    """ZZ(theta): two virtual-Z gates, diag(1, e^{-i theta}, e^{-i theta}, 1)."""
    theta = float(theta)
    if theta == 0.0:
        return QuditCircuit()
    return QuditCircuit((VZ(1, -theta), VZ(2, -theta)))


def compile_zx90() -> QuditCircuit:
    """exp(-i pi/4 ZX): pi pulse in {2,3}, then Rx(-pi/2) on A, plus fixes.

    The three virtual-Z corrections were solved analytically so the composed
    unitary matches the target exactly up to a global phase.
    """
    return QuditCircuit(
        (
            X("23", np.pi),
            VZ(1, np.pi),
            Y("01", np.pi / 2),
            Y("23", np.pi / 2),
            VZ(1, np.pi),
            VZ(2, np.pi),
        )
    )


# target unitaries for verification
SWAP_TARGET = np.eye(DIM, dtype=complex)[[0, 2, 1, 3]]
ISWAP_TARGET = np.array(
    [[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def zz_target(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(-1j * theta), np.exp(-1j * theta), 1.0])


def zx90_target() -> np.ndarray:
    zx = pauli_matrix("ZX")
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    return c * np.eye(DIM, dtype=complex) - 1j * s * zx


# ---------------------------------------------------------------------------
# virtual-Z propagation

#: drive-phase shift applied to each subspace frame when a virtual Z on a
#: given level is pushed through the rest of the sequence
_FRAME_SHIFTS = {
    1: {"01": -1.0, "12": +1.0, "23": 0.0},
    2: {"01": 0.0, "12": -1.0, "23": +1.0},
    3: {"01": 0.0, "12": 0.0, "23": -1.0},
}


@dataclass
class PhaseFrame:
    """Accumulated drive-phase offsets per subspace, radians."""

    offsets: dict[str, float]

    @classmethod
    def zero(cls) -> "PhaseFrame":
        return cls({"01": 0.0, "12": 0.0, "23": 0.0})

    def absorb(self, level: int, theta: float) -> None:
        for subspace, weight in _FRAME_SHIFTS[level].items():
            self.offsets[subspace] += weight * theta

    def wrapped(self) -> dict[str, float]:
        return {k: float(np.remainder(v, 2.0 * np.pi)) for k, v in self.offsets.items()}


def propagate_virtual_z(circuit: QuditCircuit) -> QuditCircuit:
    """Remove every virtual-Z gate by shifting later drive phases.

    The returned circuit differs from the input by a final diagonal unitary
    only, so computational-basis outcome distributions are unchanged.
    """
    frame = PhaseFrame.zero()
    gates: list[NativeGate] = []
    for g in circuit.gates:
        if g.kind == "VZ":
            frame.absorb(g.level, g.theta)
        else:
            offset = frame.offsets[g.subspace]
            gates.append(
                NativeGate(g.kind, g.theta, subspace=g.subspace, phase=g.phase + offset)
            )
    return QuditCircuit(tuple(gates), shots=circuit.shots)


def circuit_duration(circuit: QuditCircuit) -> float:
    """Wall-clock nanoseconds: pulses plus a 10 ns buffer per pulse gap."""
    return circuit.duration_ns()


# ---------------------------------------------------------------------------
# Clifford groups

def _canonical_key(U: np.ndarray, threshold: float = 0.2, decimals: int = 8) -> bytes:
    flat = U.ravel()
    idx = int(np.argmax(np.abs(flat) > threshold))
    phase = flat[idx] / abs(flat[idx])
    V = U / phase
    return (np.round(V.real, decimals) + 0.0).tobytes() + (
        np.round(V.imag, decimals) + 0.0
    ).tobytes()


@dataclass(frozen=True)
class CliffordGroup:
    """Canonicalized Clifford group with per-element lowering information.

    ``words`` holds, per element, the time-ordered recipe needed to realize
    it: for one qubit a rotation word [(axis, angle), ...]; for two qubits a
    token list mixing ('A'|'B', axis, angle) rotations and ('ZX90',) markers.
    """

    n_qubits: int
    matrices: np.ndarray
    words: tuple
    index: dict

    @property
    def size(self) -> int:
        return len(self.matrices)

    def index_of(self, U: np.ndarray) -> int:
        key = _canonical_key(np.asarray(U, dtype=complex))
        try:
            return self.index[key]
        except KeyError:
            raise KeyError("unitary is not a group element (up to phase)") from None

    def inverse_index(self, i: int) -> int:
        return self.index_of(self.matrices[i].conj().T)


_H_WORD = (("z", np.pi), ("y", np.pi / 2))  # H up to phase, Rz first in time
_S1_WORDS = (
    (),
    (("x", np.pi / 2), ("z", np.pi / 2)),
    (("z", -np.pi / 2), ("x", -np.pi / 2)),
)

_CNOT_BA_TOKENS = (("A", "x", -np.pi / 2), ("ZX90",), ("B", "z", -np.pi / 2))
_CNOT_AB_TOKENS = (
    tuple(("A",) + w for w in _H_WORD)
    + tuple(("B",) + w for w in _H_WORD)
    + _CNOT_BA_TOKENS
    + tuple(("A",) + w for w in _H_WORD)
    + tuple(("B",) + w for w in _H_WORD)
)
_CZ_TOKENS = (
    tuple(("A",) + w for w in _H_WORD)
    + (("ZX90",),)
    + tuple(("A",) + w for w in _H_WORD)
    + (("A", "z", -np.pi / 2), ("B", "z", -np.pi / 2))
)
_ISWAP_TOKENS = (
    # exp(i pi/4 YY) realized as W^dag (I x Z) ZX90 (I x Z) W
    ("B", "x", np.pi / 2),
    ("A", "z", -np.pi / 2),
    ("A", "z", np.pi),
    ("ZX90",),
    ("A", "z", np.pi),
    ("B", "x", -np.pi / 2),
    ("A", "z", np.pi / 2),
    # exp(i pi/4 XX) realized as (H x Z) ZX90 (H x Z)
    ("B", "z", np.pi),
    ("B", "y", np.pi / 2),
    ("A", "z", np.pi),
    ("ZX90",),
    ("B", "z", np.pi),
    ("B", "y", np.pi / 2),
    ("A", "z", np.pi),
)
_SWAP_TOKENS = _CNOT_BA_TOKENS + _CNOT_AB_TOKENS + _CNOT_BA_TOKENS

_CZ_TARGET = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def _word_matrix(word) -> np.ndarray:
    U = np.eye(2, dtype=complex)
    for axis, theta in word:
        U = rotation_matrix(axis, theta) @ U
    return U


@lru_cache(maxsize=None)
def _clifford_1q() -> CliffordGroup:
    generators = (("x", np.pi / 2), ("z", np.pi / 2))
    seen: dict[bytes, int] = {}
    mats: list[np.ndarray] = []
    words: list[tuple] = []
    frontier = [(np.eye(2, dtype=complex), ())]
    seen[_canonical_key(frontier[0][0])] = 0
    mats.append(frontier[0][0])
    words.append(())
    while frontier:
        nxt = []
        for U, word in frontier:
            for gen in generators:
                V = rotation_matrix(*gen) @ U
                key = _canonical_key(V)
                if key not in seen:
                    seen[key] = len(mats)
                    mats.append(V)
                    words.append(word + (gen,))
                    nxt.append((V, word + (gen,)))
        frontier = nxt
    group = CliffordGroup(1, np.stack(mats), tuple(words), seen)
    if group.size != 24:
        raise RuntimeError(f"single-qubit Clifford enumeration found {group.size} != 24")
    return group


def _tokens_matrix(tokens) -> np.ndarray:
    U = np.eye(DIM, dtype=complex)
    for tok in tokens:
        if tok[0] == "ZX90":
            U = zx90_target() @ U
        elif tok[0] == "A":
            U = two_qubit_operator(np.eye(2, dtype=complex), rotation_matrix(tok[1], tok[2])) @ U
        else:
            U = two_qubit_operator(rotation_matrix(tok[1], tok[2]), np.eye(2, dtype=complex)) @ U
    return U


@lru_cache(maxsize=None)
def _clifford_2q() -> CliffordGroup:
    c1 = _clifford_1q()
    # coset representatives: identity, 9 CNOT-class, 9 iSWAP-class, SWAP
    rep_tokens: list[tuple] = [()]
    rep_mats: list[np.ndarray] = [np.eye(DIM, dtype=complex)]
    for sa in _S1_WORDS:
        for sb in _S1_WORDS:
            layer = tuple(("A",) + w for w in sa) + tuple(("B",) + w for w in sb)
            rep_tokens.append(layer + _CZ_TOKENS)
            rep_mats.append(
                _CZ_TARGET @ two_qubit_operator(_word_matrix(sb), _word_matrix(sa))
            )
    for sa in _S1_WORDS:
        for sb in _S1_WORDS:
            layer = tuple(("A",) + w for w in sa) + tuple(("B",) + w for w in sb)
            rep_tokens.append(layer + _ISWAP_TOKENS)
            rep_mats.append(
                ISWAP_TARGET @ two_qubit_operator(_word_matrix(sb), _word_matrix(sa))
            )
    rep_tokens.append(_SWAP_TOKENS)
    rep_mats.append(SWAP_TARGET)

    mats = np.empty((24 * 24 * 20, DIM, DIM), dtype=complex)
    words: list[tuple] = []
    index: dict[bytes, int] = {}
    k = 0
    for ia in range(24):
        for ib in range(24):
            local = two_qubit_operator(c1.matrices[ib], c1.matrices[ia])
            layer = tuple(("A",) + w for w in c1.words[ia]) + tuple(
                ("B",) + w for w in c1.words[ib]
            )
            for rep_i, (rtok, rmat) in enumerate(zip(rep_tokens, rep_mats)):
                U = local @ rmat
                key = _canonical_key(U)
                if key in index:
                    raise RuntimeError("duplicate element in two-qubit Clifford build")
                index[key] = k
                mats[k] = U
                words.append(rtok + layer)
                k += 1
    group = CliffordGroup(2, mats, tuple(words), index)
    if group.size != 11520:
        raise RuntimeError(f"two-qubit Clifford build found {group.size} != 11520")
    return group


def clifford_group(n_qubits: int) -> CliffordGroup:
    """The canonical Clifford group on one (24) or two (11,520) qubits."""
    if n_qubits == 1:
        return _clifford_1q()
    if n_qubits == 2:
        return _clifford_2q()
    raise ValueError("only 1- or 2-qubit Clifford groups are available")


def compile_clifford_1q(index: int, target: str) -> QuditCircuit:
    """Native circuit of a single-qubit Clifford acting on qubit 'A' or 'B'."""
    word = _clifford_1q().words[index]
    if target == "A":
        return compile_rotation_word_a(word)
    if target == "B":
        return compile_rotation_word_b(word)
    raise ValueError("target must be 'A' or 'B'")


def compile_tokens(tokens) -> QuditCircuit:
    """Lower a token list; consecutive B rotations share one SWAP sandwich."""
    circ = QuditCircuit()
    pending_b: list[tuple[str, float]] = []

    def flush():
        nonlocal circ, pending_b
        if pending_b:
            circ = circ + compile_rotation_word_b(pending_b)
            pending_b = []

    for tok in tokens:
        if tok[0] == "B":
            pending_b.append((tok[1], tok[2]))
            continue
        flush()
        if tok[0] == "ZX90":
            circ = circ + compile_zx90()
        else:
            circ = circ + compile_rotation_a(tok[1], tok[2])
    flush()
    return circ


def compile_clifford_2q(index: int) -> QuditCircuit:
    """Native circuit of a two-qubit Clifford, routed through ZX90 entanglers."""
    return compile_tokens(_clifford_2q().words[index])


def clifford_unitary(n_qubits: int, index: int) -> np.ndarray:
    group = clifford_group(n_qubits)
    U = group.matrices[index]
    if n_qubits == 1:
        return U.copy()
    return U.copy()


# ---------------------------------------------------------------------------
# emulated gate API used by the experiment layer

@dataclass(frozen=True)
class VirtualQubitGate:
    """An emulated operation before lowering.

    kind: 'rx' | 'ry' | 'rz' (with target 'A'/'B' and angle), or one of
    'swap' | 'iswap' | 'zz' | 'zx90' | 'clifford1' | 'clifford2'.
    """

    kind: str
    target: str | None = None
    angle: float = 0.0
    index: int = 0

    def compile(self) -> QuditCircuit:
        k = self.kind
        if k in ("rx", "ry", "rz"):
            axis = k[1]
            if self.target == "A":
                return compile_rotation_a(axis, self.angle)
            if self.target == "B":
                return compile_rotation_b(axis, self.angle)
            raise ValueError("rotation needs target 'A' or 'B'")
        if k == "swap":
            return compile_swap()
        if k == "iswap":
            return compile_iswap()
        if k == "zz":
            return compile_zz(self.angle)
        if k == "zx90":
            return compile_zx90()
        if k == "clifford1":
            return compile_clifford_1q(self.index, self.target or "A")
        if k == "clifford2":
            return compile_clifford_2q(self.index)
        raise ValueError(f"unknown emulated gate kind {k!r}")

    def target_unitary(self) -> np.ndarray:
        k = self.kind
        if k in ("rx", "ry", "rz"):
            R = rotation_matrix(k[1], self.angle)
            eye = np.eye(2, dtype=complex)
            return two_qubit_operator(eye, R) if self.target == "A" else two_qubit_operator(R, eye)
        if k == "swap":
            return SWAP_TARGET.copy()
        if k == "iswap":
            return ISWAP_TARGET.copy()
        if k == "zz":
            return zz_target(self.angle)
        if k == "zx90":
            return zx90_target()
        if k == "clifford1":
            U = clifford_group(1).matrices[self.index]
            eye = np.eye(2, dtype=complex)
            return two_qubit_operator(eye, U) if self.target == "A" else two_qubit_operator(U, eye)
        if k == "clifford2":
            return clifford_group(2).matrices[self.index].copy()
        raise ValueError(f"unknown emulated gate kind {k!r}")
