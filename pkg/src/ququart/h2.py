"""Minimal-basis hydrogen-molecule electronic structure.

Generates the two-qubit Hamiltonian coefficient table shipped with the
package.  Both molecular orbitals of H2 in a minimal basis are fixed by
symmetry, so the restricted solution needs no SCF iterations, and the
configuration basis used here (the two closed-shell determinants plus the
two spin-aligned open-shell determinants) is an exact invariant subspace:
diagonalizing the resulting 4x4 operator reproduces the full CI ground
state of the basis.

All electronic integrals are evaluated analytically for s-type Gaussian
contractions (three primitives per atom, standard minimal-basis hydrogen
exponents and weights, orbital exponent scaling included).
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

ALPHA = np.array([3.42525091, 0.62391373, 0.16885540])
WEIGHT = np.array([0.15432897, 0.53532814, 0.44463454])
BOHR_PER_ANGSTROM = 1.0 / 0.529177210903

#: bond-distance grid of the shipped coefficient table, angstrom
DEFAULT_DISTANCES = tuple(np.round(np.arange(0.30, 2.101, 0.15), 2))


def _boys0(t: float) -> float:
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * np.sqrt(np.pi / t) * erf(np.sqrt(t))


def _integrals(r_bohr: float):
    """AO overlap, core Hamiltonian and two-electron tensor for H2."""
    centers = (np.zeros(3), np.array([0.0, 0.0, r_bohr]))
    norms = (2.0 * ALPHA / np.pi) ** 0.75
    coeff = WEIGHT * norms

    def s_prim(a, ra, b, rb):
        p = a + b
        r2 = float(np.dot(ra - rb, ra - rb))
        return (np.pi / p) ** 1.5 * np.exp(-a * b / p * r2)

    def t_prim(a, ra, b, rb):
        p = a + b
        q = a * b / p
        r2 = float(np.dot(ra - rb, ra - rb))
        return q * (3.0 - 2.0 * q * r2) * (np.pi / p) ** 1.5 * np.exp(-q * r2)

    def v_prim(a, ra, b, rb, rc):
        p = a + b
        r2 = float(np.dot(ra - rb, ra - rb))
        pc = (a * ra + b * rb) / p - rc
        return -2.0 * np.pi / p * np.exp(-a * b / p * r2) * _boys0(p * float(np.dot(pc, pc)))

    def eri_prim(a, ra, b, rb, c, rc, d, rd):
        p = a + b
        r = c + d
        pp = (a * ra + b * rb) / p
        qq = (c * rc + d * rd) / r
        ab2 = float(np.dot(ra - rb, ra - rb))
        cd2 = float(np.dot(rc - rd, rc - rd))
        pq2 = float(np.dot(pp - qq, pp - qq))
        pref = 2.0 * np.pi ** 2.5 / (p * r * np.sqrt(p + r))
        return pref * np.exp(-a * b / p * ab2 - c * d / r * cd2) * _boys0(p * r / (p + r) * pq2)

    S = np.zeros((2, 2))
    H = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for a, da in zip(ALPHA, coeff):
                for b, db in zip(ALPHA, coeff):
                    w = da * db
                    S[i, j] += w * s_prim(a, centers[i], b, centers[j])
                    H[i, j] += w * t_prim(a, centers[i], b, centers[j])
                    for rc in centers:
                        H[i, j] += w * v_prim(a, centers[i], b, centers[j], rc)
    eri = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    v = 0.0
                    for a, da in zip(ALPHA, coeff):
                        for b, db in zip(ALPHA, coeff):
                            for c, dc in zip(ALPHA, coeff):
                                for d, dd in zip(ALPHA, coeff):
                                    v += da * db * dc * dd * eri_prim(
                                        a, centers[i], b, centers[j], c, centers[k], d, centers[l]
                                    )
                    eri[i, j, k, l] = v
    return S, H, eri


def configuration_energies(r_angstrom: float) -> dict:
    """Energies of the four encoded configurations plus their coupling.

    Returns E_gg / E_uu (both electrons in the bonding or antibonding
    orbital), E_open (spin-aligned open-shell determinant), and the exchange
    integral K coupling the two closed shells.  Nuclear repulsion included.
    """
    r = r_angstrom * BOHR_PER_ANGSTROM
    S, H, eri = _integrals(r)
    s12 = S[0, 1]
    cg = np.array([1.0, 1.0]) / np.sqrt(2.0 * (1.0 + s12))
    cu = np.array([1.0, -1.0]) / np.sqrt(2.0 * (1.0 - s12))

    def one(ci, cj):
        return float(ci @ H @ cj)

    def two(c1, c2, c3, c4):
        return float(np.einsum("i,j,k,l,ijkl->", c1, c2, c3, c4, eri))

    h_g = one(cg, cg)
    h_u = one(cu, cu)
    j_gg = two(cg, cg, cg, cg)
    j_uu = two(cu, cu, cu, cu)
    j_gu = two(cg, cg, cu, cu)
    k_gu = two(cg, cu, cg, cu)
    e_nn = 1.0 / r
    return {
        "E_gg": 2.0 * h_g + j_gg + e_nn,
        "E_uu": 2.0 * h_u + j_uu + e_nn,
        "E_open": h_g + h_u + j_gu - k_gu + e_nn,
        "K": k_gu,
    }


def pauli_coefficients(r_angstrom: float) -> dict:
    """Two-qubit Hamiltonian coefficients at one bond distance, Hartree.

    The encoding places the two closed-shell configurations on the embedded
    |01> and |10> states (coupled by the exchange term through XX and YY)
    and the two spin-aligned open-shell determinants on |00> and |11>.
    """
    e = configuration_energies(r_angstrom)
    e0 = e3 = e["E_open"]
    e1, e2 = e["E_gg"], e["E_uu"]
    return {
        "R": float(r_angstrom),
        "g0": (e0 + e1 + e2 + e3) / 4.0,
        "g_ZI": (e0 + e1 - e2 - e3) / 4.0,
        "g_IZ": (e0 - e1 + e2 - e3) / 4.0,
        "g_ZZ": (e0 - e1 - e2 + e3) / 4.0,
        "g_XX": e["K"] / 2.0,
        "g_YY": e["K"] / 2.0,
    }


TABLE_COLUMNS = ("R", "g0", "g_IZ", "g_ZI", "g_ZZ", "g_XX", "g_YY")


def coefficient_table_text(distances=DEFAULT_DISTANCES) -> str:
    lines = [
        "# Two-qubit hydrogen-molecule Hamiltonian coefficients, Hartree.",
        "# Generated by ququart.h2 (minimal-basis Gaussian integrals, symmetry-",
        "# determined restricted orbitals, exact 4-configuration reduction).",
        "# Columns: " + ",".join(TABLE_COLUMNS),
        ",".join(TABLE_COLUMNS),
    ]
    for r in distances:
        g = pauli_coefficients(float(r))
        lines.append(",".join(repr(float(g[c])) if c != "R" else repr(float(g["R"])) for c in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def write_coefficient_table(path, distances=DEFAULT_DISTANCES) -> None:
    with open(path, "w") as fh:
        fh.write(coefficient_table_text(distances))
