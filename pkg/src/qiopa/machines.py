"""Figures of merit for the three machines the amplifier realizes at once.

Conditioned on a pair emission (two photons on k1, one on k2), the
amplified output acts simultaneously as

* a universal entangler: how much of the k1 pair sits in the
  symmetrized state (|psi perp> + |perp psi>)/sqrt(2),
* a 1-to-2 universal cloner: overlap of each k1 photon with the input,
* a universal-NOT gate: overlap of the k2 photon with the flipped input.

The two-photon density operator on k1 is reported in the input-adapted
basis ``(psi_psi, psi_perp_sym, perp_perp)``; fidelity evaluators also
accept operators labelled by raw (H, V) occupations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .fock import DensityOperator, FockState, occupation_of, project, reduced_density
from .optics import QubitSpec, run_amplifier

PAIR_BASIS_LABELS = ("psi_psi", "psi_perp_sym", "perp_perp")

# k1 two-photon occupations (n_H, n_V) in the order matching the rows of
# the adapted-basis transformation below.
_PAIR_OCCUPATIONS = ((2, 0), (1, 1), (0, 2))


@dataclass(frozen=True)
class MachineReport:
    """Per-input fidelities of the three contextual machines."""

    psi: QubitSpec
    entangler_fidelity: float
    clone_fidelity: float
    unot_fidelity: float
    method: str

    def to_dict(self) -> dict:
        theta, phi = self.psi.bloch_angles()
        return {
            "theta": theta,
            "phi": phi,
            "entangler_fidelity": self.entangler_fidelity,
            "clone_fidelity": self.clone_fidelity,
            "unot_fidelity": self.unot_fidelity,
            "method": self.method,
        }


def pair_basis_matrix(psi: QubitSpec) -> np.ndarray:
    """Columns: psi-adapted two-photon states in (2,0), (1,1), (0,2) coordinates.

    Expanding (alpha a+_H + beta a+_V)-type pair creators gives the
    symmetric-subspace change of basis used to express the k1 pair in
    terms of the injected polarization and its orthogonal partner.
    """
    a, b = psi.alpha, psi.beta
    ac, bc = a.conjugate(), b.conjugate()
    r2 = math.sqrt(2.0)
    return np.array([
        [a * a, -r2 * a * bc, bc * bc],
        [r2 * a * b, abs(a) ** 2 - abs(b) ** 2, -r2 * ac * bc],
        [b * b, r2 * ac * b, ac * ac],
    ], dtype=complex)


def clone_channel_density(output: FockState, psi: QubitSpec) -> DensityOperator:
    """Two-photon density operator on k1, conditioned on a pair emission.

    The unamplified single-photon branch is discarded: the condition is
    exactly two photons on k1 and one on k2, which is what a fourfold
    coincidence selects.  The result is trace-normalized and expressed
    in the psi-adapted basis ``PAIR_BASIS_LABELS``.
    """
    registry = output.registry
    branch = project(output, lambda occ: occupation_of(registry, occ, "k1") == 2
                     and occupation_of(registry, occ, "k2") == 1)
    if branch.norm_sq() == 0.0:
        raise ValueError("output has no pair-emission branch to condition on")
    k1_modes = [registry.modes[i] for i in registry.spatial_indices("k1")]
    rho_occ = reduced_density(branch.normalized(), k1_modes, labels=_PAIR_OCCUPATIONS)
    basis = pair_basis_matrix(psi)
    rho_psi = basis.conj().T @ rho_occ.matrix @ basis
    return DensityOperator(PAIR_BASIS_LABELS, rho_psi).validate()


def _symmetric_embedding(labels: tuple, psi: QubitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Embedding of a labelled symmetric pair basis into the two-qubit space.

    Returns (E, target) with E the 4x3 isometry into an ordered product
    basis and ``target`` the single-qubit input state in the matching
    coordinates.
    """
    e = np.zeros((4, 3), dtype=complex)
    r2 = 1.0 / math.sqrt(2.0)
    if labels == PAIR_BASIS_LABELS:
        # product basis (psi psi, psi perp, perp psi, perp perp)
        e[0, 0] = 1.0
        e[1, 1] = e[2, 1] = r2
        e[3, 2] = 1.0
        target = np.array([1.0, 0.0], dtype=complex)
    elif tuple(labels) == _PAIR_OCCUPATIONS:
        # product basis (HH, HV, VH, VV)
        e[0, 0] = 1.0
        e[1, 1] = e[2, 1] = r2
        e[3, 2] = 1.0
        target = np.array([psi.alpha, psi.beta], dtype=complex)
    else:
        raise ValueError(f"unrecognized pair-basis labels {labels!r}")
    return e, target


def entangler_fidelity(rho: DensityOperator, psi: QubitSpec) -> float:
    """Weight of the symmetrized (psi, perp) state in the k1 pair."""
    if rho.basis_labels == PAIR_BASIS_LABELS:
        coords = np.array([0.0, 1.0, 0.0], dtype=complex)
    elif tuple(rho.basis_labels) == _PAIR_OCCUPATIONS:
        basis = pair_basis_matrix(psi)
        coords = basis[:, 1]
    else:
        raise ValueError(f"unrecognized pair-basis labels {rho.basis_labels!r}")
    return rho.expectation(coords)


def clone_fidelity(rho: DensityOperator, psi: QubitSpec) -> float:
    """Single-clone fidelity <psi| rho_1 |psi> of the k1 pair."""
    embedding, target = _symmetric_embedding(tuple(rho.basis_labels), psi)
    rho_pair = embedding @ rho.matrix @ embedding.conj().T
    rho_one = np.trace(rho_pair.reshape(2, 2, 2, 2), axis1=1, axis2=3)
    return float(np.real(target.conj() @ rho_one @ target))


def unot_fidelity(output: FockState, psi: QubitSpec) -> float:
    """Overlap of the conditional k2 photon with the flipped input.

    Conditioning on two photons in k1 already pins the k2 photon number
    to one, because the amplifier emits photons strictly in pairs.
    """
    registry = output.registry
    branch = project(output, lambda occ: occupation_of(registry, occ, "k1") == 2)
    if branch.norm_sq() == 0.0:
        raise ValueError("output has no pair-emission branch to condition on")
    k2_modes = [registry.modes[i] for i in registry.spatial_indices("k2")]
    rho = reduced_density(branch.normalized(), k2_modes, labels=((0, 1), (1, 0)))
    perp = psi.orthogonal()
    # label order ((0,1), (1,0)) means (V photon, H photon)
    coords = np.array([perp.beta, perp.alpha], dtype=complex)
    return rho.expectation(coords)


def machine_report(psi: QubitSpec, g: float = 0.1, method: str = "first_order",
                   photon_cap: int = 4) -> MachineReport:
    """Run the amplifier for one input and evaluate all three machines."""
    output = run_amplifier(psi, g, method, photon_cap)
    rho = clone_channel_density(output, psi)
    return MachineReport(
        psi=psi,
        entangler_fidelity=entangler_fidelity(rho, psi),
        clone_fidelity=clone_fidelity(rho, psi),
        unot_fidelity=unot_fidelity(output, psi),
        method=method,
    )


def bloch_lattice(n: int) -> list[QubitSpec]:
    """Deterministic low-discrepancy sample of n Bloch-sphere points.

    Golden-angle (Fibonacci) lattice with the standard half-cell offset;
    no randomness, so sweeps are exactly reproducible.
    """
    golden_angle = math.pi * (3.0 - math.sqrt(5.0))
    points = []
    for i in range(n):
        z = 1.0 - 2.0 * (i + 0.5) / n
        theta = math.acos(max(-1.0, min(1.0, z)))
        phi = (i * golden_angle) % (2.0 * math.pi)
        points.append(QubitSpec.from_bloch(theta, phi))
    return points


def report_spread(reports: list[MachineReport]) -> dict[str, float]:
    """Max minus min of each fidelity across a batch of reports."""
    spreads = {}
    for name in ("entangler_fidelity", "clone_fidelity", "unot_fidelity"):
        values = [getattr(r, name) for r in reports]
        spreads[name] = max(values) - min(values)
    return spreads


def universality_sweep(n: int, g: float = 0.1, method: str = "first_order",
                       photon_cap: int = 4, parallel: int = 1,
                       ) -> tuple[list[MachineReport], dict[str, float]]:
    """Evaluate the machines on a Bloch lattice; returns reports and spreads.

    Reports come back in lattice order regardless of ``parallel``.
    """
    if n < 2:
        raise ValueError("need at least 2 sample points")
    points = bloch_lattice(n)
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            reports = list(pool.map(
                lambda q: machine_report(q, g, method, photon_cap), points))
    else:
        reports = [machine_report(q, g, method, photon_cap) for q in points]
    return reports, report_spread(reports)
