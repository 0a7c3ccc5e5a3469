"""Post-selection and coincidence statistics for the amplifier bench.

The canonical measurement is a fourfold coincidence: trigger, one
photon on each splitter output (a, b) and one on k2.  Conditioned on
that pattern the three-photon polarization state is summarized as an
XYZ histogram (X on a, Y on b, Z on k2), probed for coherence with
45-degree analyzers, and scanned against a mode-overlap model that
interpolates between distinguishable and indistinguishable photons.

Photon distinguishability is modelled by a single scalar overlap
``v``: interference (cross) terms between two-photon outcomes are
scaled by ``v`` before probabilities are formed.  Fully overlapped
photons (v = 1) double the same-polarization coincidence rate relative
to the fully distinguishable case, so the scan ratio satisfies
``R(z) = 1 + v(z)`` with the Gaussian ``v(z)`` of :class:`OverlapModel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Mapping, Sequence

import numpy as np

from .fock import FockState, occupation_of, project
from .optics import QubitSpec, run_amplifier_splitter, waveplate_jones

# Analyzer half-wave plates at 22.5 degrees probe the 45-degree basis.
ANALYZER_45 = math.pi / 8.0

XYZ_LABELS = tuple("".join(p) for p in iter_product("HV", repeat=3))


@dataclass(frozen=True)
class CoincidencePattern:
    """Required total photon number per spatial mode."""

    constraints: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        spatials = [s for s, _ in self.constraints]
        if len(set(spatials)) != len(spatials):
            raise ValueError("pattern constraints must name distinct spatial modes")
        if any(n < 0 for _, n in self.constraints):
            raise ValueError("pattern photon counts must be non-negative")

    def matches(self, state: FockState, occ: tuple[int, ...]) -> bool:
        registry = state.registry
        return all(occupation_of(registry, occ, s) == n for s, n in self.constraints)


def triple_coincidence() -> CoincidencePattern:
    """One photon each on a, b and k2: the fourfold-coincidence pattern."""
    return CoincidencePattern((("a", 1), ("b", 1), ("k2", 1)))


def postselect(state: FockState, pattern: CoincidencePattern,
               ) -> tuple[float, FockState | None]:
    """Project onto a coincidence pattern.

    Returns the pattern probability (projected weight over total
    weight; the input may carry an unnormalized perturbative norm)
    and the renormalized conditional state, or ``None`` when the
    pattern has no support.
    """
    for spatial, _ in pattern.constraints:
        state.registry.spatial_indices(spatial)
    total = state.norm_sq()
    if total == 0.0:
        return 0.0, None
    kept = project(state, lambda occ: pattern.matches(state, occ))
    weight = kept.norm_sq()
    if weight == 0.0:
        return 0.0, None
    return weight / total, kept.normalized()


def _xyz_amplitudes(conditional: FockState) -> np.ndarray:
    """Amplitude tensor c[x, y, z] over single-photon polarizations.

    Requires every term to hold exactly one photon on each of a, b and
    k2 and nothing anywhere else.
    """
    registry = conditional.registry
    index = {(s, p): registry.index((s, p)) for s in ("a", "b", "k2") for p in "HV"}
    amps = np.zeros((2, 2, 2), dtype=complex)
    for occ, amp in conditional.amplitudes.items():
        good = (sum(occ) == 3
                and occupation_of(registry, occ, "a") == 1
                and occupation_of(registry, occ, "b") == 1
                and occupation_of(registry, occ, "k2") == 1)
        if not good:
            raise ValueError("state does not have one-photon support on (a, b, k2)")
        x = 0 if occ[index[("a", "H")]] else 1
        y = 0 if occ[index[("b", "H")]] else 1
        z = 0 if occ[index[("k2", "H")]] else 1
        amps[x, y, z] = amp
    return amps


def histogram_xyz(conditional: FockState) -> dict[str, float]:
    """Probabilities of the eight XYZ polarization outcomes."""
    amps = _xyz_amplitudes(conditional)
    probs = np.abs(amps) ** 2
    total = probs.sum()
    if total <= 0.0:
        raise ValueError("conditional state has no weight")
    probs = probs / total
    return {label: float(probs[i // 4, (i // 2) % 2, i % 2])
            for i, label in enumerate(XYZ_LABELS)}


def rotated_basis_correlation(conditional: FockState, analyzer_angle: float,
                              coherence: float = 1.0) -> dict[str, float]:
    """Polarization correlation of a and b after half-wave analyzers.

    Conditions on Z = H, rotates both analysis arms by ``analyzer_angle``
    and returns the probabilities that the two photons come out with the
    same or different polarization.  ``coherence`` scales the cross
    terms between two-photon outcomes (1 = fully coherent superposition,
    0 = statistical mixture).
    """
    if not 0.0 <= coherence <= 1.0:
        raise ValueError("coherence must lie in [0, 1]")
    amps = _xyz_amplitudes(conditional)
    pair = amps[:, :, 0].reshape(4)
    weight = float(np.sum(np.abs(pair) ** 2))
    if weight <= 0.0:
        raise ValueError("no Z=H weight to condition on")
    rho = np.outer(pair, pair.conj())
    if coherence != 1.0:
        off = ~np.eye(4, dtype=bool)
        rho[off] *= coherence
    jones = waveplate_jones("half", analyzer_angle)
    both = np.kron(jones, jones)
    outcome = np.real(np.diag(both @ rho @ both.conj().T)) / weight
    return {"same": float(outcome[0] + outcome[3]),
            "different": float(outcome[1] + outcome[2])}


@dataclass(frozen=True)
class OverlapModel:
    """Gaussian mode overlap versus the pump-mirror position z (um)."""

    sigma_z: float
    v_max: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma_z <= 0.0:
            raise ValueError("sigma_z must be positive")
        if not 0.0 <= self.v_max <= 1.0:
            raise ValueError("v_max must lie in [0, 1]")

    def overlap(self, z: float) -> float:
        return self.v_max * math.exp(-z * z / (2.0 * self.sigma_z ** 2))


@dataclass(frozen=True)
class ScanPoint:
    z: float
    overlap: float
    ratio: float


@dataclass(frozen=True)
class ScanResult:
    points: tuple[ScanPoint, ...]

    def ratios(self) -> list[float]:
        return [p.ratio for p in self.points]


def overlap_scan(model: OverlapModel, z_values: Sequence[float], *,
                 psi: QubitSpec | None = None, g: float = 0.1,
                 method: str = "first_order", photon_cap: int = 4,
                 analyzer_angle: float = ANALYZER_45) -> ScanResult:
    """Coincidence enhancement R(z) from the full detection pipeline.

    For each mirror position the overlap ``v(z)`` rescales the coherence
    of the post-selected state and the same-polarization coincidence
    probability in the 45-degree basis is compared with the fully
    distinguishable baseline.  The resulting ratio equals ``1 + v(z)``.
    """
    if len(z_values) == 0:
        raise ValueError("z_values must not be empty")
    state = run_amplifier_splitter(psi or QubitSpec.horizontal(), g, method, photon_cap)
    probability, conditional = postselect(state, triple_coincidence())
    if conditional is None:
        raise ValueError("no coincidence support; is the gain zero?")
    baseline = rotated_basis_correlation(conditional, analyzer_angle, coherence=0.0)["same"]
    points = []
    for z in z_values:
        v = model.overlap(float(z))
        same = rotated_basis_correlation(conditional, analyzer_angle, coherence=v)["same"]
        points.append(ScanPoint(z=float(z), overlap=v, ratio=same / baseline))
    return ScanResult(tuple(points))


@dataclass(frozen=True)
class CountRecord:
    """One simulated acquisition bin."""

    pattern: str
    probability: float
    simulated_counts: int
    duration_s: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "probability": self.probability,
            "simulated_counts": self.simulated_counts,
            "duration_s": self.duration_s,
            "seed": self.seed,
        }


def monte_carlo_counts(probabilities: Mapping[str, float], total_events: int,
                       seed: int, duration_s: float = 2400.0) -> list[CountRecord]:
    """Multinomial draw of event counts; deterministic for a fixed seed."""
    if total_events < 0:
        raise ValueError("total_events must be non-negative")
    labels = list(probabilities)
    pvec = np.array([probabilities[l] for l in labels], dtype=float)
    if abs(pvec.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(total_events, pvec / pvec.sum())
    return [CountRecord(pattern=label, probability=float(p),
                        simulated_counts=int(c), duration_s=duration_s, seed=seed)
            for label, p, c in zip(labels, pvec, counts)]


def apply_detector_efficiency(probabilities: Mapping[str, float], eta: float,
                              n_detectors: int) -> dict[str, float]:
    """Scale k-fold coincidence probabilities by eta^k.

    No renormalization: absolute rates shrink while ratios between
    patterns (and the scan ratio R) are untouched.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    if n_detectors < 0:
        raise ValueError("n_detectors must be non-negative")
    factor = eta ** n_detectors
    return {label: p * factor for label, p in probabilities.items()}
