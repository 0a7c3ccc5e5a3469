"""Optical elements of the quantum-injected parametric amplifier bench.

The bench consists of the two-mode polarization squeezer (the OPA
crystal pumped at gain ``g``), half/quarter-wave plates, and the
balanced beamsplitter that couples the amplified spatial mode ``k1``
onto the analysis modes ``a`` and ``b``.

Conventions (pinned so fixtures are bit-stable):

* half-wave plate Jones matrix ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]``;
* balanced beamsplitter in the symmetric convention, no relative ``i``;
* the amplifier interaction is the polarization-singlet pair creator
  ``K = a+_H b+_V - a+_V b+_H`` acting on (k1, k2), and the evolution is
  ``exp(g (K - K+))`` with the dimensionless gain ``g`` absorbing the
  coupling strength and interaction time.

``K`` is invariant under simultaneous polarization rotation of both
spatial modes (it creates a singlet pair), which is what makes the
amplifier act identically on every injected polarization.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fock import (
    FockState,
    Mode,
    ModeRegistry,
    add,
    apply_creation,
    creation_matrix,
    embed,
    inner_product,
    restrict,
)

# The linearized (single-pair) evolution is only meaningful well below
# saturation; reject gains where the dropped quadratic terms are not small.
FIRST_ORDER_GAIN_LIMIT = 0.5

# Squared-norm scale at which silently dropped over-cap weight is flagged.
TRUNCATION_LEAK_TOL = 1e-6

_SERIES_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class QubitSpec:
    """Single-photon polarization qubit alpha|H> + beta|V>."""

    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        norm_sq = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm_sq - 1.0) > 1e-12:
            raise ValueError("qubit amplitudes must satisfy |alpha|^2 + |beta|^2 = 1")

    @classmethod
    def from_bloch(cls, theta: float, phi: float) -> "QubitSpec":
        return cls(complex(math.cos(theta / 2.0)),
                   cmath.exp(1j * phi) * math.sin(theta / 2.0))

    @classmethod
    def horizontal(cls) -> "QubitSpec":
        return cls(1.0 + 0.0j, 0.0j)

    @classmethod
    def vertical(cls) -> "QubitSpec":
        return cls(0.0j, 1.0 + 0.0j)

    @classmethod
    def diagonal(cls, sign: int = +1) -> "QubitSpec":
        return cls(1.0 / math.sqrt(2.0) + 0.0j, sign / math.sqrt(2.0) + 0.0j)

    def orthogonal(self) -> "QubitSpec":
        """The antipodal state (-beta*, alpha*); exactly orthogonal."""
        return QubitSpec(-self.beta.conjugate(), self.alpha.conjugate())

    def bloch_angles(self) -> tuple[float, float]:
        theta = 2.0 * math.atan2(abs(self.beta), abs(self.alpha))
        if abs(self.beta) < 1e-15 or abs(self.alpha) < 1e-15:
            phi = 0.0
        else:
            phi = (cmath.phase(self.beta) - cmath.phase(self.alpha)) % (2.0 * math.pi)
        return theta, phi


def opa_registry(photon_cap: int = 4) -> ModeRegistry:
    """Amplifier modes only: (k1, k2) x (H, V)."""
    return ModeRegistry.from_spatial(("k1", "k2"), photon_cap)


def splitter_registry(photon_cap: int = 4) -> ModeRegistry:
    """Full bench: amplifier modes plus the analysis modes a and b."""
    return ModeRegistry.from_spatial(("k1", "k2", "a", "b"), photon_cap)


def prepare_injection(psi: QubitSpec, registry: ModeRegistry,
                      inject: str = "k1", idler: str = "k2") -> FockState:
    """Single photon of polarization ``psi`` on the injection mode, vacuum elsewhere."""
    for mode in ((inject, "H"), (inject, "V"), (idler, "H"), (idler, "V")):
        if mode not in registry:
            raise ValueError(f"registry is missing mode {mode!r}")
    vac = FockState.vacuum(registry)
    return add(apply_creation(vac, (inject, "H")),
               apply_creation(vac, (inject, "V")),
               psi.alpha, psi.beta)


def pair_creation(state: FockState, pump: tuple[str, str] = ("k1", "k2")) -> FockState:
    """Apply the singlet pair creator a+_H b+_V - a+_V b+_H."""
    s1, s2 = pump
    hv = apply_creation(apply_creation(state, (s2, "V")), (s1, "H"))
    vh = apply_creation(apply_creation(state, (s2, "H")), (s1, "V"))
    return add(hv, vh, 1.0, -1.0)


@lru_cache(maxsize=None)
def pair_creation_matrix(registry: ModeRegistry,
                         pump: tuple[str, str] = ("k1", "k2")) -> np.ndarray:
    s1, s2 = pump
    a_h = creation_matrix(registry, (s1, "H"))
    a_v = creation_matrix(registry, (s1, "V"))
    b_h = creation_matrix(registry, (s2, "H"))
    b_v = creation_matrix(registry, (s2, "V"))
    return a_h @ b_v - a_v @ b_h


def _series_expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaled-and-squared Taylor summation.

    The argument is halved until its 1-norm is below 0.5, the series is
    summed until the running term drops below 1e-12, and the result is
    squared back up.  Fine for the few-hundred-dimensional bases used
    here; verified against a library implementation in the test suite.
    """
    a = np.asarray(a, dtype=complex)
    scalings = 0
    while np.linalg.norm(a, 1) > 0.5:
        a = a / 2.0
        scalings += 1
    result = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    k = 1
    while np.linalg.norm(term, 1) > _SERIES_TAIL_TOL:
        term = term @ a / k
        result = result + term
        k += 1
    for _ in range(scalings):
        result = result @ result
    return result


@lru_cache(maxsize=None)
def _squeezer_unitary(registry: ModeRegistry, g: float,
                      pump: tuple[str, str]) -> np.ndarray:
    k = pair_creation_matrix(registry, pump)
    return _series_expm(g * (k - k.conj().T))


def _check_gain(g: float, first_order: bool) -> None:
    if g < 0.0:
        raise ValueError("gain must be non-negative")
    if first_order and g >= FIRST_ORDER_GAIN_LIMIT:
        raise ValueError(
            f"gain {g} is outside the linearized-evolution guard (< {FIRST_ORDER_GAIN_LIMIT})")


def _truncation_leakage(state: FockState, g: float,
                        pump: tuple[str, str]) -> float:
    """Squared-norm estimate of pair-emission flux past the photon cap."""
    cap = state.registry.photon_cap
    extended = embed(state, state.registry.with_cap(cap + 2))
    flux = pair_creation(extended, pump)
    over = sum(abs(amp) ** 2 for occ, amp in flux.amplitudes.items() if sum(occ) > cap)
    return g * g * over


def squeezer_evolve_exact(state: FockState, g: float,
                          pump: tuple[str, str] = ("k1", "k2"),
                          leakage_tol: float = TRUNCATION_LEAK_TOL) -> FockState:
    """Evolve under the full amplifier unitary exp(g (K - K+)).

    The generator is anti-Hermitian on the truncated basis, so the norm
    is preserved exactly; the truncation flag is set when the estimated
    pair flux past the cap exceeds ``leakage_tol``.
    """
    _check_gain(g, first_order=False)
    unitary = _squeezer_unitary(state.registry, float(g), pump)
    out = FockState.from_dense(state.registry, unitary @ state.to_dense(),
                               truncated=state.truncated)
    if not out.truncated and _truncation_leakage(out, g, pump) > leakage_tol:
        out = replace(out, truncated=True)
    return out


def squeezer_evolve_first_order(state: FockState, g: float, psi_basis: QubitSpec,
                                pump: tuple[str, str] = ("k1", "k2")) -> FockState:
    """Single-pair-emission approximation of the amplifier.

    Returns ``state + g K state`` (photon-annihilating terms dropped);
    the result is intentionally not normalized, normalization being
    deferred to post-selection.  The operator is the same for every
    polarization basis; ``psi_basis`` identifies the injection the
    caller believes it prepared, and a mismatch raises a warning rather
    than an error.
    """
    _check_gain(g, first_order=True)
    reference = prepare_injection(psi_basis, state.registry, *pump)
    norm_sq = state.norm_sq()
    overlap = abs(inner_product(reference, state)) ** 2
    if norm_sq == 0.0 or abs(overlap / norm_sq - 1.0) > 1e-9:
        warnings.warn("input is not the declared single-photon injection state; "
                      "applying the linearized amplifier anyway", stacklevel=2)
    return add(state, pair_creation(state, pump), 1.0, g)


def _substitute_modes(state: FockState, rules: dict[Mode, list[tuple[Mode, complex]]],
                      registry_out: ModeRegistry | None = None) -> FockState:
    """Rewrite creation operators mode by mode: a+_m -> sum_j c_j a+_j.

    Every term is re-expanded photon by photon, so bosonic sqrt factors
    come out of the ladder algebra itself.  Photon number is conserved
    (each substitution rule creates exactly one photon), so no term can
    cross the cap here.
    """
    reg_in = state.registry
    reg_out = registry_out if registry_out is not None else reg_in
    consumed = [reg_in.index(m) for m in rules]
    rule_list = [(reg_in.index(m), [(reg_out.index(t), c) for t, c in targets])
                 for m, targets in rules.items()]
    passthrough = [(i, reg_out.index(m)) for i, m in enumerate(reg_in.modes)
                   if i not in consumed]

    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.amplitudes.items():
        base = [0] * len(reg_out.modes)
        for i, j in passthrough:
            base[j] = occ[i]
        coeff = amp
        for i in consumed:
            coeff /= math.sqrt(math.factorial(occ[i]))
        terms = {tuple(base): coeff}
        for i, targets in rule_list:
            for _ in range(occ[i]):
                grown: dict[tuple[int, ...], complex] = {}
                for t_occ, t_amp in terms.items():
                    for j, c in targets:
                        lifted = list(t_occ)
                        lifted[j] += 1
                        key = tuple(lifted)
                        grown[key] = grown.get(key, 0.0) + t_amp * c * math.sqrt(lifted[j])
                terms = grown
        for t_occ, t_amp in terms.items():
            out[t_occ] = out.get(t_occ, 0.0) + t_amp
    return FockState(reg_out, out, truncated=state.truncated).pruned()


def apply_beamsplitter(state: FockState,
                       in_modes: Sequence[Mode] = (("k1", "H"), ("k1", "V")),
                       out_modes: Sequence[Mode] = (("a", "H"), ("a", "V"),
                                                    ("b", "H"), ("b", "V")),
                       inverse: bool = False) -> FockState:
    """Balanced beamsplitter a+_{in,pol} -> (a+_{p,pol} + a+_{q,pol}) / sqrt(2).

    Polarization is preserved; ``out_modes`` must be registered and in
    vacuum.  With ``inverse=True`` the adjoint map is applied, valid on
    states produced by the forward splitter (anything that would need
    the unused second input port is rejected).
    """
    registry = state.registry
    in_modes = [tuple(m) for m in in_modes]
    out_modes = [tuple(m) for m in out_modes]
    for mode in (*in_modes, *out_modes):
        registry.index(mode)

    out_spatial: list[str] = []
    for s, _ in out_modes:
        if s not in out_spatial:
            out_spatial.append(s)
    if len(out_spatial) != 2:
        raise ValueError("out_modes must span exactly two spatial modes")
    p, q = out_spatial
    in_spatial = in_modes[0][0]
    pols = [pol for _, pol in in_modes]

    def _require_vacuum(modes: Sequence[Mode], what: str) -> None:
        for mode in modes:
            i = registry.index(mode)
            if any(occ[i] for occ in state.amplitudes):
                raise ValueError(f"beamsplitter {what} mode {mode!r} is occupied")

    root_half = 1.0 / math.sqrt(2.0)
    if not inverse:
        _require_vacuum(out_modes, "output")
        rules = {(in_spatial, pol): [((p, pol), root_half), ((q, pol), root_half)]
                 for pol in pols}
        return _substitute_modes(state, rules)

    _require_vacuum(in_modes, "input")
    # The unused input port shows up as a virtual spatial mode; its
    # occupation must cancel for states in the forward image.
    virtual = "~" + in_spatial
    extended = ModeRegistry(registry.modes + tuple((virtual, pol) for pol in pols),
                            registry.photon_cap)
    rules = {}
    for pol in pols:
        rules[(p, pol)] = [((in_spatial, pol), root_half), ((virtual, pol), root_half)]
        rules[(q, pol)] = [((in_spatial, pol), root_half), ((virtual, pol), -root_half)]
    mixed = _substitute_modes(embed(state, extended), rules)
    return restrict(mixed, registry)


def waveplate_jones(kind: str, angle: float) -> np.ndarray:
    """Jones matrix of a wave plate with fast axis at ``angle`` radians."""
    c2, s2 = math.cos(2.0 * angle), math.sin(2.0 * angle)
    if kind == "half":
        return np.array([[c2, s2], [s2, -c2]], dtype=complex)
    if kind == "quarter":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]], dtype=complex)
        return rot @ np.diag([1.0, 1.0j]) @ rot.T
    raise ValueError(f"unknown wave plate kind {kind!r}")


def apply_waveplate(state: FockState, spatial_mode: str, angle: float,
                    kind: str = "half") -> FockState:
    """Rotate the (H, V) pair of one spatial mode by the wave plate unitary."""
    h, v = (spatial_mode, "H"), (spatial_mode, "V")
    if h not in state.registry or v not in state.registry:
        raise ValueError(f"spatial mode {spatial_mode!r} needs both H and V sub-modes")
    jones = waveplate_jones(kind, angle)
    rules = {
        h: [(h, complex(jones[0, 0])), (v, complex(jones[1, 0]))],
        v: [(h, complex(jones[0, 1])), (v, complex(jones[1, 1]))],
    }
    return _substitute_modes(state, rules)


def run_amplifier(psi: QubitSpec, g: float = 0.1, method: str = "first_order",
                  photon_cap: int = 4) -> FockState:
    """Inject ``psi`` and amplify; state lives on the (k1, k2) registry."""
    state = prepare_injection(psi, opa_registry(photon_cap))
    if method == "first_order":
        return squeezer_evolve_first_order(state, g, psi)
    if method == "exact":
        return squeezer_evolve_exact(state, g)
    raise ValueError(f"unknown evolution method {method!r}")


def run_amplifier_splitter(psi: QubitSpec, g: float = 0.1,
                           method: str = "first_order",
                           photon_cap: int = 4) -> FockState:
    """Amplify and send k1 through the balanced splitter onto (a, b)."""
    amplified = run_amplifier(psi, g, method, photon_cap)
    return apply_beamsplitter(embed(amplified, splitter_registry(photon_cap)))
