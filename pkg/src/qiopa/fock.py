"""Truncated multimode bosonic Fock states.

Optical modes are labelled by a (spatial, polarization) pair, e.g.
``("k1", "H")``.  A :class:`ModeRegistry` fixes an ordered set of such
modes together with a cap on the *total* photon number; the retained
basis is the set of occupation vectors with total occupation at or
below the cap, enumerated in lexicographic order so that fixtures and
serialized states are reproducible.

States are sparse maps from occupation vectors to complex amplitudes.
All operations return new values; states are never mutated after
construction, so they are safe to share between threads.  Creation
operators drop any term that would exceed the photon cap and mark the
result with a ``truncated`` flag instead of raising, which keeps
silent truncation detectable in the perturbative regime this package
targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

Mode = tuple[str, str]
Occupation = tuple[int, ...]

# Amplitudes below this magnitude are dropped when states are assembled;
# invisible at the 1e-12 tolerances used throughout.
PRUNE_EPS = 1e-14


class TruncationWarning(UserWarning):
    """Issued when an operation silently discards over-cap amplitude."""


@dataclass(frozen=True)
class ModeRegistry:
    """Ordered set of optical modes with a total photon-number cap."""

    modes: tuple[Mode, ...]
    photon_cap: int

    def __post_init__(self) -> None:
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("mode labels must be unique")
        if self.photon_cap < 1:
            raise ValueError("photon_cap must be >= 1")

    @classmethod
    def from_spatial(cls, spatial: Sequence[str], photon_cap: int = 4,
                     polarizations: Sequence[str] = ("H", "V")) -> "ModeRegistry":
        """Build a registry with an (H, V) polarization pair per spatial mode."""
        modes = tuple((s, p) for s in spatial for p in polarizations)
        return cls(modes=modes, photon_cap=photon_cap)

    def index(self, mode: Mode) -> int:
        try:
            return self.modes.index(tuple(mode))
        except ValueError:
            raise ValueError(f"mode {mode!r} is not registered") from None

    def __contains__(self, mode: object) -> bool:
        return mode in self.modes

    def spatial_indices(self, spatial: str) -> tuple[int, ...]:
        """Indices of all polarization sub-modes of one spatial mode."""
        idx = tuple(i for i, (s, _) in enumerate(self.modes) if s == spatial)
        if not idx:
            raise ValueError(f"spatial mode {spatial!r} is not registered")
        return idx

    def with_cap(self, photon_cap: int) -> "ModeRegistry":
        return ModeRegistry(modes=self.modes, photon_cap=photon_cap)

    def vacuum_occupation(self) -> Occupation:
        return (0,) * len(self.modes)


@lru_cache(maxsize=None)
def enumerate_basis(registry: ModeRegistry) -> tuple[Occupation, ...]:
    """All occupation vectors with total photons <= cap, lexicographic."""
    n_modes = len(registry.modes)
    cap = registry.photon_cap

    def extend(prefix: list[int], remaining: int, budget: int):
        if remaining == 0:
            yield tuple(prefix)
            return
        for count in range(budget + 1):
            prefix.append(count)
            yield from extend(prefix, remaining - 1, budget - count)
            prefix.pop()

    if n_modes == 0:
        return ((),)
    return tuple(extend([], n_modes, cap))


@lru_cache(maxsize=None)
def basis_index(registry: ModeRegistry) -> Mapping[Occupation, int]:
    return {occ: i for i, occ in enumerate(enumerate_basis(registry))}


@dataclass(frozen=True)
class FockState:
    """Sparse amplitude map over the truncated occupation basis.

    ``truncated`` records that some upstream operation dropped over-cap
    weight; it propagates through every derived state.
    """

    registry: ModeRegistry
    amplitudes: dict[Occupation, complex] = field(default_factory=dict)
    truncated: bool = False

    def __post_init__(self) -> None:
        n = len(self.registry.modes)
        cap = self.registry.photon_cap
        for occ in self.amplitudes:
            if len(occ) != n:
                raise ValueError(f"occupation {occ} has wrong length for registry")
            if any(c < 0 for c in occ) or sum(occ) > cap:
                raise ValueError(f"occupation {occ} violates the photon cap {cap}")

    @classmethod
    def vacuum(cls, registry: ModeRegistry) -> "FockState":
        return cls(registry, {registry.vacuum_occupation(): 1.0 + 0.0j})

    @classmethod
    def basis_state(cls, registry: ModeRegistry, occupation: Sequence[int]) -> "FockState":
        return cls(registry, {tuple(occupation): 1.0 + 0.0j})

    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def normalized(self) -> "FockState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return FockState(self.registry,
                         {occ: a / n for occ, a in self.amplitudes.items()},
                         truncated=self.truncated)

    def pruned(self, eps: float = PRUNE_EPS) -> "FockState":
        kept = {occ: a for occ, a in self.amplitudes.items() if abs(a) > eps}
        return FockState(self.registry, kept, truncated=self.truncated)

    def to_dense(self) -> np.ndarray:
        index = basis_index(self.registry)
        vec = np.zeros(len(index), dtype=complex)
        for occ, a in self.amplitudes.items():
            vec[index[occ]] = a
        return vec

    @classmethod
    def from_dense(cls, registry: ModeRegistry, vec: np.ndarray,
                   truncated: bool = False) -> "FockState":
        basis = enumerate_basis(registry)
        amps = {basis[i]: complex(v) for i, v in enumerate(vec) if abs(v) > PRUNE_EPS}
        return cls(registry, amps, truncated=truncated)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        flag = ", truncated" if self.truncated else ""
        return f"FockState({len(self.amplitudes)} terms, cap={self.registry.photon_cap}{flag})"


def apply_creation(state: FockState, mode: Mode) -> FockState:
    """Raise the occupation of one mode: |..,n,..> -> sqrt(n+1)|..,n+1,..>.

    Terms that would exceed the registry cap are dropped and the result
    is flagged as truncated.
    """
    i = state.registry.index(mode)
    cap = state.registry.photon_cap
    out: dict[Occupation, complex] = {}
    dropped = False
    for occ, amp in state.amplitudes.items():
        if sum(occ) + 1 > cap:
            dropped = True
            continue
        raised = occ[:i] + (occ[i] + 1,) + occ[i + 1:]
        out[raised] = out.get(raised, 0.0) + amp * math.sqrt(occ[i] + 1)
    return FockState(state.registry, out, truncated=state.truncated or dropped).pruned()


def apply_annihilation(state: FockState, mode: Mode) -> FockState:
    """Lower the occupation of one mode: |..,n,..> -> sqrt(n)|..,n-1,..>."""
    i = state.registry.index(mode)
    out: dict[Occupation, complex] = {}
    for occ, amp in state.amplitudes.items():
        if occ[i] == 0:
            continue
        lowered = occ[:i] + (occ[i] - 1,) + occ[i + 1:]
        out[lowered] = out.get(lowered, 0.0) + amp * math.sqrt(occ[i])
    return FockState(state.registry, out, truncated=state.truncated).pruned()


def inner_product(a: FockState, b: FockState) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.registry != b.registry:
        raise ValueError("inner product requires states on the same registry")
    return complex(sum(amp.conjugate() * b.amplitudes[occ]
                       for occ, amp in a.amplitudes.items()
                       if occ in b.amplitudes))


def add(a: FockState, b: FockState, coeff_a: complex = 1.0,
        coeff_b: complex = 1.0) -> FockState:
    """coeff_a * |a> + coeff_b * |b> on a shared registry."""
    if a.registry != b.registry:
        raise ValueError("cannot add states on different registries")
    out = {occ: coeff_a * amp for occ, amp in a.amplitudes.items()}
    for occ, amp in b.amplitudes.items():
        out[occ] = out.get(occ, 0.0) + coeff_b * amp
    return FockState(a.registry, out, truncated=a.truncated or b.truncated).pruned()


def scale(state: FockState, coeff: complex) -> FockState:
    return FockState(state.registry,
                     {occ: coeff * a for occ, a in state.amplitudes.items()},
                     truncated=state.truncated).pruned()


def project(state: FockState, keep: Callable[[Occupation], bool]) -> FockState:
    """Unnormalized projection onto the terms selected by ``keep``."""
    out = {occ: amp for occ, amp in state.amplitudes.items() if keep(occ)}
    return FockState(state.registry, out, truncated=state.truncated)


def occupation_of(registry: ModeRegistry, occ: Occupation, spatial: str) -> int:
    """Total photons of one spatial mode in an occupation vector."""
    return sum(occ[i] for i in registry.spatial_indices(spatial))


def embed(state: FockState, registry: ModeRegistry) -> FockState:
    """Re-express a state on a larger registry, new modes in vacuum."""
    positions = [registry.index(m) for m in state.registry.modes]
    if registry.photon_cap < state.registry.photon_cap:
        raise ValueError("target registry has a smaller photon cap")
    out: dict[Occupation, complex] = {}
    for occ, amp in state.amplitudes.items():
        new = [0] * len(registry.modes)
        for pos, count in zip(positions, occ):
            new[pos] = count
        out[tuple(new)] = amp
    return FockState(registry, out, truncated=state.truncated)


def restrict(state: FockState, registry: ModeRegistry,
             residual_tol: float = 1e-9) -> FockState:
    """Drop modes that are in vacuum in every term of the state.

    Inverse of :func:`embed`.  Weight on occupied removed modes above
    ``residual_tol`` (squared norm) is an error.
    """
    positions = [state.registry.index(m) for m in registry.modes]
    removed = [i for i in range(len(state.registry.modes)) if i not in positions]
    out: dict[Occupation, complex] = {}
    residual = 0.0
    for occ, amp in state.amplitudes.items():
        if any(occ[i] for i in removed):
            residual += abs(amp) ** 2
            continue
        out[tuple(occ[i] for i in positions)] = amp
    if residual > residual_tol:
        raise ValueError(f"restriction would discard weight {residual:.3e}")
    return FockState(registry, out, truncated=state.truncated)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian unit-trace matrix on a small labelled subspace."""

    basis_labels: tuple
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if m.shape[0] != len(self.basis_labels):
            raise ValueError("matrix size must match the number of basis labels")
        object.__setattr__(self, "matrix", m)

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12,
                 eig_floor: float = -1e-10) -> "DensityOperator":
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > trace_tol:
            raise ValueError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(m)) < eig_floor:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        return self

    def normalized(self) -> "DensityOperator":
        tr = np.trace(self.matrix).real
        if tr <= 0.0:
            raise ValueError("cannot normalize a trace-zero density matrix")
        return DensityOperator(self.basis_labels, self.matrix / tr)

    def expectation(self, coords: Sequence[complex]) -> float:
        """<v|rho|v> for a vector given in this operator's basis."""
        v = np.asarray(coords, dtype=complex)
        return float(np.real(v.conj() @ self.matrix @ v))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def reduced_density(state: FockState, kept_modes: Sequence[Mode],
                    labels: Sequence[Occupation] | None = None) -> DensityOperator:
    """Partial trace over the complement of ``kept_modes``.

    ``labels`` pins the basis of the result (occupations over the kept
    modes, in order); by default the labels found in the state are used
    in lexicographic order.
    """
    kept = [state.registry.index(m) for m in kept_modes]
    if not kept:
        raise ValueError("kept_modes must be a non-empty subset")
    traced = [i for i in range(len(state.registry.modes)) if i not in kept]

    groups: dict[Occupation, dict[Occupation, complex]] = {}
    for occ, amp in state.amplitudes.items():
        k = tuple(occ[i] for i in kept)
        t = tuple(occ[i] for i in traced)
        groups.setdefault(t, {})[k] = amp

    found = sorted({k for sub in groups.values() for k in sub})
    if labels is None:
        label_list = found
    else:
        label_list = [tuple(l) for l in labels]
        missing = set(found) - set(label_list)
        if missing:
            raise ValueError(f"state has weight outside the requested labels: {sorted(missing)}")
    index = {k: i for i, k in enumerate(label_list)}

    rho = np.zeros((len(label_list), len(label_list)), dtype=complex)
    for sub in groups.values():
        for ka, aa in sub.items():
            ia = index[ka]
            for kb, ab in sub.items():
                rho[ia, index[kb]] += aa * ab.conjugate()
    tr = np.trace(rho).real
    if tr <= 0.0:
        raise ValueError("reduced state has zero weight")
    return DensityOperator(tuple(label_list), rho / tr)


def creation_matrix(registry: ModeRegistry, mode: Mode) -> np.ndarray:
    """Dense matrix of the creation operator in the canonical basis."""
    i = registry.index(mode)
    basis = enumerate_basis(registry)
    index = basis_index(registry)
    op = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, occ in enumerate(basis):
        if sum(occ) + 1 > registry.photon_cap:
            continue
        raised = occ[:i] + (occ[i] + 1,) + occ[i + 1:]
        op[index[raised], col] = math.sqrt(occ[i] + 1)
    return op


def serialize_state(state: FockState) -> str:
    """Canonical text form: ``occupation TAB re TAB im`` per line.

    Occupation vectors are comma-separated integers in registry order;
    lines are sorted lexicographically by occupation.
    """
    lines = []
    for occ in sorted(state.amplitudes):
        a = state.amplitudes[occ]
        lines.append(f"{','.join(str(c) for c in occ)}\t{a.real!r}\t{a.imag!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_state(registry: ModeRegistry, text: str) -> FockState:
    """Inverse of :func:`serialize_state`."""
    amps: dict[Occupation, complex] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        occ_txt, re_txt, im_txt = line.split("\t")
        occ = tuple(int(c) for c in occ_txt.split(","))
        amps[occ] = complex(float(re_txt), float(im_txt))
    return FockState(registry, amps)
