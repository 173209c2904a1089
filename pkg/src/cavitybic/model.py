"""Physical parameters and fixed-excitation-number basis enumeration.

The system is a chain of ``n_chain + 1`` cavities with nearest-neighbour
photon hopping ``lam``.  The leftmost and rightmost cavities each contain
``m_atoms`` identical two-level atoms coupled to the local field with
strength ``g``; the atoms are treated as a single collective spin, i.e.
only the symmetric subspace (dimension ``m_atoms + 1`` per ensemble) is
represented.  The end cavities leak into outside continua at rate
``gamma_c``; ``gamma_a`` is the single-atom spontaneous decay rate used by
the collective-damping variants.

The closed part of the Hamiltonian conserves the total excitation number
(end photons + chain photons + excited atoms), so all linear algebra is
done on fixed-excitation sectors enumerated here.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence


class ParamError(ValueError):
    """A model parameter violates one of its invariants."""


class NoResonantModeError(ValueError):
    """No chain normal mode lies within tolerance of the atomic frequency."""


@dataclass(frozen=True, kw_only=True)
class ModelParams:
    """Immutable bundle of physical constants.

    Frequencies and rates share one unit system chosen by the caller; the
    command-line front end fixes ``lam = 1`` and quotes everything in units
    of the hopping rate.
    """

    n_chain: int            # number of middle cavities is n_chain - 1
    m_atoms: int            # atoms per end cavity
    omega_c: float          # cavity resonance frequency
    omega_a: float          # atomic transition frequency
    g: float                # atom-field coupling
    lam: float              # nearest-neighbour hopping rate (> 0)
    q: int                  # resonant chain-mode index, 1 <= q <= n_chain - 1
    gamma_c: float = 0.0    # end-cavity leakage rate
    gamma_a: float = 0.0    # single-atom spontaneous decay rate
    fock_cutoff: int | None = None  # per-mode photon truncation; None -> sector total

    @property
    def delta(self) -> float:
        """Cavity-atom detuning omega_c - omega_a (derived, never stored)."""
        return self.omega_c - self.omega_a

    @property
    def n_cavities(self) -> int:
        return self.n_chain + 1

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)


class BasisState(NamedTuple):
    """Occupation-number label of one basis vector.

    Atomic occupations count excited atoms in the symmetric subspace of
    each ensemble.  Tuple ordering doubles as the deterministic
    lexicographic sort key."""

    photons_left: int
    photons_mid: tuple[int, ...]
    photons_right: int
    excited_left: int
    excited_right: int

    def excitation_number(self) -> int:
        return (self.photons_left + sum(self.photons_mid) + self.photons_right
                + self.excited_left + self.excited_right)


class SectorBasis:
    """Complete, duplicate-free, lexicographically ordered basis of one
    fixed-excitation sector, with an exact reverse lookup."""

    __slots__ = ("k_excitations", "states", "_index")

    def __init__(self, k_excitations: int, states: Sequence[BasisState]):
        self.k_excitations = k_excitations
        self.states = tuple(states)
        self._index = {state: i for i, state in enumerate(self.states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def index_of(self, state: BasisState) -> int:
        return self._index[state]

    def find(self, state: BasisState) -> int | None:
        return self._index.get(state)

    def __contains__(self, state: BasisState) -> bool:
        return state in self._index

    def __repr__(self) -> str:
        return f"SectorBasis(k={self.k_excitations}, dim={self.dim})"


def validate_params(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if every invariant holds.

    Raises :class:`ParamError` naming the first violated invariant.
    """
    if params.n_chain < 2:
        raise ParamError("n_chain must be at least 2")
    if params.m_atoms < 1:
        raise ParamError("m_atoms must be at least 1")
    if not params.lam > 0:
        raise ParamError("lambda must be positive")
    if params.gamma_c < 0:
        raise ParamError("gamma_c must be nonnegative")
    if params.gamma_a < 0:
        raise ParamError("gamma_a must be nonnegative")
    if not 1 <= params.q <= params.n_chain - 1:
        raise ParamError(
            f"q out of range: need 1 <= q <= {params.n_chain - 1}, got {params.q}")
    if params.fock_cutoff is not None and params.fock_cutoff < 0:
        raise ParamError("fock_cutoff must be nonnegative")
    return params


def resonant_mode_index(params: ModelParams, tol: float | None = None) -> int:
    """Index k of the chain mode whose frequency is closest to omega_a.

    The mode frequencies are ``omega_c + 2 lam cos(k pi / N)``; for even
    ``n_chain`` with ``omega_c == omega_a`` this returns ``n_chain // 2``.
    Ties break toward the smaller index.  If ``tol`` is given and the best
    mismatch exceeds it, :class:`NoResonantModeError` is raised.
    """
    n = params.n_chain
    best_k, best_err = 1, math.inf
    for k in range(1, n):
        omega_k = params.omega_c + 2.0 * params.lam * math.cos(k * math.pi / n)
        err = abs(omega_k - params.omega_a)
        if err < best_err:
            best_k, best_err = k, err
    if tol is not None and best_err > tol:
        raise NoResonantModeError(
            f"no resonant chain mode within tol: best |Omega_k - omega_a| = {best_err:.3e}")
    return best_k


def _occupations(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All occupation tuples with the given per-slot caps summing to ``total``,
    in ascending lexicographic order."""
    if not caps:
        if total == 0:
            yield ()
        return
    for first in range(min(caps[0], total) + 1):
        for rest in _occupations(total - first, caps[1:]):
            yield (first, *rest)


def enumerate_sector(params: ModelParams, k: int) -> SectorBasis:
    """Enumerate every basis state with excitation number ``k``.

    Photon occupations are capped at ``fock_cutoff`` (defaulting to ``k``,
    which is exact because the closed dynamics never raises the total) and
    atomic occupations at ``m_atoms``.  Sectors beyond capacity, and k < 0,
    come back empty.
    """
    if k < 0:
        return SectorBasis(k, ())
    n = params.n_chain
    photon_cap = params.fock_cutoff if params.fock_cutoff is not None else k
    caps = [photon_cap] * (n + 1) + [params.m_atoms, params.m_atoms]
    states = [
        BasisState(occ[0], occ[1:n], occ[n], occ[n + 1], occ[n + 2])
        for occ in _occupations(k, caps)
    ]
    return SectorBasis(k, states)
