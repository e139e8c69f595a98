"""Truncated Fock-space kernel.

States are stored in the number basis |0>, ..., |N-1>. Coherent amplitudes
are built by the stable recurrence c_{n+1} = c_n * alpha / sqrt(n+1) starting
from c_0 = exp(-|alpha|^2 / 2), which avoids explicit factorials. Phase-space
functions use the conventions

    Q(alpha) = <alpha| rho |alpha>        (no 1/pi factor)
    W(alpha) = (2/pi) sum_n (-1)^n <n| D(alpha)^dag rho D(alpha) |n>

so that Q of a coherent state |beta> is exactly exp(-|alpha - beta|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .errors import CutoffTooSmall, DimensionMismatch

#: truncated coherent-state weight allowed to fall beyond the cutoff
TRUNCATION_TOL = 1e-12

_HERMITICITY_TOL = 1e-12
_TRACE_TOL = 1e-10
_EIGENVALUE_FLOOR = -1e-9


def default_cutoff(alpha: complex) -> int:
    """Cutoff rule N = ceil(|alpha|^2 + 8|alpha| + 10).

    Keeps the truncated coherent-state weight below 1e-12 for |alpha| <= 6
    (Poisson tail bound).
    """
    a = abs(complex(alpha))
    return math.ceil(a * a + 8.0 * a + 10.0)


@dataclass(frozen=True)
class PhasePoint:
    """A point alpha of the complex phase plane."""

    alpha: complex

    def __post_init__(self):
        a = complex(self.alpha)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ValueError("phase point must have finite real and imaginary parts")
        object.__setattr__(self, "alpha", a)


def _as_complex(alpha) -> complex:
    if isinstance(alpha, PhasePoint):
        return alpha.alpha
    return complex(alpha)


@dataclass(frozen=True, eq=False)
class FockVector:
    """Normalized pure state c_0 .. c_{N-1} in the number basis."""

    amplitudes: np.ndarray
    cutoff: int = field(init=False)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).copy()
        if amp.ndim != 1 or amp.size < 1:
            raise ValueError("amplitudes must be a non-empty 1-d sequence")
        norm_sq = float(np.sum(np.abs(amp) ** 2))
        if abs(norm_sq - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: sum |c_n|^2 = {norm_sq!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "cutoff", amp.size)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive N x N operator in the number basis."""

    elements: np.ndarray
    cutoff: int = field(init=False)

    #: widened by the integrator, which conserves trace only to its own tolerance
    trace_tol: float = _TRACE_TOL

    def __post_init__(self):
        mat = np.asarray(self.elements, dtype=complex).copy()
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError("elements must be a square matrix")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > _HERMITICITY_TOL:
            raise ValueError(f"matrix not Hermitian: max |rho - rho^dag| = {herm!r}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > self.trace_tol:
            raise ValueError(f"trace {tr!r} differs from 1 beyond {self.trace_tol}")
        lo = float(np.linalg.eigvalsh(mat).min())
        if lo < _EIGENVALUE_FLOOR:
            raise ValueError(f"matrix not positive: smallest eigenvalue {lo!r}")
        mat.flags.writeable = False
        object.__setattr__(self, "elements", mat)
        object.__setattr__(self, "cutoff", mat.shape[0])


def coherent_amplitudes(alpha, cutoff: int) -> np.ndarray:
    """Exact number-basis amplitudes <n|alpha> for n < cutoff, not renormalized."""
    a = _as_complex(alpha)
    c0 = math.exp(-0.5 * abs(a) ** 2)
    if c0 == 0.0:
        raise CutoffTooSmall(
            f"coherent amplitude |alpha| = {abs(a)} underflows the vacuum weight"
        )
    amp = np.empty(cutoff, dtype=complex)
    amp[0] = c0
    for n in range(cutoff - 1):
        amp[n + 1] = amp[n] * a / math.sqrt(n + 1)
    return amp


def coherent_state(alpha, cutoff: int | None = None) -> FockVector:
    """Coherent state |alpha> truncated to ``cutoff`` levels and renormalized.

    Raises CutoffTooSmall when the weight lost to truncation exceeds 1e-12.
    """
    a = _as_complex(alpha)
    n = default_cutoff(a) if cutoff is None else int(cutoff)
    if n < 1:
        raise CutoffTooSmall("cutoff must be at least 1")
    amp = coherent_amplitudes(a, n)
    norm_sq = float(np.sum(np.abs(amp) ** 2))
    if norm_sq < 1.0 - TRUNCATION_TOL:
        raise CutoffTooSmall(
            f"cutoff {n} keeps only {norm_sq!r} of |alpha| = {abs(a)}; "
            f"need at least {default_cutoff(a)}"
        )
    return FockVector(amp / math.sqrt(norm_sq))


def cat_state(alpha0, cutoff: int | None = None) -> FockVector:
    """Two-branch superposition (e^{-i pi/4}|a0> - e^{i pi/4}|-a0>) / sqrt(2).

    The combination has unit norm for every alpha0 because the branch cross
    terms cancel; after truncation the vector is renormalized exactly.
    """
    a0 = _as_complex(alpha0)
    n = default_cutoff(a0) if cutoff is None else int(cutoff)
    if n < 1:
        raise CutoffTooSmall("cutoff must be at least 1")
    plus = coherent_amplitudes(a0, n)
    minus = coherent_amplitudes(-a0, n)
    # branch truncation check, same criterion as coherent_state
    kept = float(np.sum(np.abs(plus) ** 2))
    if kept < 1.0 - TRUNCATION_TOL:
        raise CutoffTooSmall(
            f"cutoff {n} keeps only {kept!r} of the |alpha0| = {abs(a0)} branch; "
            f"need at least {default_cutoff(a0)}"
        )
    phase = np.exp(-0.25j * np.pi)
    amp = (phase * plus - np.conj(phase) * minus) / math.sqrt(2.0)
    amp /= math.sqrt(float(np.sum(np.abs(amp) ** 2)))
    return FockVector(amp)


def basis_state(n: int, cutoff: int) -> FockVector:
    """Number state |n> in a space of ``cutoff`` levels."""
    if not 0 <= n < cutoff:
        raise ValueError(f"level {n} outside cutoff {cutoff}")
    amp = np.zeros(cutoff, dtype=complex)
    amp[n] = 1.0
    return FockVector(amp)


def density_from_pure(psi: FockVector) -> DensityOperator:
    """Rank-one projector |psi><psi|."""
    return DensityOperator(np.outer(psi.amplitudes, psi.amplitudes.conj()))


def husimi_q(rho: DensityOperator, alpha) -> float:
    """Q(alpha) = <alpha| rho |alpha>, exact for the truncated operator held.

    The probe amplitudes <n|alpha> are exact (never renormalized), so the
    value is correct wherever rho itself represents the physical state.
    """
    a = _as_complex(alpha)
    probe = coherent_amplitudes(a, rho.cutoff)
    q = np.vdot(probe, rho.elements @ probe)
    return float(q.real)


def displacement_matrix(alpha, cutoff: int) -> np.ndarray:
    """Matrix elements <m| D(alpha) |n> via associated Laguerre polynomials.

    Prefactors sqrt(min!/max!) |alpha|^{|m-n|} e^{-|alpha|^2/2} are assembled
    in log space so the entries stay finite well beyond n = 80.
    """
    a = _as_complex(alpha)
    n = int(cutoff)
    if a == 0:
        return np.eye(n, dtype=complex)
    mm, nn = np.indices((n, n))
    lo = np.minimum(mm, nn)
    k = np.abs(mm - nn)
    x = abs(a) ** 2
    log_mag = (
        0.5 * (gammaln(lo + 1) - gammaln(lo + k + 1))
        + k * math.log(abs(a))
        - 0.5 * x
    )
    base = np.where(mm >= nn, a / abs(a), -np.conj(a) / abs(a))
    dmat = np.exp(log_mag) * base**k * eval_genlaguerre(lo, k, x)
    return dmat


def wigner(rho: DensityOperator, alpha) -> float:
    """Displaced-parity Wigner value W(alpha); |W| <= 2/pi.

    Uses D(alpha) Pi D(alpha)^dag = D(2 alpha) Pi, so the trace against rho
    needs only the N x N corner of the analytic displacement matrix and is
    exact for states supported inside the cutoff. Summing the parity over
    the truncated basis instead would drop the population D pushes past N.
    """
    a = _as_complex(alpha)
    n = rho.cutoff
    d2 = displacement_matrix(2.0 * a, n)
    parity = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    val = np.einsum("mn,nm,m->", rho.elements, d2, parity)
    return float((2.0 / np.pi) * val.real)


def fidelity(rho: DensityOperator, psi: FockVector) -> float:
    """<psi| rho |psi>, in [0, 1] up to numerical slack."""
    if rho.cutoff != psi.cutoff:
        raise DimensionMismatch(
            f"density operator cutoff {rho.cutoff} != state cutoff {psi.cutoff}"
        )
    val = np.vdot(psi.amplitudes, rho.elements @ psi.amplitudes)
    return float(val.real)


def expectation_n(rho: DensityOperator) -> float:
    """Mean occupation sum_n n rho_nn."""
    return float(np.dot(np.arange(rho.cutoff), np.diag(rho.elements).real))


def purity(rho: DensityOperator) -> float:
    """Tr rho^2."""
    return float(np.sum(np.abs(rho.elements) ** 2))
