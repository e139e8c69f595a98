"""Fixed-step integrator for the damped Kerr master equation.

In the number basis the master equation is elementwise,

    d rho_mn / dt = [ i mu (m^2 - n^2) - i delta (m - n)
                      - (gamma/2)(m + n) ] rho_mn
                    + gamma sqrt((m+1)(n+1)) rho_{m+1,n+1},

so anti-diagonals (fixed m - n) form independent bidiagonal linear systems.
The stepper below acts on the whole matrix with one elementwise product and
one diagonal shift per stage, which preserves that band structure exactly.
The truncation boundary is absorbing: trace lost through the top level is
reported, never redistributed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis, fock
from .analytic_q import KerrSystem, PhaseGrid, QSurface
from .errors import CutoffLeak, DegenerateBranches, StepSizeUnstable

#: boundary population above which the truncated basis is declared too small
LEAK_TOL = 1e-8

#: sampled states must conserve trace at least this well
TRACE_TOL = 1e-8

_DIVERGENCE_CEIL = 10.0


@dataclass(frozen=True)
class EvolutionSpec:
    """What to integrate, for how long, and where to sample.

    ``dt`` fixes the step directly; ``accuracy`` instead halves the default
    step until two successive runs agree to the target in max norm. With
    neither, the stability rule dt = 0.05 / (gamma N + mu N^2 + |delta| N)
    applies.
    """

    sys: KerrSystem
    cutoff: int
    t_final: float
    sample_times: tuple = ()
    dt: float | None = None
    accuracy: float | None = None

    def __post_init__(self):
        times = tuple(float(t) for t in self.sample_times)
        if list(times) != sorted(times):
            raise ValueError("sample_times must be sorted ascending")
        if times and (times[0] < 0 or times[-1] > self.t_final + 1e-15):
            raise ValueError("sample_times must lie in [0, t_final]")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        needed = fock.default_cutoff(self.sys.alpha0)
        if self.cutoff < needed:
            raise ValueError(
                f"cutoff {self.cutoff} below the rule value {needed} "
                f"for |alpha0| = {abs(self.sys.alpha0)}"
            )
        if self.dt is not None and self.accuracy is not None:
            raise ValueError("give dt or accuracy, not both")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "sample_times", times)


@dataclass(frozen=True)
class EvolutionRecord:
    """State and scalar observables at one sample time."""

    time: float
    rho: fock.DensityOperator
    mean_n: float
    purity: float
    trace_error: float
    cat_fidelity: float
    coherence: float


def default_dt(sys: KerrSystem, cutoff: int) -> float:
    """Stability-rule step for the stiffest element phase of the truncated RHS."""
    rate = sys.gamma * cutoff + abs(sys.mu) * cutoff**2 + abs(sys.detuning) * cutoff
    if rate == 0:
        return 1.0
    return 0.05 / rate


def _coefficients(sys: KerrSystem, n: int):
    m_idx = np.arange(n)
    mm = m_idx[:, np.newaxis]
    nn = m_idx[np.newaxis, :]
    coef = (
        1j * sys.mu * (mm**2 - nn**2).astype(float)
        - 1j * sys.detuning * (mm - nn).astype(float)
        - 0.5 * sys.gamma * (mm + nn).astype(float)
    )
    gain = sys.gamma * np.sqrt((mm + 1.0) * (nn + 1.0))
    return coef, gain


def _rhs(mat: np.ndarray, coef: np.ndarray, gain: np.ndarray) -> np.ndarray:
    out = coef * mat
    out[:-1, :-1] += gain[:-1, :-1] * mat[1:, 1:]
    return out


def rhs(rho: fock.DensityOperator, sys: KerrSystem) -> np.ndarray:
    """Elementwise time derivative of rho.

    Returned as a plain matrix: a derivative has zero trace, so it cannot
    satisfy the DensityOperator invariants.
    """
    coef, gain = _coefficients(sys, rho.cutoff)
    return _rhs(np.asarray(rho.elements), coef, gain)


def _rk4_step(mat: np.ndarray, dt: float, coef: np.ndarray, gain: np.ndarray) -> np.ndarray:
    k1 = _rhs(mat, coef, gain)
    k2 = _rhs(mat + 0.5 * dt * k1, coef, gain)
    k3 = _rhs(mat + 0.5 * dt * k2, coef, gain)
    k4 = _rhs(mat + dt * k3, coef, gain)
    return mat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_matrix(
    mat: np.ndarray, sys: KerrSystem, t_final: float, dt: float | None = None
) -> np.ndarray:
    """Raw RK4 propagation of an arbitrary matrix, no state validation.

    The final partial step is shortened to land exactly on ``t_final``.
    """
    n = mat.shape[0]
    coef, gain = _coefficients(sys, n)
    step = default_dt(sys, n) if dt is None else dt
    out = np.array(mat, dtype=complex)
    remaining = t_final
    while remaining > 1e-15 * max(1.0, t_final):
        h = min(step, remaining)
        out = _rk4_step(out, h, coef, gain)
        remaining -= h
        peak = np.max(np.abs(out))
        if not np.isfinite(peak) or peak > _DIVERGENCE_CEIL:
            raise StepSizeUnstable(
                f"solution norm {peak!r} after step {h}; reduce dt"
            )
    return out


def _make_record(
    t: float, mat: np.ndarray, sys: KerrSystem, cat_target: fock.FockVector
) -> EvolutionRecord:
    boundary = float(mat[-1, -1].real)
    if boundary > LEAK_TOL:
        raise CutoffLeak(
            f"boundary population {boundary!r} at t = {t}; raise the cutoff"
        )
    trace_err = abs(float(np.trace(mat).real) - 1.0)
    rho = fock.DensityOperator(mat, trace_tol=TRACE_TOL)
    try:
        coherence = analysis.coherence_metric(rho, sys.alpha0, t, sys.gamma)
    except DegenerateBranches:
        coherence = math.nan
    return EvolutionRecord(
        time=t,
        rho=rho,
        mean_n=fock.expectation_n(rho),
        purity=fock.purity(rho),
        trace_error=trace_err,
        cat_fidelity=fock.fidelity(rho, cat_target),
        coherence=coherence,
    )


def _run(
    spec: EvolutionSpec, initial: np.ndarray, dt: float
) -> list[tuple[float, np.ndarray]]:
    coef, gain = _coefficients(spec.sys, spec.cutoff)
    samples = []
    mat = np.array(initial, dtype=complex)
    now = 0.0
    for target in spec.sample_times:
        while target - now > 1e-12 * max(1.0, spec.t_final):
            h = min(dt, target - now)
            mat = _rk4_step(mat, h, coef, gain)
            now += h
            peak = np.max(np.abs(mat))
            if not np.isfinite(peak) or peak > _DIVERGENCE_CEIL:
                raise StepSizeUnstable(
                    f"solution norm {peak!r} at t = {now}; reduce dt"
                )
        samples.append((target, mat.copy()))
    return samples


def evolve(spec: EvolutionSpec, initial: fock.DensityOperator) -> list[EvolutionRecord]:
    """Integrate the master equation, sampling at ``spec.sample_times``."""
    if initial.cutoff != spec.cutoff:
        raise ValueError(
            f"initial state cutoff {initial.cutoff} != spec cutoff {spec.cutoff}"
        )
    mat0 = np.asarray(initial.elements)
    if spec.accuracy is not None:
        dt = default_dt(spec.sys, spec.cutoff)
        samples = _run(spec, mat0, dt)
        while True:
            dt /= 2.0
            finer = _run(spec, mat0, dt)
            diff = max(
                (float(np.max(np.abs(a[1] - b[1]))) for a, b in zip(samples, finer)),
                default=0.0,
            )
            samples = finer
            if diff < spec.accuracy:
                break
    else:
        dt = spec.dt if spec.dt is not None else default_dt(spec.sys, spec.cutoff)
        samples = _run(spec, mat0, dt)

    cat_target = fock.cat_state(spec.sys.alpha0, spec.cutoff)
    return [_make_record(t, mat, spec.sys, cat_target) for t, mat in samples]


def q_from_rho(rho: fock.DensityOperator, grid: PhaseGrid, time: float = 0.0) -> QSurface:
    """Husimi surface <alpha| rho |alpha> over all grid nodes.

    Same values as fock.husimi_q per node, evaluated with one batched
    quadratic form; nodes never share mutable state.
    """
    pts = grid.points().ravel()
    n = rho.cutoff
    probes = np.empty((pts.size, n), dtype=complex)
    probes[:, 0] = np.exp(-0.5 * np.abs(pts) ** 2)
    for k in range(n - 1):
        probes[:, k + 1] = probes[:, k] * pts / math.sqrt(k + 1)
    q = np.einsum("gm,gm->g", probes.conj() @ rho.elements, probes).real
    return QSurface(grid=grid, time=float(time), values=q.reshape((grid.resolution, grid.resolution)))
