"""Sequential IMEX stage solves for the spectral gradient-flow system.

Each implicit stage solves (I - tau*a_ii*M*L_kappa) U_i = rhs, a scalar
division per Fourier mode because the mobility and the stabilized operator
share the Fourier eigenbasis. The stiff operator enters through the full
implicit tableau, the stabilized nonlinearity (and any forcing, evaluated at
the stage abscissa times) through the strictly-lower explicit tableau.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IntegrationDiverged, NonInvertibleStage
from .spectral import Field, SpectralSystem, energy_from_spectrum
from .tableau import ImexTableau


@dataclass(frozen=True)
class StepRecord:
    """All stage values and energies of one step.

    stage_spectra[i] holds the Fourier coefficients of U_i; stage 0 is the
    incoming solution and the last stage is the step result (stiffly
    accurate). stage_energies[i] is the discrete energy at stage i.
    """

    t_start: float
    tau: float
    stage_spectra: np.ndarray  # (s, m) complex
    stage_energies: np.ndarray  # (s,)

    @property
    def s(self) -> int:
        return self.stage_spectra.shape[0]

    @property
    def result(self) -> Field:
        return Field(spectrum=self.stage_spectra[-1])

    def stage_field(self, i: int) -> Field:
        return Field(spectrum=self.stage_spectra[i])

    def stage_differences(self) -> np.ndarray:
        """delta U_{l+1} = U_{l+1} - U_l for l = 0..s-2, in Fourier space."""
        return np.diff(self.stage_spectra, axis=0)


@dataclass
class EnergyTrace:
    """Per-step energy record of an integration run.

    times/energies/deltas hold one entry per completed step; the energy of
    the initial state is kept separately. stage_energies (optional) is an
    (n_steps, s) array. max_increase is the largest per-stage energy rise
    over the step's starting energy; max_relative_increase divides by its
    magnitude.
    """

    initial_energy: float
    times: np.ndarray
    energies: np.ndarray
    deltas: np.ndarray
    stage_energies: Optional[np.ndarray] = None
    max_increase: float = -np.inf
    max_relative_increase: float = -np.inf

    def __len__(self) -> int:
        return len(self.times)


def step(
    sys: SpectralSystem,
    tab: ImexTableau,
    u_prev: Field,
    t_prev: float,
    tau: float,
) -> StepRecord:
    """Advance one step of size tau > 0 from state u_prev at time t_prev.

    Raises NonInvertibleStage when 1 - tau*a_ii*(M L_kappa symbol) vanishes
    on some mode (possible only for negative diagonal entries).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    # blow-ups surface as non-finite energies; keep them quiet here
    with np.errstate(over="ignore", invalid="ignore"):
        return _step_impl(sys, tab, u_prev, t_prev, tau)


def _step_impl(sys, tab, u_prev, t_prev, tau):
    c, A, Ah = tab.float_arrays()
    s = tab.s
    m = sys.grid.m
    ml = sys.mobility_stiff_symbol
    mob = sys.mobility_symbol
    has_source = sys.source is not None

    spectra = np.empty((s, m), dtype=complex)
    energies = np.empty(s)
    spectra[0] = u_prev.spectrum
    u0_vals = u_prev.values
    energies[0] = energy_from_spectrum(sys, spectra[0], u0_vals)

    # explicit contributions per stage: M g_kappa(U_j) - f(t_prev + c_j tau)
    explicit = np.empty((s, m), dtype=complex)
    g0 = np.fft.fft(sys.nonlinearity(u0_vals, stabilized=True))
    explicit[0] = mob * g0
    if has_source:
        explicit[0] -= np.fft.fft(sys.source_values(t_prev + c[0] * tau))

    for i in range(1, s):
        rhs = spectra[0].copy()
        for j in range(i):
            if A[i, j] != 0.0:
                rhs += (tau * A[i, j]) * (ml * spectra[j])
            if Ah[i, j] != 0.0:
                rhs -= (tau * Ah[i, j]) * explicit[j]
        denom = 1.0 - (tau * A[i, i]) * ml
        if np.any(denom == 0.0):
            raise NonInvertibleStage(
                f"stage {i + 1} of {tab.name}: singular mode with a_ii={A[i, i]}, tau={tau}"
            )
        spectra[i] = rhs / denom
        vals = np.fft.ifft(spectra[i]).real
        energies[i] = energy_from_spectrum(sys, spectra[i], vals)
        if i < s - 1:
            explicit[i] = mob * np.fft.fft(sys.nonlinearity(vals, stabilized=True))
            if has_source:
                explicit[i] -= np.fft.fft(sys.source_values(t_prev + c[i] * tau))

    return StepRecord(t_start=t_prev, tau=tau, stage_spectra=spectra, stage_energies=energies)


def evolve(
    sys: SpectralSystem,
    tab: ImexTableau,
    u0: Field,
    tau: float,
    n_steps: int,
    record_stages: bool = False,
    t0: float = 0.0,
) -> tuple:
    """Run n_steps uniform steps, recording the energy after each one.

    Returns (final_field, trace). Raises IntegrationDiverged as soon as a
    step produces non-finite values; the exception carries the trace of the
    completed steps so callers can still inspect the recorded energies.
    """
    times = np.empty(n_steps)
    energies = np.empty(n_steps)
    stage_energies = np.empty((n_steps, tab.s)) if record_stages else None
    e_init = None
    max_inc = -np.inf
    max_rel = -np.inf
    u = u0
    for n in range(n_steps):
        rec = step(sys, tab, u, t0 + n * tau, tau)
        if e_init is None:
            e_init = rec.stage_energies[0]
        e_start = rec.stage_energies[0]
        rises = rec.stage_energies[1:] - e_start
        worst = float(rises.max())
        max_inc = max(max_inc, worst)
        max_rel = max(max_rel, worst / max(abs(e_start), np.finfo(float).tiny))
        times[n] = t0 + (n + 1) * tau
        energies[n] = rec.stage_energies[-1]
        if record_stages:
            stage_energies[n] = rec.stage_energies
        if not np.isfinite(rec.stage_energies[-1]):
            trace = _build_trace(
                e_init, times[: n + 1], energies[: n + 1],
                stage_energies[: n + 1] if record_stages else None, max_inc, max_rel,
            )
            raise IntegrationDiverged(
                f"{tab.name}: non-finite state after step {n + 1} (t={times[n]:.6g})",
                steps_completed=n + 1,
                trace=trace,
            )
        u = rec.result
    if e_init is None:
        e_init = energy_from_spectrum(sys, u0.spectrum, u0.values)
    trace = _build_trace(e_init, times, energies, stage_energies, max_inc, max_rel)
    return u, trace


def _build_trace(e_init, times, energies, stage_energies, max_inc, max_rel) -> EnergyTrace:
    prev = np.concatenate(([e_init], energies[:-1])) if len(energies) else energies
    return EnergyTrace(
        initial_energy=float(e_init) if e_init is not None else float("nan"),
        times=times,
        energies=energies,
        deltas=energies - prev,
        stage_energies=stage_energies,
        max_increase=max_inc,
        max_relative_increase=max_rel,
    )


def differential_form_residual(sys: SpectralSystem, tab: ImexTableau, rec: StepRecord) -> float:
    """Mismatch between the step's stage differences and their closed form.

    Rebuilds, for every implicit stage k, the combination
    sum_l [D_E]_{k,l} dU_{l+1} + [D_EI]_{k,l} (-tau M L_kappa) dU_{l+1}
    and compares it with tau * M (L_kappa (U_{k+1}+U_k)/2 - g_kappa(U_k)).
    Both sides agree to round-off for any tableau satisfying the structural
    invariants, provided the step was autonomous (no source term).
    """
    from .dissipation import differentiation_pair

    if sys.source is not None:
        raise ValueError("residual check requires an autonomous system (source=None)")
    pair = differentiation_pair(tab)
    d_e, d_ei = pair.d_e, pair.d_ei
    tau = rec.tau
    ml = sys.mobility_stiff_symbol
    mob = sys.mobility_symbol
    lk = sys.stabilized_symbol
    du = rec.stage_differences()
    worst = 0.0
    for k in range(tab.s_implicit):
        lhs = np.zeros(sys.grid.m, dtype=complex)
        for l in range(k + 1):
            lhs += d_e[k, l] * du[l] - d_ei[k, l] * tau * (ml * du[l])
        uk = np.fft.ifft(rec.stage_spectra[k]).real
        gk = np.fft.fft(sys.nonlinearity(uk, stabilized=True))
        rhs = tau * mob * (0.5 * lk * (rec.stage_spectra[k + 1] + rec.stage_spectra[k]) - gk)
        num = float(np.abs(np.fft.ifft(lhs - rhs)).max())
        den = max(float(np.abs(np.fft.ifft(rhs)).max()), np.finfo(float).tiny)
        worst = max(worst, num / den)
    return worst
