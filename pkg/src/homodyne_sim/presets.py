"""Built-in experiment presets reproducing the reference figure data.

Each preset returns a fully populated ExperimentConfig:

  fig2a  fluctuation of the first-order test for the single-excitation
         state vs coherent-LO amplitude
  fig2b  first-order (M1) test for the single-excitation state with
         displaced-thermal LOs vs thermal occupation
  fig3a  fluctuation for the two-mode squeezed vacuum (3 dB, x = 1/3)
  fig3b  second-type first-order (M2) test for the 3 dB TMSV with
         displaced-thermal LOs; margin changes sign at N_th/|alpha|^2 = 2
  fig4a  second-order criteria for the n = 4 binomial state, coherent LOs
  fig4b  same with squeezed-vacuum LOs
  fig5   spin-1 condensate pair production and criterion margin
"""

from __future__ import annotations

import numpy as np

from .experiments import ExperimentConfig, SpinRun, SweepSpec
from .states import StateSpec

TMSV_3DB_X = 1.0 / 3.0  # e^{-2r} = 1/2  ->  x = tanh r = 1/3


def _grid(start: float, stop: float, points: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(start, stop, points))


def fig2a() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="fluctuation_sweep",
        signal=StateSpec.single_excitation(),
        lo=StateSpec.coherent(2.0),
        criterion={"type": 1},
        sweep=SweepSpec("lo", "alpha", _grid(0.5, 8.0, 20)),
    )


def fig2b() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="lo_sweep",
        signal=StateSpec.single_excitation(),
        lo=StateSpec.displaced_thermal(2.0, 0.0),
        criterion={"id": "M1"},
        sweep=SweepSpec("lo", "n_th", _grid(0.0, 4.0, 41)),
    )


def fig3a() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="fluctuation_sweep",
        signal=StateSpec.tmsv(TMSV_3DB_X),
        lo=StateSpec.coherent(2.0),
        criterion={"type": 2},
        sweep=SweepSpec("lo", "alpha", _grid(0.5, 8.0, 20)),
    )


def fig3b() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="lo_sweep",
        signal=StateSpec.tmsv(TMSV_3DB_X),
        lo=StateSpec.displaced_thermal(2.0, 0.0),
        criterion={"id": "M2"},
        sweep=SweepSpec("lo", "n_th_over_alpha_sq", _grid(1.0, 3.0, 101)),
    )


def fig4a() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="second_order_compare",
        signal=StateSpec.binomial(4),
        lo=StateSpec.coherent(0.5),
        sweep=SweepSpec("lo", "alpha", _grid(0.5, 4.0, 36)),
    )


def fig4b() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="second_order_compare",
        signal=StateSpec.binomial(4),
        lo=StateSpec.squeezed_vacuum(0.5),
        sweep=SweepSpec("lo", "r", _grid(0.1, 1.8, 35)),
    )


def fig5() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="spin_bec_trajectory",
        spin=SpinRun(pump_mean_n=50.0),
    )


PRESETS = {
    "fig2a": fig2a,
    "fig2b": fig2b,
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig4a": fig4a,
    "fig4b": fig4b,
    "fig5": fig5,
}

PRESET_NOTES = {
    "fig2a": "single-excitation state, Delta_m^2 vs coherent-LO amplitude",
    "fig2b": "single-excitation state, M1 lhs/rhs vs displaced-thermal occupation",
    "fig3a": "3 dB TMSV, Delta_m^2 vs coherent-LO amplitude",
    "fig3b": "3 dB TMSV, M2 lhs/rhs vs N_th/|alpha|^2 (crossover at 2.0)",
    "fig4a": "binomial(4) state, second-order bounds vs coherent-LO amplitude",
    "fig4b": "binomial(4) state, second-order bounds vs LO squeezing",
    "fig5": "spin-1 condensate pair production and criterion margin",
}
