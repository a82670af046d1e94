"""Spin-squeezing dynamics of planar XXZ magnets.

Solvers (exact diagonalization, rotor + spin-wave, discrete truncated
Wigner, bare one-axis twisting) share one observable pipeline: collective
moments -> squeezing parameter -> time series -> scaling analysis.
"""

from .lattice import (LatticeGeometry, CouplingSpec, CouplingMatrix,
                      MomentumGrid, square, build_couplings,
                      fourier_coupling, all_to_all, coupling_values)
from .collective import (CollectiveMoments, SqueezingPoint, TimeSeries,
                         FrameUndefinedError, OptimumReport,
                         min_transverse_variance, squeezing_parameter,
                         find_optimum, write_series_csv,
                         write_series_sidecar, read_series_csv)
from .rotor import (RotorModel, LadderState, OATOptimum, css_ladder,
                    evolve_ladder, ladder_moments, oat_magnetization,
                    oat_series, oat_optimum)
from .spinwave import (SpinWaveSet, TowerFit, SpectrumLevel,
                       UnstableModeError, bare_inertia, dispersion,
                       spin_wave_density, rsw_quench, tos_fit,
                       rescale_inertia, rsw_spectrum)
from .ed import (SectorSpace, ThermalResult, MemoryGuardError, KrylovError,
                 sector_basis, build_sector, css_state, css_energy,
                 evolve, measure_collective, quench_series, tower_energies,
                 thermal_solve)
from .dtwa import (EnergyDriftError, sample_initial, run_ensemble)
from .analysis import (ScalingFit, DropReport, DropCollapse, OptimumScaling,
                       ExponentRelation, fit_power_law, detect_drop,
                       drop_time_collapse, fit_lambda, fit_optimum_scaling,
                       check_exponent_relation, fit_saturating,
                       decay_time_grid)

__version__ = "0.1.0"
