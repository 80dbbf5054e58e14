"""Base-station supply-power models and energy-minimal downlink scheduling."""

__version__ = "0.1.0"

from .channel import (DEFAULT_SCENARIO, EigenSpectrum, FrameChannels,
                      Scenario, center_channel, drop_users, eigenvalues,
                      gen_frame_channels, noise_power, path_gain)
from .curves import LossCurve, PaCurve, TabulatedLossCurve
from .harness import (AggregateStats, RunSpec, SweepRecord, TrialResult,
                      benchmark_ba, benchmark_dtx, run_monte_carlo)
from .optimizer import (ShareProblem, ShareSolution, Step1Solution,
                        pc_only_problem, power_from_rate_mimo2x2,
                        power_from_rate_simo, prais_problem, raps_step1,
                        solve_share)
from .powermodel import (AFFINE_1X, AFFINE_2X, AffineParams, ComponentConfig,
                         ParameterizedParams, PowerBreakdown, affine_supply,
                         component_supply, load_dependence, parameterized_p1,
                         parameterized_supply)
from .raps import (FrameAllocation, Quantization, per_slot_split, quantize,
                   rcg_allocate, run_raps, waterfill)
