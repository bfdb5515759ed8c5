//! Delay equations, SDEs and SDDEs, Lévy noise and the evolution maps they induce.

mod coeffs;
mod evolution;
mod kernel;
mod levy;
mod rng;
mod spec;

pub use coeffs::{validate_lipschitz, Diffusion, Drift, HistFn, HistMatFn, HistoryView, MatFn, VecFn};
pub use evolution::{check_evolution_map, AxiomReport, ConditionResidual, DdeEvolution, EvolutionMap, StopMap, Violation};
pub use kernel::{linear_delay_exact, simulate_sde, simulate_sdde, solve_dde, BLOW_UP, PICARD_ITERATIONS};
pub use levy::{
    check_random_evolution_map, sample_levy, JumpLaw, LevyDelayFlow, LevySpec, NoisePath, RandomEvolutionMap,
};
pub use rng::{mix_seed, NoiseKey, NoiseStream, LANE_BROWNIAN, LANE_JUMPS, LANE_MISC};
pub use spec::{DiffusionSpec, DriftSpec};

pub(crate) use evolution::stopped_past;
pub(crate) use kernel::advance;
