use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("agent {agent}, iteration {iteration}: recorded state at t={time} deviates from the model by {deviation:e}")]
    DynamicsMismatch { agent: usize, iteration: usize, time: usize, deviation: f64 },
    #[error("expected one trajectory per agent ({expected}), got {got}")]
    AgentCountMismatch { expected: usize, got: usize },
    #[error("trajectory has {states} states for {inputs} inputs")]
    MalformedTrajectory { states: usize, inputs: usize },
    #[error("time index {index} out of range (trajectory length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("agent {0} has no successful iteration")]
    EmptyDataset(usize),
    #[error("safe-set synthesis exhausted all window reductions (first conflict at t={time}, agents {a} and {b})")]
    SynthesisExhausted { time: usize, a: usize, b: usize },
    #[error("state is not a member of the safe set at t={0}")]
    NotInSafeSet(usize),
    #[error("every terminal candidate was pruned")]
    AllPruned,
    #[error("no terminal candidate produced a feasible plan")]
    NoFeasibleCandidate,
    #[error("no previous solution to shift")]
    NoPreviousSolution,
    #[error("state/input sequence lengths do not match horizon {horizon}")]
    LengthMismatch { horizon: usize },
    #[error("scenario infeasible: {0}")]
    ScenarioInfeasible(String),
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("agent {agent} did not reach its goal within {limit} steps in iteration {iteration}")]
    Watchdog { agent: usize, iteration: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
