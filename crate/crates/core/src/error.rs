use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("transition row at (h={h}, s={s}, a={joint}) sums to {sum}")]
    TransitionRowSum { h: usize, s: usize, joint: usize, sum: f64 },
    #[error("negative transition probability {p} at (h={h}, s={s}, a={joint}, s'={next})")]
    NegativeTransition { h: usize, s: usize, joint: usize, next: usize, p: f64 },
    #[error("reward {value} at (h={h}, s={s}, a={joint}, agent={agent}) is outside [0, 1]")]
    RewardOutOfRange { h: usize, s: usize, joint: usize, agent: usize, value: f64 },
    #[error("initial distribution is not a probability vector (sum {sum})")]
    InitialDistribution { sum: f64 },
    #[error("policy row (agent={agent}, h={h}, s={s}) is not a distribution (sum {sum})")]
    PolicyRow { agent: usize, h: usize, s: usize, sum: f64 },
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("game is not identical-interest; its potential is not available from the model")]
    NotTeamGame,
    #[error("loss {0} outside [0, 1]")]
    LossOutOfRange(f64),
    #[error("action {action} out of range for {n_actions} actions")]
    ActionOutOfRange { action: usize, n_actions: usize },
    #[error("row {row} of the recommendation matrix is not stochastic (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("stationary distribution did not converge (residual {0})")]
    FixedPoint(f64),
    #[error("visit count must be positive")]
    ZeroVisits,
    #[error("input contains NaN")]
    Nan,
    #[error("REINFORCE estimation needs a positive exploration parameter")]
    ZeroExploration,
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("joint table has {entries} entries, above the limit of {limit}")]
    TooLarge { entries: usize, limit: usize },
    #[error("expected a one-shot two-agent game (H=1, S=1, N=2)")]
    NotOneShot,
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("trace does not match the game: {0}")]
    TraceMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
