use thiserror::Error;

use crate::scenario::ScenarioErrors;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("simulation diverged at t = {t} s: channel `{channel}` is not finite")]
    Diverged { t: f64, channel: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{quantity} = {value} is outside the valid domain [{lo}, {hi}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("singular operating point: 2·D·V_pv − V_B = 0")]
    SingularOperatingPoint,

    #[error("operating point is not an equilibrium (relative residual {residual:.3e})")]
    NotEquilibrium { residual: f64 },

    #[error("open loop has no unity-gain crossover in [1e-2, 1e5] Hz")]
    NoCrossover,

    #[error(
        "infeasible design: {target_pm}° phase margin at {target_bw} Hz; a PI can reach [{min_pm:.1}°, {max_pm:.1}°]"
    )]
    InfeasibleDesign {
        target_bw: f64,
        target_pm: f64,
        min_pm: f64,
        max_pm: f64,
    },

    #[error(
        "design check failed: crossover {crossover:.4} Hz (target {target_bw}), PM {pm:.3}° (target {target_pm})"
    )]
    DesignCheck {
        crossover: f64,
        pm: f64,
        target_bw: f64,
        target_pm: f64,
    },

    #[error(
        "unknown transfer function `{0}` (expected one of Gpv, Gpi, Hv, Hi, H2, loop_v, loop_i)"
    )]
    UnknownTf(String),

    #[error(transparent)]
    Scenario(#[from] ScenarioErrors),

    #[error("parameter file: {0}")]
    Params(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
