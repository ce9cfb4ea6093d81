use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or unparsable input parameter.
    #[error("configuration error in `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        field: String,
        message: String,
        line: Option<usize>,
    },

    /// The cavity sits at (or beyond) the parametric oscillation threshold.
    #[error("parametric threshold reached: kappa^2 + delta^2 - 4G^2 = {margin:e} (kappa = {kappa:e}, delta = {delta:e}, G = {gain:e})")]
    Threshold {
        kappa: f64,
        delta: f64,
        gain: f64,
        margin: f64,
    },

    #[error("no steady state found for delta0 = {delta0:e} in [{lo:e}, {hi:e}] ({samples} samples, {rejected} roots rejected at threshold)")]
    NoRoot {
        delta0: f64,
        lo: f64,
        hi: f64,
        samples: usize,
        rejected: usize,
    },

    #[error("found {count} steady states for delta0 = {delta0:e}; the self-consistency equation admits at most five")]
    RootCount { delta0: f64, count: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("fluctuation spectrum diverges at omega = {omega:e} (|d|^2 = {d_abs2:e})")]
    Divergent { omega: f64, d_abs2: f64 },

    #[error("steady state is not strictly stable (max Re(lambda) = {max_real_eig:e}, marginal = {marginal})")]
    Unstable { max_real_eig: f64, marginal: bool },

    #[error("quadrature did not converge after {evaluations} evaluations (estimated relative error {error:e}, worst panel [{worst_lo:e}, {worst_hi:e}])")]
    Quadrature {
        evaluations: usize,
        error: f64,
        worst_lo: f64,
        worst_hi: f64,
    },

    #[error("ratio r is undefined for vanishing momentum variance")]
    UndefinedRatio,

    #[error("no stable operating point in range")]
    NoStablePoint,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
            line: None,
        }
    }
}
