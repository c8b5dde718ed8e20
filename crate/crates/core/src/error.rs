use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("invalid size for {what}: {value}")]
    InvalidSize { what: &'static str, value: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("change of basis is ill-conditioned (condition estimate {condition:.3e} > {limit:.1e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("discretization pole: eigenvalue {index} = {eigenvalue} coincides with 2/delta")]
    Pole { index: usize, eigenvalue: C64 },

    #[error("singular resolvent {what} (pivot magnitude {magnitude:.3e})")]
    SingularResolvent { what: &'static str, magnitude: f64 },

    #[error("low-rank correction singular{}: |det| = {magnitude:.3e}", node.map(|k| format!(" at node {k}")).unwrap_or_default())]
    RankCorrection { node: Option<usize>, magnitude: f64 },

    #[error("Cauchy kernel singular: node {node} coincides with pole {pole}")]
    CoincidentNode { node: usize, pole: usize },

    #[error("eigensolver failed (residual {residual:.3e})")]
    Eigensolver { residual: f64 },

    #[error("state diverged at step {step}")]
    Divergence { step: usize },

    #[error("imaginary residue {residue:.3e} exceeds bound {bound:.3e}")]
    ImaginaryResidue { residue: f64, bound: f64 },

    #[error("exact integer overflow at entry ({i}, {j})")]
    Overflow { i: usize, j: usize },

    #[error("feature {index}: {source}")]
    Feature {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag an error with the layer feature it came from.
    pub fn in_feature(self, index: usize) -> Self {
        Error::Feature {
            index,
            source: Box::new(self),
        }
    }
}
