use thiserror::Error;

use crate::group::GroupWord;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group descriptor: {0}")]
    Descriptor(String),

    #[error("period {n} is not a multiple of m0 = {m0}")]
    Period { n: usize, m0: usize },

    #[error("only m0 = 1 is supported by this algorithm (got m0 = {0})")]
    UnsupportedPeriodMultiplier(usize),

    #[error("orbit map is not injective: {a} and {b} realize the same point")]
    NotInjective { a: GroupWord, b: GroupWord },

    #[error("word {0} is not in the subgroup TF")]
    NotInTf(GroupWord),

    #[error("configuration has no value for {0}")]
    MissingSite(GroupWord),

    #[error("zero relative vector at {0} fed to a distance/angle term")]
    ZeroBond(GroupWord),

    #[error("range set: {0}")]
    Range(String),

    #[error("rigid basis is numerically dependent (Gram condition {0:.3e})")]
    DependentBasis(f64),

    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("representation is not {n}-periodic")]
    NotPeriodic { n: usize },

    #[error("TF is not abelian; a user-supplied representation set is required")]
    NonAbelianTf,

    #[error("route disagreement in {what}: {a} vs {b}")]
    RouteMismatch { what: &'static str, a: f64, b: f64 },

    #[error("pencil failure at k = {k:?}: {msg}")]
    Pencil { k: Vec<f64>, msg: String },

    #[error("supercell too large: {cells} cells exceeds cap {cap}")]
    SupercellCap { cells: usize, cap: usize },

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
