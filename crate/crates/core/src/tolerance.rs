//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Absolute tolerance for structural checks on unit-scale data.
    pub structural: f64,
    /// Orthogonality of rotation parts.
    pub orthogonality: f64,
    /// Threshold on ‖e_V‖ for criticality.
    pub criticality: f64,
    /// Rank threshold relative to the largest singular value.
    pub rank_rtol: f64,
    /// PSD cutoff relative to ‖A‖.
    pub psd_atol: f64,
    /// Range-inclusion test in the pencil, relative to ‖A‖.
    pub range_tol: f64,
    /// Kernel entries below this fraction of the largest entry are pruned.
    pub kernel_prune: f64,
    /// Relative tolerance for Hermitian input.
    pub hermitian: f64,
    /// Maximum Gram condition number for rigid bases.
    pub gram_condition: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            structural: 1e-10,
            orthogonality: 1e-12,
            criticality: 1e-8,
            rank_rtol: 1e-10,
            psd_atol: 1e-10,
            range_tol: 1e-8,
            kernel_prune: 1e-14,
            hermitian: 1e-10,
            gram_condition: 1e12,
        }
    }
}
