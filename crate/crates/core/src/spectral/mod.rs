//! Finite-difference Dirichlet Laplacian, its low spectrum and the
//! eigenvalue inequalities evaluated against it.

mod bounds;
mod eigen;
mod family;
mod ldl;
mod operator;

pub use bounds::{
    count_leq, floss_rhs, hardy_quadratic_check, hardy_sides, lieb_bound, lieb_sweep, positive_part_integral,
    remark2_witness_check, riesz_bound_rhs_2d, riesz_mean, two_grid_tolerance, weyl_prediction, weyl_report, LiebOptions,
    RieszOptions,
};
pub use eigen::{eigenvalues, eigenvalues_covering, eigenvalues_with, lambda_min, EigenOptions, SolverMethod, SpectralResult};
pub use family::{band_limited, hardy_suite, hardy_suite_fields, prolong, HardySuiteOptions};
pub use ldl::DEFAULT_FACTOR_BYTES;
pub use operator::{assemble, assemble_with, domain_hash, Csr, GridOperator, InteriorRule};
