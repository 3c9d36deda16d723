//! Numerical toolkit for ground states of the fractional semilinear problem
//! `(-Delta)^s u + lambda u = u^p` with exterior zero condition.

pub mod error;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod quad;
pub mod solver;
pub mod spectra;
pub mod symmetry;

pub use error::{Error, Result};
pub use grid::{build_grid, reflection_map, scale_domain, Domain, DomainKind, Grid, SymmetryMap};
pub use operator::{
    assemble_matrix, normalization_constant, tail_vector, GridFunction, KernelParams,
    OperatorSystem,
};
pub use spectra::{
    assemble_linearized, check_mu1_identity, count_sign_changes, eigen_solve, morse_and_degeneracy,
    axis_profile, mu2_cluster, radial_profile, LinearizedSystem, MorseReport, Spectrum,
};
pub use solver::{
    default_init, energy_level, factor_resolvent, functional_j, nehari_scale,
    solve_ground_state_rn, solve_least_energy, solve_least_energy_factored, GroundStateRef,
    ProblemParams, ResolventFactor, SolveConfig, SolveResult,
};
pub use symmetry::{
    antisymmetrize, boundary_quotient, check_second_eigen_characterization,
    cluster_symmetry_defect, pohozaev_pairing, polarize, polarize_offset, symmetry_defect,
    verify_polarization_inequalities, AntisymmetricPart, BoundaryQuotient, BoundarySample, Mirror,
    PolarizationReport, PolarizedPair, SecondEigenReport,
};
