pub mod conditions;
pub mod decomp;
pub mod error;
pub mod generate;
pub mod matrix;
pub mod structure;
pub mod structured;

pub use conditions::{check_condition, implies_structure, ConditionId, ConditionSearch, ConditionVerdict, Witness};
pub use decomp::{inverse, penrose_residuals, pinv_oracle, solve_hpd, svd, PenroseResiduals, SvdFactors};
pub use error::{Error, Result};
pub use matrix::{c64, Blocks, CMatrix, Tolerance, C64};
pub use structure::{
    factor_l, factor_l0, factor_r, factor_r0, projectors, structure_report_x, structure_report_y, ProjectorPair, Side,
    StructureReport,
};
pub use structured::{
    inner_inverse_check, pinv_block, pinv_ny, pinv_xn, pinv_xny, pinv_xny_baseline, pinv_xny_hermitian, pinv_xny_oracle,
    proj_range_m1, proj_rowspace_m2, HypothesisCheck, Method, Mode, PinvOptions, PinvResult,
};
pub use generate::{generate, haar_unitary, Flavor, GenWarning, Instance, InstanceSpec};
