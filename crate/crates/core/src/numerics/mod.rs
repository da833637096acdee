pub mod adam;
pub mod gradcheck;
pub mod params;
pub mod tape;
pub mod tensor;

pub use adam::{AdamHyper, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, FD_FLOOR, FD_STEP};
pub use params::ParamSet;
pub use tape::{NodeId, Tape};
pub use tensor::{matmul, matmul_nt, matmul_tn, Tensor};
