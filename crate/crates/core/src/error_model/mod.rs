//! Elliptically symmetric error distributions on the sphere and their
//! orientation by parallel transport.

mod bessel;
mod density;
mod frame;
mod sample;

pub use bessel::{
    log_bessel_i, log_bessel_i_scaled, log_sphere_area, mean_resultant_length, vmf_log_norm_const,
    BESSEL_SWITCH,
};
pub use density::{
    family_log_density, svmf_j, svmf_log_density, vmf_log_density, FamilyKernel, LambdaConstraint,
    SvmfParams,
};
pub use frame::{axes_at, rotated_residual, OrientationFrame, TransportBase};
pub use sample::{sample_svmf, sample_svmf_with, sample_vmf, sample_vmf_with, svmf_draw, vmf_e1_draw};
