//! Dense quantizations: Fourier transforms, the model map, open bakers and spectra.

pub mod builders;
pub mod grid;
pub mod operator;
pub mod spectral;

pub use builders::{
    anti_aliased_scaling, box_uncertainty_norm, box_uncertainty_norm_at, coherent_state, fourier_entry, low_pass,
    model_open_map, model_power, open_baker_operator, projector, quantize_left, scaling_operator,
    semiclassical_fourier, ModelCutoff, ProjectorSide,
};
pub use grid::{GridKind, GridSpec};
pub use operator::DenseOperator;
pub use spectral::{eigen_summary, nonzero_core, parity_blocks, power_norms, spectral_report, SpectralReport};
