//! Mother wavelet design, first- and second-order banks, and frame audits.

mod audit;
mod bank;
mod lowpass;
mod mother;

pub use audit::{dilation_covariance_error, littlewood_paley, LittlewoodPaley};
pub use bank::{
    build_first_order_bank, build_spiral_banks, fft_frequency, fft_size_for, first_order_layout,
    BankKind, BankMember, FilterShape, FilterbankParams, FirstOrderLayout, Grid, SampledFilter,
    Sign, SpiralBankConfig, SpiralBanks, WaveletFilterbank, BETA_LOWPASS_SUPPORT,
    GAMMA_LOWPASS_SUPPORT,
};
pub use lowpass::LowpassWindow;
pub use mother::{design_mother_wavelet, MotherWavelet};
