//! Shared test fixtures: ion-crystal parameter sets used throughout the
//! unit and integration tests.

use num_complex::Complex64;

use crate::params::{
    mhz, AtomicParams, CavityParams, DetuningParams, DriveParams, EnsembleParams, Geometry,
    SystemParams,
};

/// Typical ion-crystal EIT parameter set: collective coupling 2π×16 MHz,
/// γ = 2π×11.2 MHz, γ₀ = 2π×6e-4 MHz, Ω_c = 2π×6 MHz, κ = 2π×2.2 MHz
/// (κ_H = 2π×1.5, κ_A = 2π×0.7), delocalized all-cavity geometry.
pub(crate) fn eit_reference() -> SystemParams {
    let gamma_branch = mhz(11.2 - 6e-4); // (γ31+γ32)/2 so that γ = 2π×11.2
    SystemParams {
        atomic: AtomicParams::new(
            mhz(0.53),
            mhz(0.22),
            mhz(0.18),
            gamma_branch,
            gamma_branch,
            2.0 * mhz(11.0 - 6e-4),
            mhz(6e-4),
        )
        .unwrap(),
        cavity: CavityParams::new(mhz(1.5), mhz(0.0), mhz(0.7), 6.7e-5).unwrap(),
        drive: DriveParams::new(mhz(6.0), 0.0, Complex64::new(0.02, 0.0)).unwrap(),
        detuning: DetuningParams::default(),
        ensemble: EnsembleParams::new(mhz(16.0), Geometry::AllCavityDelocalized).unwrap(),
    }
}

/// Lossless-cavity set used for the transmission endpoint runs:
/// κ ≃ κ_H = 2π×1.5 MHz, Ω_c = 2π×2 MHz, weak probe (0.01 photons).
pub(crate) fn section_v() -> SystemParams {
    let mut p = eit_reference();
    p.cavity = CavityParams::new(mhz(1.5), 0.0, 0.0, 6.7e-5).unwrap();
    p.drive.omega_c = mhz(2.0);
    let n_photons = 0.01_f64;
    let a_in = n_photons.sqrt() * p.cavity.kappa() / p.cavity.input_rate();
    p.drive.a_p_in = Complex64::new(a_in, 0.0);
    p
}

/// EIT reference set plus a far-detuned switching field
/// (Ω_s = 2π×40 MHz, Δ_s = 2π×4300 MHz).
pub(crate) fn switching_reference() -> SystemParams {
    let mut p = eit_reference();
    p.drive.omega_s = mhz(40.0);
    p.detuning.delta_s = mhz(4300.0);
    p
}
