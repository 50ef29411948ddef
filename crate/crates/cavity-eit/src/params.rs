//! Physical parameters and derived rates.
//!
//! Unit conventions, used everywhere in this crate:
//!
//! * angular frequencies in rad/µs — a rate quoted as "2π × X MHz" is stored
//!   as `2π·X`;
//! * times in µs;
//! * input field amplitudes in √(photons/µs), intracavity photon number
//!   `n_α = |a_α|²`. A steady, empty, resonant cavity obeys
//!   `n = (2κ_H/τ)|a_in|²/κ²`.
//!
//! JSON ingestion uses linear MHz with the 2π applied at parse time; a
//! top-level `"units": "MHz_linear"` tag is mandatory.

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Linear MHz → rad/µs.
pub fn mhz(x: f64) -> f64 {
    TWO_PI * x
}

/// rad/µs → linear MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TWO_PI
}

/// Transverse-mode geometry of the control and switching illumination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Geometry {
    /// All three fields share the cavity mode; atoms average over the
    /// longitudinal standing wave (couplings rescaled by 1/√2).
    AllCavityDelocalized,
    /// All three fields share the cavity mode; atoms are pinned in the
    /// longitudinal standing wave (full couplings, extra cos(kz) factor).
    AllCavityLocalized,
    /// Control/switching illumination uniform over the ensemble; only the
    /// probe carries the cavity-mode structure (lumped into the effective
    /// atom number).
    Standard,
}

/// Which mirror couples the input field, for the reflection input-output
/// relation. The total decay rate is written κ = κ_H + κ_T + κ_A in the
/// source material with κ_T read as κ_L; the reflection relation's κ_T is
/// read as the input mirror, default the high-transmission one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
pub enum InputMirror {
    #[default]
    High,
    Low,
}

#[derive(Debug, Clone, Copy)]
pub struct AtomicParams {
    /// Maximal single-atom coupling strengths, rad/µs.
    pub g_p: f64,
    pub g_c: f64,
    pub g_s: f64,
    /// Spontaneous decay rates, rad/µs.
    pub gamma_31: f64,
    pub gamma_32: f64,
    pub gamma_42: f64,
    /// Ground-state coherence decay rate, rad/µs.
    pub gamma_0: f64,
}

impl AtomicParams {
    pub fn new(
        g_p: f64,
        g_c: f64,
        g_s: f64,
        gamma_31: f64,
        gamma_32: f64,
        gamma_42: f64,
        gamma_0: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("g_p", g_p),
            ("g_c", g_c),
            ("g_s", g_s),
            ("gamma_31", gamma_31),
            ("gamma_32", gamma_32),
            ("gamma_42", gamma_42),
            ("gamma_0", gamma_0),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { g_p, g_c, g_s, gamma_31, gamma_32, gamma_42, gamma_0 })
    }

    /// Optical dipole decay rate γ = (γ31 + γ32)/2 + γ0, recomputed on use.
    pub fn gamma(&self) -> f64 {
        0.5 * (self.gamma_31 + self.gamma_32) + self.gamma_0
    }

    /// Switching dipole decay rate γ_s = γ42/2 + γ0.
    pub fn gamma_s(&self) -> f64 {
        0.5 * self.gamma_42 + self.gamma_0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CavityParams {
    /// Mirror-transmission and absorption field decay rates, rad/µs.
    pub kappa_h: f64,
    pub kappa_l: f64,
    pub kappa_a: f64,
    /// Cavity round-trip time, µs.
    pub tau: f64,
    pub input_mirror: InputMirror,
}

impl CavityParams {
    pub fn new(kappa_h: f64, kappa_l: f64, kappa_a: f64, tau: f64) -> Result<Self> {
        for (name, v) in [("kappa_H", kappa_h), ("kappa_L", kappa_l), ("kappa_A", kappa_a)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {tau}")));
        }
        Ok(Self { kappa_h, kappa_l, kappa_a, tau, input_mirror: InputMirror::High })
    }

    /// Total cavity field decay rate κ = κ_H + κ_L + κ_A.
    pub fn kappa(&self) -> f64 {
        self.kappa_h + self.kappa_l + self.kappa_a
    }

    /// Input coupling rate √(2κ_in/τ) of the drive terms.
    pub fn input_rate(&self) -> f64 {
        let kappa_in = match self.input_mirror {
            InputMirror::High => self.kappa_h,
            InputMirror::Low => self.kappa_l,
        };
        (2.0 * kappa_in / self.tau).sqrt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DriveParams {
    /// Control-field maximal intracavity Rabi frequency Ω_c = g_c|a_c|, rad/µs.
    pub omega_c: f64,
    /// Switching-field maximal intracavity Rabi frequency Ω_s = g_s|a_s|, rad/µs.
    pub omega_s: f64,
    /// Complex input probe amplitude, √(photons/µs).
    pub a_p_in: Complex64,
}

impl DriveParams {
    pub fn new(omega_c: f64, omega_s: f64, a_p_in: Complex64) -> Result<Self> {
        if !(omega_c >= 0.0) || !(omega_s >= 0.0) {
            return Err(Error::Config("omega_c and omega_s must be >= 0".into()));
        }
        Ok(Self { omega_c, omega_s, a_p_in })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DetuningParams {
    /// Combined probe/one-photon/cavity detuning Δ (EIT convention
    /// Δ_p = Δ_p^c = Δ), rad/µs.
    pub delta: f64,
    /// Control and switching one-photon detunings, rad/µs. The analytic
    /// tiers fix delta_c = 0; the full simulation accepts arbitrary values.
    pub delta_c: f64,
    pub delta_s: f64,
    /// Cavity detunings, used by the full simulation only.
    pub delta_p_c: f64,
    pub delta_c_c: f64,
    pub delta_s_c: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleParams {
    /// Collective coupling g_p√N, rad/µs; the primary specification of the
    /// ensemble size.
    pub g_p_sqrt_n: f64,
    pub geometry: Geometry,
}

impl EnsembleParams {
    pub fn new(g_p_sqrt_n: f64, geometry: Geometry) -> Result<Self> {
        if !(g_p_sqrt_n >= 0.0) || !g_p_sqrt_n.is_finite() {
            return Err(Error::Config(format!(
                "g_p_sqrt_N must be finite and >= 0, got {g_p_sqrt_n}"
            )));
        }
        Ok(Self { g_p_sqrt_n, geometry })
    }

    /// Convenience constructor from a uniform density ρ, waist w and
    /// half-length L (consistent length units), using N = ρ π w² L / 2.
    pub fn from_density(rho: f64, waist: f64, half_length: f64, g_p: f64, geometry: Geometry) -> Result<Self> {
        let n = rho * std::f64::consts::PI * waist * waist * half_length / 2.0;
        if !(n > 0.0) {
            return Err(Error::Config(format!("effective atom number must be > 0, got {n}")));
        }
        Self::new(g_p * n.sqrt(), geometry)
    }
}

/// All atomic, cavity, drive and ensemble parameters; immutable after
/// construction and freely shareable across scan workers.
#[derive(Debug, Clone, Copy)]
pub struct SystemParams {
    pub atomic: AtomicParams,
    pub cavity: CavityParams,
    pub drive: DriveParams,
    pub detuning: DetuningParams,
    pub ensemble: EnsembleParams,
}

/// Quantities recomputed from the primary parameters, never stored
/// independently.
#[derive(Debug, Clone, Copy)]
pub struct DerivedRates {
    pub gamma: f64,
    pub gamma_s: f64,
    pub kappa: f64,
    /// Effective atom number N = (g_p√N / g_p)².
    pub n_atoms: f64,
    /// Cooperativity C = g_p²N / (2κγ).
    pub cooperativity: f64,
    /// Longitudinally averaged couplings ḡ_α = g_α/√2.
    pub g_bar_p: f64,
    pub g_bar_c: f64,
    pub g_bar_s: f64,
}

impl SystemParams {
    pub fn derived(&self) -> DerivedRates {
        let gamma = self.atomic.gamma();
        let gamma_s = self.atomic.gamma_s();
        let kappa = self.cavity.kappa();
        let n_atoms = if self.atomic.g_p > 0.0 {
            let r = self.ensemble.g_p_sqrt_n / self.atomic.g_p;
            r * r
        } else {
            f64::INFINITY
        };
        let g_sq_n = self.g_p_sq_n();
        let cooperativity = if kappa > 0.0 && gamma > 0.0 {
            g_sq_n / (2.0 * kappa * gamma)
        } else {
            f64::INFINITY
        };
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DerivedRates {
            gamma,
            gamma_s,
            kappa,
            n_atoms,
            cooperativity,
            g_bar_p: self.atomic.g_p * s,
            g_bar_c: self.atomic.g_c * s,
            g_bar_s: self.atomic.g_s * s,
        }
    }

    /// g_p²N, the collective coupling squared.
    pub fn g_p_sq_n(&self) -> f64 {
        self.ensemble.g_p_sqrt_n * self.ensemble.g_p_sqrt_n
    }

    /// Diagnostic warnings for parameter regimes outside the model's
    /// assumptions. Never errors; callers decide what to do with them.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let a = &self.atomic;
        let fast = a.gamma_31.min(a.gamma_32).min(a.gamma_42);
        if fast > 0.0 && a.gamma_0 > 0.1 * fast {
            out.push(format!(
                "gamma_0 = {} rad/us is not small compared to the spontaneous rates; \
                 the ground-state-coherence model assumes gamma_0 << gamma_31, gamma_32, gamma_42",
                a.gamma_0
            ));
        }
        // Weak-probe check with the empty-cavity estimate of |a_p|.
        let kappa = self.cavity.kappa();
        if kappa > 0.0 && self.drive.omega_c > 0.0 {
            let a_p_est = self.cavity.input_rate() * self.drive.a_p_in.norm() / kappa;
            if a.g_p * a_p_est > 0.3 * self.drive.omega_c {
                out.push(format!(
                    "probe Rabi estimate g_p|a_p| ~ {:.3} rad/us is not small compared to \
                     Omega_c = {:.3} rad/us; the weak-probe tiers may be inaccurate",
                    a.g_p * a_p_est,
                    self.drive.omega_c
                ));
            }
        }
        if self.cavity.kappa_h <= 0.0
            && (self.drive.a_p_in.norm() > 0.0 || self.drive.omega_c > 0.0 || self.drive.omega_s > 0.0)
        {
            out.push("kappa_H = 0 while fields are injected; all fields enter through the high-transmission mirror".into());
        }
        out
    }
}

// ---------------------------------------------------------------------------
// JSON ingestion (values in linear MHz, 2π applied here; tau in µs and
// a_p_in in √(photons/µs) are passed through unchanged).
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexIn {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexIn> for Complex64 {
    fn from(c: ComplexIn) -> Self {
        match c {
            ComplexIn::Real(x) => Complex64::new(x, 0.0),
            ComplexIn::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtomic {
    g_p: f64,
    g_c: f64,
    g_s: f64,
    gamma_31: f64,
    gamma_32: f64,
    gamma_42: f64,
    gamma_0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    #[serde(rename = "kappa_H")]
    kappa_h: f64,
    #[serde(rename = "kappa_L")]
    kappa_l: f64,
    #[serde(rename = "kappa_A")]
    kappa_a: f64,
    tau: f64,
    #[serde(default)]
    input_mirror: InputMirror,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    omega_c: f64,
    omega_s: f64,
    a_p_in: ComplexIn,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawDetuning {
    delta: f64,
    delta_c: f64,
    delta_s: f64,
    delta_p_c: f64,
    delta_c_c: f64,
    delta_s_c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    #[serde(rename = "g_p_sqrt_N")]
    g_p_sqrt_n: f64,
    geometry: Geometry,
}

#[derive(Deserialize)]
pub(crate) struct RawSystemParams {
    units: Option<String>,
    atomic: RawAtomic,
    cavity: RawCavity,
    drive: RawDrive,
    #[serde(default)]
    detuning: RawDetuning,
    ensemble: RawEnsemble,
}

impl RawSystemParams {
    pub(crate) fn resolve(self) -> Result<SystemParams> {
        match self.units.as_deref() {
            Some("MHz_linear") => {}
            Some(other) => {
                return Err(Error::Config(format!(
                    "unsupported \"units\" tag {other:?}; expected \"MHz_linear\""
                )))
            }
            None => {
                return Err(Error::Config(
                    "missing mandatory \"units\" tag (expected \"MHz_linear\")".into(),
                ))
            }
        }
        let a = self.atomic;
        let atomic = AtomicParams::new(
            mhz(a.g_p),
            mhz(a.g_c),
            mhz(a.g_s),
            mhz(a.gamma_31),
            mhz(a.gamma_32),
            mhz(a.gamma_42),
            mhz(a.gamma_0),
        )?;
        let c = self.cavity;
        let mut cavity = CavityParams::new(mhz(c.kappa_h), mhz(c.kappa_l), mhz(c.kappa_a), c.tau)?;
        cavity.input_mirror = c.input_mirror;
        let d = self.drive;
        let drive = DriveParams::new(mhz(d.omega_c), mhz(d.omega_s), d.a_p_in.into())?;
        let t = self.detuning;
        let detuning = DetuningParams {
            delta: mhz(t.delta),
            delta_c: mhz(t.delta_c),
            delta_s: mhz(t.delta_s),
            delta_p_c: mhz(t.delta_p_c),
            delta_c_c: mhz(t.delta_c_c),
            delta_s_c: mhz(t.delta_s_c),
        };
        let e = self.ensemble;
        let ensemble = EnsembleParams::new(mhz(e.g_p_sqrt_n), e.geometry)?;
        Ok(SystemParams { atomic, cavity, drive, detuning, ensemble })
    }
}

impl SystemParams {
    /// Parse a parameter document (linear-MHz JSON with a mandatory
    /// `"units": "MHz_linear"` tag).
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSystemParams =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.resolve()
    }
}
