//! Steady-state cavity observables built on a susceptibility: intracavity
//! amplitude, transmission, reflection, normalized transmission, EIT
//! linewidth, normal-mode positions and the effective-Rabi diagnostics.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::params::{to_mhz, Geometry, InputMirror, SystemParams};
use crate::susceptibility::{
    chi_eit_all, chi_eit_localized, chi_eit_standard, chi_sw_all, chi_sw_standard, chi_two_level,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which probe-medium interaction the scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    Empty,
    TwoLevel,
    Eit,
    Switching,
}

/// Susceptibility dispatch over interaction and geometry.
pub fn chi(delta: f64, p: &SystemParams, interaction: Interaction) -> Result<Complex64> {
    match (interaction, p.ensemble.geometry) {
        (Interaction::Empty, _) => Ok(Complex64::new(0.0, 0.0)),
        (Interaction::TwoLevel, _) => chi_two_level(delta, p),
        (Interaction::Eit, Geometry::AllCavityDelocalized) => chi_eit_all(delta, p),
        (Interaction::Eit, Geometry::AllCavityLocalized) => chi_eit_localized(delta, p),
        (Interaction::Eit, Geometry::Standard) => chi_eit_standard(delta, p),
        (Interaction::Switching, Geometry::AllCavityDelocalized) => chi_sw_all(delta, p),
        (Interaction::Switching, Geometry::Standard) => chi_sw_standard(delta, p),
        (Interaction::Switching, Geometry::AllCavityLocalized) => Err(Error::Config(
            "no closed-form switching susceptibility for the localized geometry".into(),
        )),
    }
}

/// κ − iΔ − iχ, the probe response denominator.
fn denominator(delta: f64, chi: Complex64, p: &SystemParams) -> Result<Complex64> {
    let den = Complex64::new(p.cavity.kappa(), -delta) - I * chi;
    if den.norm() == 0.0 {
        return Err(Error::SingularInput(format!(
            "kappa - i*delta - i*chi vanished at delta = {} MHz",
            to_mhz(delta)
        )));
    }
    Ok(den)
}

/// Steady-state intracavity probe amplitude √(2κ_H/τ)·a_p^in/(κ − iΔ − iχ).
pub fn intracavity_amplitude(delta: f64, chi: Complex64, p: &SystemParams) -> Result<Complex64> {
    Ok(p.cavity.input_rate() * p.drive.a_p_in / denominator(delta, chi, p)?)
}

/// Intensity transmission T = |2√(κ_H κ_L)/(κ − iΔ − iχ)|².
pub fn transmission(delta: f64, chi: Complex64, p: &SystemParams) -> Result<f64> {
    let num = 2.0 * (p.cavity.kappa_h * p.cavity.kappa_l).sqrt();
    Ok((num / denominator(delta, chi, p)?).norm_sqr())
}

/// Intensity reflection off the input mirror,
/// R = |(κ_in − κ_out − κ_A + iΔ + iχ)/(κ − iΔ − iχ)|².
pub fn reflection(delta: f64, chi: Complex64, p: &SystemParams) -> Result<f64> {
    let (k_in, k_out) = match p.cavity.input_mirror {
        InputMirror::High => (p.cavity.kappa_h, p.cavity.kappa_l),
        InputMirror::Low => (p.cavity.kappa_l, p.cavity.kappa_h),
    };
    let num = Complex64::new(k_in - k_out - p.cavity.kappa_a, delta) + I * chi;
    Ok((num / denominator(delta, chi, p)?).norm_sqr())
}

/// Transmission normalized to the bare resonant cavity: |κ/(κ − iΔ − iχ)|².
pub fn normalized_transmission(delta: f64, chi: Complex64, p: &SystemParams) -> Result<f64> {
    Ok((p.cavity.kappa() / denominator(delta, chi, p)?).norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum LinewidthMethod {
    /// Closed form κ_EIT = γ₀ + κ·(Ω_c²/2)/(g_p²N) of the standard geometry.
    AnalyticStandard,
    /// Half width at half maximum of the T_norm transparency window around
    /// Δ = 0, located by bisection; works for any geometry.
    NumericHwhm,
}

/// Effective halfwidth of the intracavity EIT transparency window.
pub fn eit_linewidth(p: &SystemParams, method: LinewidthMethod) -> Result<f64> {
    match method {
        LinewidthMethod::AnalyticStandard => {
            if p.drive.omega_c == 0.0 {
                return Ok(p.atomic.gamma_0);
            }
            let g_sq_n = p.g_p_sq_n();
            if g_sq_n == 0.0 {
                return Err(Error::SingularInput(
                    "kappa_EIT closed form requires g_p^2 N > 0 when omega_c > 0".into(),
                ));
            }
            Ok(p.atomic.gamma_0 + p.cavity.kappa() * 0.5 * p.drive.omega_c.powi(2) / g_sq_n)
        }
        LinewidthMethod::NumericHwhm => numeric_hwhm(p),
    }
}

fn numeric_hwhm(p: &SystemParams) -> Result<f64> {
    let interaction =
        if p.drive.omega_s > 0.0 { Interaction::Switching } else { Interaction::Eit };
    let t_norm = |delta: f64| -> Result<f64> {
        normalized_transmission(delta, chi(delta, p, interaction)?, p)
    };
    let t0 = t_norm(0.0)?;
    let d = p.derived();
    // Transparency means the control field opens the medium: compare against
    // the control-off (two-level) response at line center.
    let t_opaque =
        normalized_transmission(0.0, crate::susceptibility::chi_two_level(0.0, p)?, p)?;
    if t0 < 2.0 * t_opaque {
        return Err(Error::NoTransparencyWindow(format!(
            "line-center T_norm {t0:.3e} is not enhanced over the control-off value {t_opaque:.3e}"
        )));
    }
    // Log-spaced walk out of the window: the transparency peak sits inside a
    // broad absorption dip, so track the running floor and the first drop
    // below the half level.
    let h0 = (eit_linewidth(p, LinewidthMethod::AnalyticStandard).unwrap_or(d.kappa * 1e-6)
        / 1024.0)
        .max(d.kappa * 1e-9)
        .max(1e-12);
    let d_max = 10.0 * (d.kappa + d.gamma + p.drive.omega_c + p.ensemble.g_p_sqrt_n);
    let mut floor = t0;
    let mut samples = Vec::new();
    let mut delta = h0;
    while delta < d_max {
        let v = t_norm(delta)?;
        floor = floor.min(v);
        samples.push((delta, v));
        delta *= 1.25;
    }
    if floor > 0.75 * t0 {
        return Err(Error::NoTransparencyWindow(format!(
            "normalized transmission never drops below 75% of its line-center value {t0:.3e}"
        )));
    }
    let half = 0.5 * (t0 + floor);
    let mut lo = 0.0;
    let mut hi = None;
    for (delta, v) in samples {
        if v <= half {
            hi = Some(delta);
            break;
        }
        lo = delta;
    }
    let mut hi = hi.ok_or_else(|| {
        Error::NoTransparencyWindow("no half-maximum crossing bracketed".into())
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_norm(mid)? > half {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bracket of the linewidth-matching effective-Rabi relation,
/// [√(2π² + 4(ln 2C)²) − π]/(π²/2 + 2(ln 2C)²).
fn rabi_bracket(c: f64) -> f64 {
    let l = (2.0 * c).ln();
    let pi = std::f64::consts::PI;
    ((2.0 * pi * pi + 4.0 * l * l).sqrt() - pi) / (pi * pi / 2.0 + 2.0 * l * l)
}

/// Linewidth-matching scaling factor Ω_c,eff/Ω_c of the equivalent standard
/// EIT configuration. Diagnostic only; does not modify any susceptibility.
pub fn effective_rabi_scaling(p: &SystemParams) -> Result<f64> {
    let c = p.derived().cooperativity;
    if !(c > 0.5) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "effective-Rabi scaling requires cooperativity C > 1/2, got {c}"
        )));
    }
    Ok(1.0 / rabi_bracket(c).sqrt())
}

/// Absorption-matching alternative Ω'_c,eff/Ω_c = 1/√(ln(Ω_c²/γγ₀)):
/// the standard control Rabi reproducing the minimum absorption level
/// instead of the window width.
pub fn effective_rabi_absorption_scaling(p: &SystemParams) -> Result<f64> {
    let d = p.derived();
    let gg0 = d.gamma * p.atomic.gamma_0;
    if gg0 <= 0.0 || p.drive.omega_c <= 0.0 {
        return Err(Error::Domain(
            "absorption-matching scaling requires omega_c > 0 and gamma*gamma_0 > 0".into(),
        ));
    }
    let l = (p.drive.omega_c.powi(2) / gg0).ln();
    if l <= 0.0 {
        return Err(Error::Domain(format!(
            "absorption-matching scaling requires omega_c^2 > gamma*gamma_0 (ln = {l:.3e})"
        )));
    }
    Ok(1.0 / l.sqrt())
}

/// Strictly increasing detuning grid.
#[derive(Debug, Clone)]
pub struct DeltaGrid {
    points: Vec<f64>,
}

impl DeltaGrid {
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(max > min) {
            return Err(Error::Config(format!(
                "grid needs n >= 2 and max > min, got n = {n}, [{min}, {max}]"
            )));
        }
        let step = (max - min) / (n - 1) as f64;
        Ok(Self { points: (0..n).map(|k| min + step * k as f64).collect() })
    }

    /// Merge a finer sub-grid into this one (two-scale spectra: the EIT
    /// window is orders of magnitude narrower than the normal-mode span).
    pub fn dense_insert(mut self, min: f64, max: f64, n: usize) -> Result<Self> {
        let inner = Self::uniform(min, max, n)?;
        self.points.extend(inner.points);
        self.points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.points.dedup_by(|a, b| (*a - *b).abs() <= f64::EPSILON * a.abs().max(b.abs()));
        Ok(self)
    }

    /// 2001 points over 2π×[−30, 30] MHz plus a 2001-point insert over
    /// 2π×[−1, 1] MHz.
    pub fn default_scan() -> Self {
        Self::uniform(crate::params::mhz(-30.0), crate::params::mhz(30.0), 2001)
            .and_then(|g| g.dense_insert(crate::params::mhz(-1.0), crate::params::mhz(1.0), 2001))
            .expect("static grid bounds")
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid must be strictly increasing with >= 2 points".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    /// Detuning, rad/µs.
    pub delta: f64,
    pub t: f64,
    pub r: f64,
    pub t_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub rows: Vec<ScanRow>,
}

/// Evaluate all three observables on every grid point. Rows are independent;
/// output ordering follows the grid regardless of scheduling.
pub fn scan(grid: &DeltaGrid, p: &SystemParams, interaction: Interaction) -> Result<SpectrumTable> {
    let rows = grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(index, &delta)| {
            let row = || -> Result<ScanRow> {
                let x = chi(delta, p, interaction)?;
                Ok(ScanRow {
                    delta,
                    t: transmission(delta, x, p)?,
                    r: reflection(delta, x, p)?,
                    t_norm: normalized_transmission(delta, x, p)?,
                })
            };
            row().map_err(|e| Error::SingularRow {
                index,
                delta_mhz: to_mhz(delta),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable { rows })
}

impl SpectrumTable {
    /// Detunings of the local maxima of T_norm, refined by fitting a
    /// parabola through each maximum and its neighbors.
    pub fn normal_modes(&self) -> Vec<f64> {
        let r = &self.rows;
        let mut out = Vec::new();
        for i in 1..r.len().saturating_sub(1) {
            if r[i].t_norm > r[i - 1].t_norm && r[i].t_norm >= r[i + 1].t_norm {
                out.push(quadratic_vertex(
                    (r[i - 1].delta, r[i - 1].t_norm),
                    (r[i].delta, r[i].t_norm),
                    (r[i + 1].delta, r[i + 1].t_norm),
                ));
            }
        }
        out
    }

    /// CSV with header `delta_MHz,T,R,T_norm`, detunings in linear MHz,
    /// 12 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "delta_MHz,T,R,T_norm")?;
        for row in &self.rows {
            writeln!(
                w,
                "{:.11e},{:.11e},{:.11e},{:.11e}",
                to_mhz(row.delta),
                row.t,
                row.r,
                row.t_norm
            )?;
        }
        Ok(())
    }
}

/// Vertex abscissa of the parabola through three points; falls back to the
/// middle point when the fit degenerates.
fn quadratic_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    let v = -b / (2.0 * a);
    if a < 0.0 && v.is_finite() && v >= x0 && v <= x2 {
        v
    } else {
        x1
    }
}
