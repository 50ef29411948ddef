//! Full nonlinear mean-field simulation: four-level density matrices on a
//! radially discretized ensemble coupled to the three cavity fields, with
//! step pulse schedules, steady-state detection, switching sweeps and the
//! minimal-switching-photon extraction.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::params::{Geometry, SystemParams};
use crate::quad;
use crate::spectra;
use crate::susceptibility::saturation_scale;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub const DEFAULT_RADIAL_NODES: usize = 16;
pub const DEFAULT_PHI_NODES: usize = 8;

/// One discretization cell of the ensemble: transverse intensity fraction
/// u = e^(−2r²/w²), effective atom count and the per-field couplings.
#[derive(Debug, Clone, Copy)]
pub struct Shell {
    pub u: f64,
    /// cos(kz) factor; 1 for geometries without longitudinal structure.
    pub cos_phi: f64,
    pub atoms: f64,
    pub c_p: f64,
    pub c_c: f64,
    pub c_s: f64,
}

/// Radial (and, for the localized geometry, longitudinal) discretization.
/// The rule is graded toward u = 0 so that the line-center boundary layer of
/// width ~1/Θ is resolved with few nodes.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub shells: Vec<Shell>,
}

impl RadialGrid {
    pub fn with_defaults(p: &SystemParams) -> Result<Self> {
        Self::new(p, DEFAULT_RADIAL_NODES, DEFAULT_PHI_NODES)
    }

    pub fn new(p: &SystemParams, n_radial: usize, n_phi: usize) -> Result<Self> {
        if n_radial < 1 || n_phi < 1 {
            return Err(Error::Config("radial and phi node counts must be >= 1".into()));
        }
        let d = p.derived();
        let two_n = 2.0 * d.n_atoms;
        if !two_n.is_finite() {
            return Err(Error::Config("grid construction needs finite atom number (g_p > 0)".into()));
        }
        let scale = saturation_scale(p);
        let shells = match p.ensemble.geometry {
            Geometry::Standard => vec![Shell {
                u: 1.0,
                cos_phi: 1.0,
                atoms: two_n,
                c_p: d.g_bar_p,
                c_c: d.g_bar_c,
                c_s: d.g_bar_s,
            }],
            Geometry::AllCavityDelocalized => {
                let (u, w) = normalized(quad::graded_nodes(n_radial, scale));
                u.iter()
                    .zip(&w)
                    .map(|(&u, &w)| Shell {
                        u,
                        cos_phi: 1.0,
                        atoms: two_n * w / u,
                        c_p: d.g_bar_p * u.sqrt(),
                        c_c: d.g_bar_c * u.sqrt(),
                        c_s: d.g_bar_s * u.sqrt(),
                    })
                    .collect()
            }
            Geometry::AllCavityLocalized => {
                let (u, w) = normalized(quad::graded_nodes(n_radial, scale));
                // φ measured from the node of the standing wave: cos(kz) =
                // sin(πx/2) with x graded toward 0 (layer width ~1/√(2Θ)).
                let (x, mut v) = quad::graded_nodes(n_phi, (2.0 * scale).sqrt().max(1.0));
                let cphi: Vec<f64> =
                    x.iter().map(|x| (0.5 * std::f64::consts::PI * x).sin()).collect();
                // Pin the discrete measure so the two-level limit is exact:
                // Σ v_m · 2cos²φ_m = 1.
                let norm: f64 = 2.0 * v.iter().zip(&cphi).map(|(v, c)| v * c * c).sum::<f64>();
                for vm in v.iter_mut() {
                    *vm /= norm;
                }
                let mut shells = Vec::with_capacity(n_radial * n_phi);
                for (&u, &w) in u.iter().zip(&w) {
                    for (&c, &vm) in cphi.iter().zip(&v) {
                        shells.push(Shell {
                            u,
                            cos_phi: c,
                            atoms: two_n * w * vm / u,
                            c_p: p.atomic.g_p * u.sqrt() * c,
                            c_c: p.atomic.g_c * u.sqrt() * c,
                            c_s: p.atomic.g_s * u.sqrt() * c,
                        });
                    }
                }
                shells
            }
        };
        Ok(Self { shells })
    }

    /// Linearized (weak-probe) susceptibility evaluated on the grid; used by
    /// the grid-normalization and convergence tests.
    pub fn linear_chi(&self, delta: f64, p: &SystemParams) -> Complex64 {
        let d = p.derived();
        let ge = Complex64::new(d.gamma, -delta);
        let g0 = Complex64::new(p.atomic.gamma_0, -(delta - p.detuning.delta_c));
        let gs = Complex64::new(d.gamma_s, -(p.detuning.delta_s + delta - p.detuning.delta_c));
        let ratio_c = if p.atomic.g_c > 0.0 { p.drive.omega_c / p.atomic.g_c } else { 0.0 };
        let ratio_s = if p.atomic.g_s > 0.0 && p.drive.omega_s > 0.0 {
            p.drive.omega_s / p.atomic.g_s
        } else {
            0.0
        };
        let mut chi = Complex64::new(0.0, 0.0);
        for sh in &self.shells {
            let oc2 = (sh.c_c * ratio_c).powi(2);
            let os2 = (sh.c_s * ratio_s).powi(2);
            let mut inner = g0;
            if os2 > 0.0 {
                inner += os2 / gs;
            }
            let mut den = ge;
            if oc2 > 0.0 {
                den += oc2 / inner;
            }
            chi += I * sh.atoms * sh.c_p * sh.c_p / den;
        }
        chi
    }
}

fn normalized((u, mut w): (Vec<f64>, Vec<f64>)) -> (Vec<f64>, Vec<f64>) {
    let s: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= s;
    }
    (u, w)
}

/// Per-shell density-matrix block: populations and the upper-triangle
/// coherences (hermiticity is structural).
#[derive(Debug, Clone, Copy, Default)]
pub struct ShellState {
    pub p: [f64; 4],
    pub s12: Complex64,
    pub s13: Complex64,
    pub s14: Complex64,
    pub s23: Complex64,
    pub s24: Complex64,
    pub s34: Complex64,
}

pub const REALS_PER_SHELL: usize = 16;
const FIELD_REALS: usize = 6;

#[derive(Debug, Clone)]
pub struct SystemState {
    pub a_p: Complex64,
    pub a_c: Complex64,
    pub a_s: Complex64,
    pub shells: Vec<ShellState>,
}

impl SystemState {
    /// Empty cavity, all atoms in |1⟩.
    pub fn vacuum(n_shells: usize) -> Self {
        Self {
            a_p: Complex64::default(),
            a_c: Complex64::default(),
            a_s: Complex64::default(),
            shells: vec![ShellState { p: [1.0, 0.0, 0.0, 0.0], ..Default::default() }; n_shells],
        }
    }

    pub fn flat_len(n_shells: usize) -> usize {
        FIELD_REALS + REALS_PER_SHELL * n_shells
    }

    pub fn to_flat(&self, out: &mut [f64]) {
        put_c(&mut out[0..2], self.a_p);
        put_c(&mut out[2..4], self.a_c);
        put_c(&mut out[4..6], self.a_s);
        for (k, sh) in self.shells.iter().enumerate() {
            let b = &mut out[FIELD_REALS + REALS_PER_SHELL * k..];
            b[0..4].copy_from_slice(&sh.p);
            put_c(&mut b[4..6], sh.s12);
            put_c(&mut b[6..8], sh.s13);
            put_c(&mut b[8..10], sh.s14);
            put_c(&mut b[10..12], sh.s23);
            put_c(&mut b[12..14], sh.s24);
            put_c(&mut b[14..16], sh.s34);
        }
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let n_shells = (y.len() - FIELD_REALS) / REALS_PER_SHELL;
        let mut shells = Vec::with_capacity(n_shells);
        for k in 0..n_shells {
            let b = &y[FIELD_REALS + REALS_PER_SHELL * k..];
            shells.push(ShellState {
                p: [b[0], b[1], b[2], b[3]],
                s12: get_c(&b[4..6]),
                s13: get_c(&b[6..8]),
                s14: get_c(&b[8..10]),
                s23: get_c(&b[10..12]),
                s24: get_c(&b[12..14]),
                s34: get_c(&b[14..16]),
            });
        }
        Self { a_p: get_c(&y[0..2]), a_c: get_c(&y[2..4]), a_s: get_c(&y[4..6]), shells }
    }

    /// max_k |Σ_i p_ii − 1|.
    pub fn trace_error(&self) -> f64 {
        self.shells
            .iter()
            .map(|sh| (sh.p.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Atom-number-weighted ensemble populations.
    pub fn mean_populations(&self, grid: &RadialGrid) -> [f64; 4] {
        let mut acc = [0.0; 4];
        let mut total = 0.0;
        for (sh, cell) in self.shells.iter().zip(&grid.shells) {
            total += cell.atoms;
            for i in 0..4 {
                acc[i] += cell.atoms * sh.p[i];
            }
        }
        if total > 0.0 {
            for a in acc.iter_mut() {
                *a /= total;
            }
        }
        acc
    }
}

fn put_c(b: &mut [f64], z: Complex64) {
    b[0] = z.re;
    b[1] = z.im;
}

fn get_c(b: &[f64]) -> Complex64 {
    Complex64::new(b[0], b[1])
}

/// Step turn-on of one input field.
#[derive(Debug, Clone, Copy)]
pub struct Pulse {
    pub t_on: f64,
    pub amplitude: Complex64,
}

impl Pulse {
    pub fn off() -> Self {
        Self { t_on: 0.0, amplitude: Complex64::default() }
    }

    fn at(&self, t: f64) -> Complex64 {
        if t >= self.t_on {
            self.amplitude
        } else {
            Complex64::default()
        }
    }
}

/// Input schedule for the three fields; amplitudes in √(photons/µs).
#[derive(Debug, Clone, Copy)]
pub struct PulseSchedule {
    pub probe: Pulse,
    pub control: Pulse,
    pub switching: Pulse,
}

/// Input probe amplitude giving `n` steady intracavity photons in the empty
/// resonant cavity: |a_in| = √n·κ/√(2κ_H/τ).
pub fn input_for_photons(n: f64, p: &SystemParams) -> Result<f64> {
    let rate = p.cavity.input_rate();
    if rate <= 0.0 {
        return Err(Error::Config("input calibration needs kappa_in > 0".into()));
    }
    Ok(n.sqrt() * p.cavity.kappa() / rate)
}

impl PulseSchedule {
    /// Step inputs: control and switching from t = 0, probe delayed by
    /// `probe_delay` (0.5 µs in the reference runs). The control drive is
    /// calibrated so the empty-cavity steady control field reproduces Ω_c,
    /// the switching drive so the steady switching photon number is `n_s`.
    pub fn step_inputs(p: &SystemParams, n_s: f64, probe_delay: f64) -> Result<Self> {
        if probe_delay < 0.0 || !(n_s >= 0.0) {
            return Err(Error::Config("probe_delay and n_s must be >= 0".into()));
        }
        let rate = p.cavity.input_rate();
        if rate <= 0.0 {
            return Err(Error::Config("pulse calibration needs kappa_in > 0".into()));
        }
        let control_amp = if p.drive.omega_c > 0.0 {
            if p.atomic.g_c <= 0.0 {
                return Err(Error::Config("omega_c > 0 requires g_c > 0".into()));
            }
            p.drive.omega_c / p.atomic.g_c * p.cavity.kappa() / rate
        } else {
            0.0
        };
        Ok(Self {
            probe: Pulse { t_on: probe_delay, amplitude: p.drive.a_p_in },
            control: Pulse { t_on: 0.0, amplitude: control_amp.into() },
            switching: Pulse { t_on: 0.0, amplitude: input_for_photons(n_s, p)?.into() },
        })
    }

    fn edges(&self) -> Vec<f64> {
        let mut e = vec![self.probe.t_on, self.control.t_on, self.switching.t_on];
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e.dedup();
        e
    }
}

/// Precomputed right-hand side of the coupled field + density-matrix system,
/// written in the rotating frame: detunings enter as imaginary damping, so
/// far-detuned configurations are stiff rather than oscillatory.
pub struct Model<'a> {
    p: &'a SystemParams,
    grid: &'a RadialGrid,
    schedule: PulseSchedule,
}

impl<'a> Model<'a> {
    pub fn new(p: &'a SystemParams, grid: &'a RadialGrid, schedule: PulseSchedule) -> Self {
        Self { p, grid, schedule }
    }

    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let p = self.p;
        let d = p.derived();
        let a = &p.atomic;
        let det = &p.detuning;
        let rate = p.cavity.input_rate();
        let a_p = get_c(&y[0..2]);
        let a_c = get_c(&y[2..4]);
        let a_s = get_c(&y[4..6]);

        let mut sum_p = Complex64::default();
        let mut sum_c = Complex64::default();
        let mut sum_s = Complex64::default();

        for (k, cell) in self.grid.shells.iter().enumerate() {
            let b = &y[FIELD_REALS + REALS_PER_SHELL * k..FIELD_REALS + REALS_PER_SHELL * (k + 1)];
            let (p11, p22, p33, p44) = (b[0], b[1], b[2], b[3]);
            let s12 = get_c(&b[4..6]);
            let s13 = get_c(&b[6..8]);
            let s14 = get_c(&b[8..10]);
            let s23 = get_c(&b[10..12]);
            let s24 = get_c(&b[12..14]);
            let s34 = get_c(&b[14..16]);

            let e_p = cell.c_p * a_p;
            let e_c = cell.c_c * a_c;
            let e_s = cell.c_s * a_s;

            let ds12 = -Complex64::new(a.gamma_0, -(det.delta - det.delta_c)) * s12
                - I * e_p * s23.conj()
                + I * e_c.conj() * s13
                + I * e_s.conj() * s14;
            let ds13 = -Complex64::new(d.gamma, -det.delta) * s13
                + I * e_p * (p11 - p33)
                + I * e_c * s12;
            let ds14 = -Complex64::new(d.gamma_s, -(det.delta - det.delta_c + det.delta_s)) * s14
                - I * e_p * s34
                + I * e_s * s12;
            let ds23 = -Complex64::new(d.gamma, -det.delta_c) * s23
                + I * e_c * (p22 - p33)
                + I * e_p * s12.conj()
                - I * e_s * s34.conj();
            let ds24 = -Complex64::new(d.gamma_s, -det.delta_s) * s24 - I * e_c * s34
                + I * e_s * (p22 - p44);
            let ds34 = -Complex64::new(
                d.gamma + d.gamma_s - 2.0 * a.gamma_0,
                -(det.delta_s - det.delta_c),
            ) * s34
                - I * e_c.conj() * s24
                + I * e_s * s23.conj()
                - I * e_p.conj() * s14;

            let xp = 2.0 * (e_p.conj() * s13).im;
            let xc = 2.0 * (e_c.conj() * s23).im;
            let xs = 2.0 * (e_s.conj() * s24).im;
            let dp11 = a.gamma_31 * p33 - xp;
            let dp22 = a.gamma_32 * p33 + a.gamma_42 * p44 - xc - xs;
            let dp33 = -(a.gamma_31 + a.gamma_32) * p33 + xp + xc;
            let dp44 = -a.gamma_42 * p44 + xs;

            let ob = &mut dy[FIELD_REALS + REALS_PER_SHELL * k..];
            ob[0] = dp11;
            ob[1] = dp22;
            ob[2] = dp33;
            ob[3] = dp44;
            put_c(&mut ob[4..6], ds12);
            put_c(&mut ob[6..8], ds13);
            put_c(&mut ob[8..10], ds14);
            put_c(&mut ob[10..12], ds23);
            put_c(&mut ob[12..14], ds24);
            put_c(&mut ob[14..16], ds34);

            sum_p += cell.atoms * cell.c_p * s13;
            sum_c += cell.atoms * cell.c_c * s23;
            sum_s += cell.atoms * cell.c_s * s24;
        }

        let kappa = d.kappa;
        let da_p = -Complex64::new(kappa, -(det.delta + det.delta_p_c)) * a_p + I * sum_p
            + rate * self.schedule.probe.at(t);
        let da_c = -Complex64::new(kappa, -det.delta_c_c) * a_c + I * sum_c
            + rate * self.schedule.control.at(t);
        let da_s = -Complex64::new(kappa, -det.delta_s_c) * a_s + I * sum_s
            + rate * self.schedule.switching.at(t);
        put_c(&mut dy[0..2], da_p);
        put_c(&mut dy[2..4], da_c);
        put_c(&mut dy[4..6], da_s);
    }
}

/// Full right-hand side at (state, t); pure function of its arguments.
pub fn derivative(
    state: &SystemState,
    schedule: &PulseSchedule,
    t: f64,
    p: &SystemParams,
    grid: &RadialGrid,
) -> SystemState {
    let n = SystemState::flat_len(state.shells.len());
    let mut y = vec![0.0; n];
    let mut dy = vec![0.0; n];
    state.to_flat(&mut y);
    Model::new(p, grid, *schedule).rhs(t, &y, &mut dy);
    SystemState::from_flat(&dy)
}

/// Integrate from `initial`, returning the state at each sample time.
/// Integration restarts at every pulse edge so the step inputs stay sharp.
pub fn integrate(
    initial: &SystemState,
    schedule: &PulseSchedule,
    samples: &[f64],
    p: &SystemParams,
    grid: &RadialGrid,
    opts: &OdeOptions,
) -> Result<Vec<SystemState>> {
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let t_end = *samples.last().unwrap();
    let model = Model::new(p, grid, *schedule);
    let n = SystemState::flat_len(grid.shells.len());
    let mut y = vec![0.0; n];
    initial.to_flat(&mut y);

    // Segment boundaries: pulse edges inside (t0, t_end).
    let t0 = samples.first().map(|&s| s.min(0.0)).unwrap_or(0.0).min(0.0);
    let mut bounds = vec![t0];
    for e in schedule.edges() {
        if e > t0 && e < t_end && Some(&e) != bounds.last() {
            bounds.push(e);
        }
    }
    bounds.push(t_end);

    let mut out = Vec::with_capacity(samples.len());
    let mut idx = 0;
    for seg in bounds.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut seg_samples: Vec<f64> =
            samples[idx..].iter().copied().take_while(|&s| s <= b).collect();
        idx += seg_samples.len();
        let record_end = seg_samples.last() != Some(&b);
        if record_end {
            seg_samples.push(b);
        }
        let states = ode::solve(|t, y, dy| model.rhs(t, y, dy), a, &y, &seg_samples, opts)?;
        y.copy_from_slice(states.last().unwrap());
        let keep = if record_end { states.len() - 1 } else { states.len() };
        out.extend(states.into_iter().take(keep).map(|s| SystemState::from_flat(&s)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Relative change threshold per 5/κ window.
    pub tol: f64,
    pub t_max: Option<f64>,
    pub ode: OdeOptions,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        // Integrator noise sets the floor of the window-to-window residual;
        // keep it an order below the 1e-8 convergence threshold.
        let ode = OdeOptions { rtol: 1e-11, atol: 1e-14, ..OdeOptions::default() };
        Self { tol: 1e-8, t_max: None, ode }
    }
}

/// Integrate with constant inputs until every state component is stationary:
/// relative change below `tol` over a window of 5/κ.
pub fn steady_state(
    schedule: &PulseSchedule,
    p: &SystemParams,
    grid: &RadialGrid,
    opts: &SteadyOptions,
) -> Result<SystemState> {
    let kappa = p.cavity.kappa();
    if kappa <= 0.0 {
        return Err(Error::Config("steady state needs kappa > 0".into()));
    }
    let window = 5.0 / kappa;
    let t_start = schedule.edges().last().copied().unwrap_or(0.0);
    let t_max = opts.t_max.unwrap_or_else(|| {
        let keit = spectra::eit_linewidth(p, spectra::LinewidthMethod::AnalyticStandard)
            .unwrap_or(kappa);
        t_start + 60.0 / keit.max(kappa * 1e-4) + 100.0 / kappa
    });
    let model = Model::new(p, grid, *schedule);
    let n = SystemState::flat_len(grid.shells.len());
    let mut y = vec![0.0; n];
    SystemState::vacuum(grid.shells.len()).to_flat(&mut y);

    // Get past the pulse edges first.
    if t_start > 0.0 {
        let states = ode::solve(|t, yy, dy| model.rhs(t, yy, dy), 0.0, &y, &[t_start], &opts.ode)?;
        y.copy_from_slice(&states[0]);
    }
    let mut t = t_start;
    let mut residual = f64::INFINITY;
    while t < t_max {
        let states =
            ode::solve(|tt, yy, dy| model.rhs(tt, yy, dy), t, &y, &[t + window], &opts.ode)?;
        let y_next = &states[0];
        let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-30);
        residual = y
            .iter()
            .zip(y_next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max)
            / scale;
        y.copy_from_slice(y_next);
        t += window;
        if residual < opts.tol {
            return Ok(SystemState::from_flat(&y));
        }
    }
    Err(Error::NotConverged(format!(
        "no steady state by t = {t_max:.3} us (relative residual {residual:.3e} per {window:.3} us window)"
    )))
}

/// Normalized probe transmission of a state: |a_p|² over the empty-cavity
/// resonant value for the same input.
pub fn t_norm(state: &SystemState, p: &SystemParams) -> f64 {
    let a_in = p.drive.a_p_in.norm();
    if a_in == 0.0 {
        return 0.0;
    }
    let empty = p.cavity.input_rate() * a_in / p.cavity.kappa();
    (state.a_p.norm() / empty).powi(2)
}

/// Steady normalized transmission as a function of the intracavity switching
/// photon number n_s.
pub fn switching_sweep(
    n_s_grid: &[f64],
    delta_s: f64,
    p: &SystemParams,
    grid: &RadialGrid,
    opts: &SteadyOptions,
) -> Result<Vec<(f64, f64)>> {
    if n_s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("n_s grid must be increasing".into()));
    }
    let mut p = *p;
    p.detuning.delta_s = delta_s;
    n_s_grid
        .par_iter()
        .map(|&n_s| {
            let mut pp = p;
            pp.drive.omega_s = pp.atomic.g_s * n_s.sqrt();
            let schedule = PulseSchedule::step_inputs(&pp, n_s, 0.5)?;
            let state = steady_state(&schedule, &pp, grid, opts)?;
            Ok((n_s, t_norm(&state, &pp)))
        })
        .collect()
}

/// Result of the minimal-switching-photon search.
#[derive(Debug, Clone, Copy)]
pub struct SwitchingPhotons {
    /// Bisected photon number where T_norm crosses 10%.
    pub n_s: f64,
    /// κ_EIT-based estimate 10·Δ_s·κ_EIT/g_s².
    pub estimate: f64,
    /// Coarser order-of-magnitude estimate 400·γ₀·Δ_s/g_s².
    pub estimate_rough: f64,
}

/// Minimal intracavity switching photon number bringing the normalized
/// transmission from its EIT baseline (≥ 90%) down to 10%.
pub fn minimal_switching_photons(
    delta_s: f64,
    p: &SystemParams,
    grid: &RadialGrid,
    opts: &SteadyOptions,
) -> Result<SwitchingPhotons> {
    let mut p = *p;
    p.detuning.delta_s = delta_s;
    let keit = spectra::eit_linewidth(&p, spectra::LinewidthMethod::AnalyticStandard)?;
    let g_s = p.atomic.g_s;
    if g_s <= 0.0 || delta_s <= 0.0 {
        return Err(Error::Config("switching search needs g_s > 0 and delta_s > 0".into()));
    }
    let estimate = 10.0 * delta_s * keit / (g_s * g_s);
    let estimate_rough = 400.0 * p.atomic.gamma_0 * delta_s / (g_s * g_s);

    let eval = |n_s: f64| -> Result<f64> {
        let mut pp = p;
        pp.drive.omega_s = g_s * n_s.sqrt();
        let schedule = PulseSchedule::step_inputs(&pp, n_s, 0.5)?;
        Ok(t_norm(&steady_state(&schedule, &pp, grid, opts)?, &pp))
    };

    let baseline = eval(0.0)?;
    if baseline < 0.89 {
        return Err(Error::Precondition(format!(
            "EIT baseline transmission {baseline:.3} is below the required 90%"
        )));
    }

    // Log-space bracket around the estimate, then bisection on ln n_s.
    let target = 0.10;
    let mut lo = estimate / 64.0;
    while eval(lo)? < target {
        lo /= 8.0;
        if lo < 1e-6 {
            return Err(Error::Domain("10% crossing below n_s = 1e-6".into()));
        }
    }
    let mut hi = estimate.max(lo * 8.0);
    while eval(hi)? > target {
        hi *= 8.0;
        if hi > 1e12 {
            return Err(Error::Domain("10% crossing above n_s = 1e12".into()));
        }
    }
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        let t = eval(mid)?;
        if t > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.001 {
            break;
        }
    }
    Ok(SwitchingPhotons { n_s: (lo * hi).sqrt(), estimate, estimate_rough })
}


/// Trajectory dump: `t_us,re_ap,im_ap,p11,p22,p33,p44` with atom-averaged
/// populations, 12 significant digits.
pub fn write_trajectory_csv<W: std::io::Write>(
    mut w: W,
    times: &[f64],
    states: &[SystemState],
    grid: &RadialGrid,
) -> Result<()> {
    writeln!(w, "t_us,re_ap,im_ap,p11,p22,p33,p44")?;
    for (t, st) in times.iter().zip(states) {
        let pops = st.mean_populations(grid);
        writeln!(
            w,
            "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
            t, st.a_p.re, st.a_p.im, pops[0], pops[1], pops[2], pops[3]
        )?;
    }
    Ok(())
}
