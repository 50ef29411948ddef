//! Adaptive ODE integration on flat real state vectors.
//!
//! The default stepper is the Dormand–Prince 5(4) embedded pair with a PI
//! step controller. The systems integrated here are written in the rotating
//! frame, so detunings act as imaginary damping: for large Δ_s the equations
//! become stiff rather than oscillatory. On persistent step collapse the
//! integration switches to a semi-implicit Rosenbrock 2(3) method with a
//! finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Switch to the semi-implicit stepper once the accepted step falls
    /// below `span/stiff_ratio` after an initial transient.
    pub stiff_ratio: f64,
    pub allow_stiff_switch: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        // Rates span 2π×6e-4 to 2π×11.2 MHz and beyond; tight tolerances
        // keep the 4+ decade separation honest.
        Self { rtol: 1e-9, atol: 1e-12, max_steps: 50_000_000, stiff_ratio: 1e6, allow_stiff_switch: true }
    }
}

/// Integrate `dy/dt = f(t, y)` from `t0`, recording the state at each of the
/// increasing `samples` (each ≥ t0). Steps are clamped to land exactly on
/// sample times.
pub fn solve<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    samples: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if samples.windows(2).any(|w| w[1] <= w[0]) || samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::Config("sample times must be increasing and >= t0".into()));
    }
    let t_end = match samples.last() {
        Some(&t) => t,
        None => return Ok(Vec::new()),
    };
    let span = (t_end - t0).max(f64::MIN_POSITIVE);
    let n = y0.len();
    let mut out = Vec::with_capacity(samples.len());
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut sample_iter = samples.iter().copied().peekable();
    while sample_iter.peek() == Some(&t) {
        out.push(y.clone());
        sample_iter.next();
    }

    let mut h = initial_step(&mut f, t, &y, opts);
    let mut err_prev = 1.0_f64;
    let mut steps = 0usize;
    let mut stiff_mode = false;

    let mut k = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0]);
    let mut ytmp = vec![0.0; n];
    let mut yerr = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut rb = None::<Rosenbrock>;

    while let Some(&target) = sample_iter.peek() {
        if steps >= opts.max_steps {
            return Err(Error::NotConverged(format!(
                "step budget {} exhausted at t = {t}",
                opts.max_steps
            )));
        }
        steps += 1;
        let h_step = h.min(target - t);
        let clipped = h_step < h;

        let (err, t_next) = if stiff_mode {
            let r = rb.get_or_insert_with(|| Rosenbrock::new(n));
            r.step(&mut f, t, &y, h_step, &mut ynew, &mut yerr);
            (error_norm(&y, &ynew, &yerr, opts), t + h_step)
        } else {
            dp54_step(&mut f, t, &y, h_step, &mut k, &mut ytmp, &mut ynew, &mut yerr);
            (error_norm(&y, &ynew, &yerr, opts), t + h_step)
        };

        if !err.is_finite() {
            h *= 0.25;
            check_underflow(&mut f, t, &y, h, span)?;
            if !stiff_mode {
                f(t, &y, &mut k[0]);
            }
            continue;
        }

        if err <= 1.0 {
            t = t_next;
            y.copy_from_slice(&ynew);
            if !stiff_mode {
                // FSAL: stage 7 of the accepted step is f(t_next, y_next).
                let (head, tail) = k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
            }
            while sample_iter.peek().is_some_and(|&s| s <= t + 1e-12 * span) {
                out.push(y.clone());
                sample_iter.next();
            }
            err_prev = err.max(1e-4);
        } else if !stiff_mode {
            f(t, &y, &mut k[0]);
        }

        // PI controller (orders 5 explicit / 2 semi-implicit share the
        // exponent; only step scaling differs through the error itself).
        let fac = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
        let h_candidate = h_step * fac.clamp(0.2, 5.0);
        h = if clipped && err <= 1.0 { h.max(h_candidate) } else { h_candidate };

        check_underflow(&mut f, t, &y, h, span)?;
        if !stiff_mode
            && opts.allow_stiff_switch
            && steps > 2000
            && h < span / opts.stiff_ratio
        {
            stiff_mode = true;
        }
    }
    Ok(out)
}

fn check_underflow<F>(f: &mut F, t: f64, y: &[f64], h: f64, span: f64) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if h < span * 1e-14 || h < f64::MIN_POSITIVE * 1e4 {
        let eig = dominant_rate_estimate(f, t, y);
        return Err(Error::Stiffness { t, h, eig_estimate: eig });
    }
    Ok(())
}

/// Crude power-iteration estimate of the fastest local rate |λ|, via
/// finite-difference directional derivatives of f.
fn dominant_rate_estimate<F>(f: &mut F, t: f64, y: &[f64]) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    let scale = y.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let eps = 1e-7 * scale;
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5).collect();
    let mut f0 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut yp = vec![0.0; n];
    f(t, y, &mut f0);
    let mut lambda = 0.0;
    for _ in 0..8 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        for i in 0..n {
            yp[i] = y[i] + eps * v[i];
        }
        f(t, &yp, &mut f1);
        for i in 0..n {
            v[i] = (f1[i] - f0[i]) / eps;
        }
        lambda = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    lambda
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut f0 = vec![0.0; n];
    f(t0, y0, &mut f0);
    let d0 = y0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let d1 = f0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if d1 <= 1e-300 {
        return 1e-6;
    }
    (0.01 * (d0 + opts.atol) / d1).clamp(1e-12, 0.1)
}

fn error_norm(y: &[f64], ynew: &[f64], yerr: &[f64], opts: &OdeOptions) -> f64 {
    let n = y.len().max(1);
    let mut acc = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
        let r = yerr[i] / sc;
        acc += r * r;
    }
    (acc / n as f64).sqrt()
}

/// One Dormand–Prince 5(4) step with FSAL; `k[0]` must hold f(t, y) on entry
/// and `k[6]` holds f(t+h, ynew) on exit.
#[allow(clippy::too_many_arguments)]
fn dp54_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>],
    ytmp: &mut [f64],
    ynew: &mut [f64],
    yerr: &mut [f64],
) where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [&[f64]; 6] = [
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let n = y.len();
    for s in 0..6 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, a) in A[s].iter().enumerate() {
                acc += a * k[j][i];
            }
            ytmp[i] = y[i] + h * acc;
        }
        let rest = &mut k[s + 1];
        f(t + C[s] * h, ytmp, rest);
    }
    // Fifth-order solution is stage 6's argument (A[5] row are the b weights).
    ynew.copy_from_slice(ytmp);
    for i in 0..n {
        let mut acc = 0.0;
        for (j, e) in E.iter().enumerate() {
            acc += e * k[j][i];
        }
        yerr[i] = h * acc;
    }
}

/// Rosenbrock 2(3) (Shampine's ode23s) with finite-difference Jacobian,
/// for the stiff tail of far-detuned switching runs. Preserves linear
/// invariants (cᵀy = const whenever cᵀf ≡ 0), so trace conservation
/// survives the switch.
struct Rosenbrock {
    n: usize,
    f0: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    yp: Vec<f64>,
    jac: DMatrix<f64>,
    jac_t: f64,
    lu: Option<(f64, nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>)>,
}

impl Rosenbrock {
    fn new(n: usize) -> Self {
        Self {
            n,
            f0: vec![0.0; n],
            f1: vec![0.0; n],
            f2: vec![0.0; n],
            yp: vec![0.0; n],
            jac: DMatrix::zeros(n, n),
            jac_t: f64::NAN,
            lu: None,
        }
    }

    fn step<F>(&mut self, f: &mut F, t: f64, y: &[f64], h: f64, ynew: &mut [f64], yerr: &mut [f64])
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let d = 1.0 / (2.0 + 2.0_f64.sqrt());
        let e32 = 6.0 + 2.0_f64.sqrt();
        let n = self.n;
        f(t, y, &mut self.f0);
        // Refresh the Jacobian only when t moved; the systems here are
        // piecewise-autonomous, so it drifts slowly.
        if self.jac_t != t {
            let scale = y.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let eps = 1e-8 * scale;
            for j in 0..n {
                self.yp.copy_from_slice(y);
                self.yp[j] += eps;
                f(t, &self.yp, &mut self.f1);
                for i in 0..n {
                    self.jac[(i, j)] = (self.f1[i] - self.f0[i]) / eps;
                }
            }
            self.jac_t = t;
            self.lu = None;
        }
        if self.lu.as_ref().map(|(hh, _)| *hh != h).unwrap_or(true) {
            let mut w = DMatrix::identity(n, n);
            w -= &self.jac * (h * d);
            self.lu = Some((h, w.lu()));
        }
        let lu = &self.lu.as_ref().unwrap().1;

        let k1 = lu.solve(&DVector::from_column_slice(&self.f0)).unwrap();
        for i in 0..n {
            self.yp[i] = y[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &self.yp, &mut self.f1);
        let rhs2 = DVector::from_iterator(n, (0..n).map(|i| self.f1[i] - k1[i]));
        let k2 = lu.solve(&rhs2).unwrap() + &k1;
        for i in 0..n {
            ynew[i] = y[i] + h * k2[i];
        }
        f(t + h, ynew, &mut self.f2);
        let rhs3 = DVector::from_iterator(
            n,
            (0..n).map(|i| self.f2[i] - e32 * (k2[i] - self.f1[i]) - 2.0 * (k1[i] - self.f0[i])),
        );
        let k3 = lu.solve(&rhs3).unwrap();
        for i in 0..n {
            yerr[i] = h / 6.0 * (k1[i] - 2.0 * k2[i] + k3[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let samples: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
        let out = solve(|_, y, dy| dy[0] = -2.0 * y[0], 0.0, &[1.0], &samples, &OdeOptions::default())
            .unwrap();
        for (t, y) in samples.iter().zip(&out) {
            assert_relative_eq!(y[0], (-2.0 * t).exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn harmonic_oscillator_phase_and_energy() {
        let samples = [50.0 * std::f64::consts::PI];
        let out = solve(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            &samples,
            &OdeOptions::default(),
        )
        .unwrap();
        // 25 full periods: back to the initial point.
        assert_relative_eq!(out[0][0], 1.0, epsilon = 1e-6);
        assert!(out[0][1].abs() < 1e-6);
    }

    #[test]
    fn sample_at_t0_and_ordering_checks() {
        let out = solve(|_, y, dy| dy[0] = -y[0], 0.0, &[2.0], &[0.0, 1.0], &OdeOptions::default())
            .unwrap();
        assert_eq!(out[0][0], 2.0);
        assert_relative_eq!(out[1][0], 2.0 * (-1.0_f64).exp(), max_relative = 1e-8);
        assert!(solve(|_, _, dy| dy[0] = 0.0, 0.0, &[0.0], &[1.0, 0.5], &OdeOptions::default())
            .is_err());
    }

    #[test]
    fn stiff_linear_system() {
        // λ = −10⁶ and −1 over a unit interval: hopeless for a purely
        // explicit method at these tolerances without the fallback.
        let opts = OdeOptions { rtol: 1e-8, atol: 1e-10, ..OdeOptions::default() };
        let samples = [1.0];
        let out = solve(
            |_, y, dy| {
                dy[0] = -1e6 * y[0];
                dy[1] = -y[1] + y[0];
            },
            0.0,
            &[1.0, 0.0],
            &samples,
            &opts,
        )
        .unwrap();
        assert!(out[0][0].abs() < 1e-10);
        // y1(t) ≈ e^{−t}/(10⁶−1) · (1 − e^{−(10⁶−1)t}) + 0·… — the slow
        // component settles to e^{−t}·1/(10⁶−1) ≈ 3.679e-7.
        assert_relative_eq!(out[0][1], (-1.0_f64).exp() / (1e6 - 1.0), max_relative = 1e-4);
    }

    #[test]
    fn blowup_reports_stiffness() {
        // y' = y² blows up at t = 1; the step collapses near the pole.
        let res = solve(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], &[2.0], &OdeOptions::default());
        match res {
            Err(Error::Stiffness { t, eig_estimate, .. }) => {
                assert!((t - 1.0).abs() < 0.1, "pole located at t = {t}");
                assert!(eig_estimate > 1e6);
            }
            other => panic!("expected stiffness error, got {other:?}"),
        }
    }

    #[test]
    fn rosenbrock_preserves_linear_invariant() {
        // Closed two-state rate equation: y0 + y1 conserved exactly by both
        // steppers; force the stiff path with a tight stiff_ratio.
        let opts = OdeOptions { stiff_ratio: 1.0, ..OdeOptions::default() };
        let samples: Vec<f64> = (1..=5).map(|k| k as f64).collect();
        let out = solve(
            |_, y, dy| {
                dy[0] = -3.0 * y[0] + y[1];
                dy[1] = 3.0 * y[0] - y[1];
            },
            0.0,
            &[1.0, 0.0],
            &samples,
            &opts,
        )
        .unwrap();
        for y in &out {
            assert_relative_eq!(y[0] + y[1], 1.0, max_relative = 1e-12);
        }
    }
}
