//! Gauss–Legendre rules and the graded variants used for radial averages.
//!
//! The radial integrals here have the generic shape ∫₀¹ du/(1 + Θu) with
//! |Θ| reaching 10³–10⁴ at line center, i.e. a boundary layer of width
//! ~1/|Θ| at u → 0. Two discretizations are provided:
//!
//! * [`integrate_graded`]: composite Gauss–Legendre on dyadic panels packed
//!   toward u = 0 — a brute-force rule used as the independent oracle;
//! * [`graded_nodes`]: a single rule under the substitution
//!   u = (e^{Lv} − 1)/Θ₀, L = ln(1+Θ₀), which flattens the layer and keeps
//!   the node count low for the per-shell simulation grids.

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// n-point rule mapped to the interval [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|xi| mid + c * xi).collect(),
        w.iter().map(|wi| c * wi).collect(),
    )
}

/// Dyadic panel edges on (0, 1], packed toward 0 until the innermost panel
/// resolves a boundary layer of width 1/(1+scale).
pub fn dyadic_edges(scale: f64) -> Vec<f64> {
    let scale = scale.max(0.0).min(1e300);
    let j_max = ((1.0 + scale).log2().ceil() as i32 + 1).clamp(1, 60);
    let mut edges = Vec::with_capacity(j_max as usize + 2);
    edges.push(0.0);
    for j in (1..=j_max).rev() {
        edges.push(2f64.powi(-j));
    }
    edges.push(1.0);
    edges
}

/// Composite Gauss–Legendre over dyadic panels graded toward u = 0, with
/// `n_per_panel` nodes per panel. `scale` sets the grading depth (the
/// magnitude of the saturation parameter at line center).
pub fn integrate_graded_c<F>(f: F, n_per_panel: usize, scale: f64) -> num_complex::Complex64
where
    F: Fn(f64) -> num_complex::Complex64,
{
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for e in dyadic_edges(scale).windows(2) {
        let (x, w) = gauss_legendre_on(n_per_panel, e[0], e[1]);
        for (xi, wi) in x.iter().zip(&w) {
            acc += f(*xi) * *wi;
        }
    }
    acc
}

/// Nodes u_k ∈ (0, 1) and weights w_k for ∫₀¹ g(u) du under the log-graded
/// substitution u = (e^{Lv} − 1)/Θ₀. Σw_k → 1 as n grows; for Θ₀ ≲ 1e-8 the
/// rule degenerates to plain Gauss–Legendre on (0, 1).
pub fn graded_nodes(n: usize, theta0: f64) -> (Vec<f64>, Vec<f64>) {
    let theta0 = theta0.max(0.0).min(1e15);
    let (v, w) = gauss_legendre_on(n, 0.0, 1.0);
    if theta0 < 1e-8 {
        return (v, w);
    }
    let big_l = (1.0 + theta0).ln();
    let mut u = Vec::with_capacity(n);
    let mut wu = Vec::with_capacity(n);
    for (vi, wi) in v.iter().zip(&w) {
        let e = (big_l * vi).exp();
        u.push((e - 1.0) / theta0);
        wu.push(wi * big_l * e / theta0);
    }
    (u, wu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // n-point rule is exact through degree 2n-1.
        let (x, w) = gauss_legendre(5);
        let val: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert_relative_eq!(val, 2.0 / 9.0, max_relative = 1e-13);
        let sum_w: f64 = w.iter().sum();
        assert_relative_eq!(sum_w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gl_matches_tabulated_values() {
        let (x, w) = gauss_legendre(4);
        assert_relative_eq!(x[3], 0.8611363115940526, max_relative = 1e-13);
        assert_relative_eq!(w[3], 0.3478548451374538, max_relative = 1e-13);
        assert_relative_eq!(x[2], 0.3399810435848563, max_relative = 1e-13);
        assert_relative_eq!(w[2], 0.6521451548625461, max_relative = 1e-13);
    }

    #[test]
    fn graded_panels_resolve_boundary_layer() {
        // ∫₀¹ du/(1+Θu) = ln(1+Θ)/Θ with Θ = 2678.57… (EIT line-center value).
        let theta = 2678.5714285714284_f64;
        let exact = (1.0 + theta).ln() / theta;
        let val: Complex64 = crate::quad::integrate_graded_c(
            |u| Complex64::new(1.0 / (1.0 + theta * u), 0.0),
            16,
            theta,
        );
        assert_relative_eq!(val.re, exact, max_relative = 1e-12);
    }

    #[test]
    fn graded_nodes_resolve_boundary_layer() {
        let theta = 2678.5714285714284_f64;
        let exact = (1.0 + theta).ln() / theta;
        let (u, w) = graded_nodes(16, theta);
        let val: f64 = u.iter().zip(&w).map(|(ui, wi)| wi / (1.0 + theta * ui)).sum();
        assert_relative_eq!(val, exact, max_relative = 1e-12);
        // Weights integrate the unit function to 1.
        let sw: f64 = w.iter().sum();
        assert_relative_eq!(sw, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn graded_nodes_degenerate_to_plain_gl() {
        let (u, w) = graded_nodes(8, 0.0);
        let (v, wv) = gauss_legendre_on(8, 0.0, 1.0);
        assert_eq!(u, v);
        assert_eq!(w, wv);
    }
}
