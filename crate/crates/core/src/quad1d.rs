//! One-dimensional Gauss–Legendre and Gauss–Lobatto rules.

/// A 1D quadrature rule on an interval.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial P_n and derivative P_n' at x (recurrence).
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let dp = if (x * x - 1.0).abs() < 1e-14 {
        // endpoint value: P_n'(±1) = ±^{n+1} n(n+1)/2
        let s = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Gauss–Legendre rule with `n` points on [-1, 1]; exact for degree 2n-1.
pub fn gauss_legendre(n: usize) -> Rule1d {
    assert!(n >= 1, "need at least one Gauss point");
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess, Newton refinement.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        points[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // symmetrize against round-off
    for i in 0..n / 2 {
        let x = 0.5 * (points[n - 1 - i] - points[i]);
        points[i] = -x;
        points[n - 1 - i] = x;
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Rule1d { points, weights }
}

/// Gauss–Lobatto rule with `n >= 2` points on [-1, 1] (endpoints included);
/// exact for degree 2n-3.
pub fn gauss_lobatto(n: usize) -> Rule1d {
    assert!(n >= 2, "Lobatto rule needs at least two points");
    let m = n - 1;
    let mut points = vec![0.0; n];
    points[0] = -1.0;
    points[n - 1] = 1.0;
    // interior points: roots of P_{n-1}'
    for i in 1..m {
        let mut x = ((i as f64) * std::f64::consts::PI / (m as f64)).cos();
        for _ in 0..100 {
            // Newton on P'_{m}: use second derivative from Legendre ODE
            // (1-x^2) P'' = 2x P' - m(m+1) P
            let (p, dp) = legendre_with_deriv(m, x);
            let ddp = (2.0 * x * dp - (m * (m + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        points[n - 1 - i] = x;
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let (p, _) = legendre_with_deriv(m, points[i]);
        weights[i] = 2.0 / ((m * (m + 1)) as f64 * p * p);
    }
    Rule1d { points, weights }
}

/// Nodes for temporal interpolation: Gauss–Lobatto of `order + 1` points
/// (both endpoints) for `order >= 1`; the midpoint for `order == 0`.
pub fn interpolation_nodes(order: usize, a: f64, b: f64) -> Vec<f64> {
    if order == 0 {
        return vec![0.5 * (a + b)];
    }
    gauss_lobatto(order + 1)
        .points
        .iter()
        .map(|&x| 0.5 * (a + b) + 0.5 * (b - a) * x)
        .collect()
}

impl Rule1d {
    /// Map the reference rule from [-1, 1] to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule1d {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        Rule1d {
            points: self.points.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }
}

/// Number of Gauss points needed for polynomial exactness of `degree`.
pub fn gauss_count_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}
