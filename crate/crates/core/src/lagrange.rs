//! Lagrange bases on arbitrary node sets plus small root-finding helpers
//! for nodal polynomial traces.

/// Lagrange basis over a set of distinct nodes, evaluated via the
/// barycentric form (valid also outside the node hull, which the ghost
/// penalty's polynomial extensions rely on).
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        assert!(n >= 1);
        let mut bary = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    bary[i] /= nodes[i] - nodes[j];
                }
            }
        }
        Self { nodes, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all basis functions at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        let mut vals = vec![0.0; n];
        // exact node hit
        for i in 0..n {
            if x == self.nodes[i] {
                vals[i] = 1.0;
                return vals;
            }
        }
        // L_i(x) = bary_i * prod_{j != i} (x - x_j)
        //        = bary_i * omega(x) / (x - x_i)
        let omega: f64 = self.nodes.iter().map(|&xj| x - xj).product();
        for i in 0..n {
            vals[i] = self.bary[i] * omega / (x - self.nodes[i]);
        }
        vals
    }

    /// Derivatives of all basis functions at `x`.
    pub fn eval_deriv(&self, x: f64) -> Vec<f64> {
        let n = self.len();
        let mut d = vec![0.0; n];
        // L_i'(x) = bary_i * sum_{m != i} prod_{j != i, m} (x - x_j)
        for i in 0..n {
            let mut sum = 0.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let mut prod = 1.0;
                for j in 0..n {
                    if j != i && j != m {
                        prod *= x - self.nodes[j];
                    }
                }
                sum += prod;
            }
            d[i] = self.bary[i] * sum;
        }
        d
    }

    /// Evaluate the interpolant with nodal `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        self.eval(x)
            .iter()
            .zip(values)
            .map(|(l, v)| l * v)
            .sum()
    }

    /// Derivative of the interpolant with nodal `values` at `x`.
    pub fn interpolate_deriv(&self, values: &[f64], x: f64) -> f64 {
        self.eval_deriv(x)
            .iter()
            .zip(values)
            .map(|(l, v)| l * v)
            .sum()
    }

    /// Differentiation matrix D with D[m][j] = L_j'(node_m): nodal values of
    /// the derivative of the interpolant.
    pub fn diff_matrix(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|&x| self.eval_deriv(x)).collect()
    }
}

/// Roots of a nodal polynomial trace on `[a, b]`, found by dense sign-change
/// scanning with bisection polish. Intended for the low degrees (<= 4) of
/// temporal level-set traces; roots closer than `merge_tol` are merged.
pub fn trace_roots(basis: &LagrangeBasis, values: &[f64], a: f64, b: f64, merge_tol: f64) -> Vec<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Vec::new(); // identically zero trace: no isolated roots
    }
    let nsamp = 256;
    let f = |t: f64| basis.interpolate(values, t);
    let mut roots = Vec::new();
    let mut prev_t = a;
    let mut prev_f = f(a);
    for k in 1..=nsamp {
        let t = a + (b - a) * (k as f64) / (nsamp as f64);
        let ft = f(t);
        if prev_f == 0.0 {
            roots.push(prev_t);
        } else if prev_f * ft < 0.0 {
            // bisection to high precision (60 halvings of the sample width)
            let (mut lo, mut hi) = (prev_t, t);
            let mut flo = prev_f;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_f = ft;
    }
    if prev_f == 0.0 {
        roots.push(b);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut merged: Vec<f64> = Vec::new();
    for r in roots {
        if merged.last().map_or(true, |&m| r - m > merge_tol) {
            merged.push(r);
        }
    }
    merged
}

/// Minimum and maximum of a nodal polynomial trace on `[a, b]` by dense
/// sampling (adequate for the low polynomial degrees used here).
pub fn trace_range(basis: &LagrangeBasis, values: &[f64], a: f64, b: f64) -> (f64, f64) {
    let nsamp = 128;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..=nsamp {
        let t = a + (b - a) * (k as f64) / (nsamp as f64);
        let v = basis.interpolate(values, t);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}
