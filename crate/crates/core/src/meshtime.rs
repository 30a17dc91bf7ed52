//! Background spatial mesh, facet connectivity, and the uniform time
//! partition, plus the mesh/time-step compatibility checks.

use crate::error::{Error, Result};

/// Fixed 1D simplicial background mesh on (a, b).
///
/// Stores general intervals so graded meshes could be ingested later, but
/// the only generator builds uniform meshes.
#[derive(Debug, Clone)]
pub struct BackgroundMesh {
    pub a: f64,
    pub b: f64,
    /// Strictly increasing vertex coordinates; element i is
    /// `[vertices[i], vertices[i+1]]`.
    pub vertices: Vec<f64>,
    /// Maximum element length.
    pub h: f64,
}

impl BackgroundMesh {
    pub fn n_elements(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.vertices[e], self.vertices[e + 1])
    }

    pub fn element_len(&self, e: usize) -> f64 {
        self.vertices[e + 1] - self.vertices[e]
    }

    /// Interior facets as vertex indices (1..n_vertices-1); facet f sits at
    /// `vertices[f]` between elements f-1 and f.
    pub fn interior_facets(&self) -> impl Iterator<Item = usize> {
        1..self.vertices.len() - 1
    }

    /// The two elements adjacent to interior facet `f`.
    pub fn facet_elements(&self, f: usize) -> (usize, usize) {
        debug_assert!(f >= 1 && f < self.vertices.len() - 1);
        (f - 1, f)
    }

    /// Element containing x (clamped to the mesh range).
    pub fn element_of(&self, x: f64) -> usize {
        let n = self.n_elements();
        if x <= self.a {
            return 0;
        }
        if x >= self.b {
            return n - 1;
        }
        // uniform generator => direct index; fall back to search for safety
        let guess = ((x - self.a) / (self.b - self.a) * n as f64) as usize;
        let guess = guess.min(n - 1);
        if self.vertices[guess] <= x && x <= self.vertices[guess + 1] {
            return guess;
        }
        match self
            .vertices
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }
}

/// Build a uniform mesh with `n_elements` elements on (a, b).
pub fn build_mesh(a: f64, b: f64, n_elements: usize) -> Result<BackgroundMesh> {
    if n_elements == 0 {
        return Err(Error::InvalidMesh("n_elements must be >= 1".into()));
    }
    if !(a < b) {
        return Err(Error::InvalidMesh(format!("need a < b, got a={a}, b={b}")));
    }
    let n = n_elements;
    let vertices: Vec<f64> = (0..=n)
        .map(|i| a + (b - a) * (i as f64) / (n as f64))
        .collect();
    let h = (0..n)
        .map(|i| vertices[i + 1] - vertices[i])
        .fold(0.0f64, f64::max);
    Ok(BackgroundMesh { a, b, vertices, h })
}

/// Uniform partition of [0, T] into slabs I_n = (t_{n-1}, t_n].
#[derive(Debug, Clone)]
pub struct TimePartition {
    pub t_end: f64,
    pub n_slabs: usize,
    pub dt: f64,
}

impl TimePartition {
    /// Slab n (0-based) as the half-open interval (t_n, t_{n+1}].
    pub fn slab(&self, n: usize) -> (f64, f64) {
        (self.time(n), self.time(n + 1))
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_slabs {
            self.t_end
        } else {
            self.dt * i as f64
        }
    }
}

/// Build a uniform time partition with `n_slabs` slabs of width T/n.
pub fn build_time_partition(t_end: f64, n_slabs: usize) -> Result<TimePartition> {
    if n_slabs == 0 {
        return Err(Error::InvalidTimePartition("n_slabs must be >= 1".into()));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidTimePartition(format!(
            "T_end must be positive, got {t_end}"
        )));
    }
    Ok(TimePartition {
        t_end,
        n_slabs,
        dt: t_end / n_slabs as f64,
    })
}

/// Result of the mesh/time-step compatibility checks. The solver warns on
/// failures but never silently proceeds.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// h^2 <= c_parabolic * dt
    pub parabolic_ok: bool,
    /// dt^{q_t+1} <= c_aniso * h^{3/2}
    pub anisotropy_ok: bool,
    pub messages: Vec<String>,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.parabolic_ok && self.anisotropy_ok
    }
}

/// Check the time-step/mesh-size couplings `h^2 <= c_parabolic * dt` and
/// `dt^{q_t+1} <= c_aniso * h^{1.5}`.
pub fn check_assumptions(
    h: f64,
    dt: f64,
    q_t: usize,
    c_parabolic: f64,
    c_aniso: f64,
) -> AssumptionReport {
    let mut messages = Vec::new();
    let parabolic_ok = h * h <= c_parabolic * dt;
    if !parabolic_ok {
        messages.push(format!(
            "h^2 = {:.3e} exceeds {c_parabolic} * dt = {:.3e}",
            h * h,
            c_parabolic * dt
        ));
    }
    let anisotropy_ok = dt.powi(q_t as i32 + 1) <= c_aniso * h.powf(1.5);
    if !anisotropy_ok {
        messages.push(format!(
            "dt^(q_t+1) = {:.3e} exceeds {c_aniso} * h^1.5 = {:.3e}",
            dt.powi(q_t as i32 + 1),
            c_aniso * h.powf(1.5)
        ));
    }
    AssumptionReport {
        parabolic_ok,
        anisotropy_ok,
        messages,
    }
}
