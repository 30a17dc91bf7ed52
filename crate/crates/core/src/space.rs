//! Slab-wise cut tensor-product finite element spaces: Lagrange P^{k_s} in
//! space on the active elements times Lagrange P^{k_t} on Gauss-Lobatto
//! nodes in time, with deterministic DOF numbering.

use nalgebra::DVector;

use crate::cutgeom::CutTopology;
use crate::error::{Error, Result};
use crate::lagrange::LagrangeBasis;
use crate::meshtime::BackgroundMesh;
use crate::quad1d::interpolation_nodes;

/// Tensor-product space of one slab. Spatial DOFs are numbered
/// element-major (left to right over the active set, shared vertices
/// counted once); each spatial DOF carries `k_t + 1` consecutive temporal
/// modes, so `dof(s, m) = s * (k_t + 1) + m`.
#[derive(Debug, Clone)]
pub struct SlabSpace {
    pub slab: usize,
    pub k_s: usize,
    pub k_t: usize,
    pub t_begin: f64,
    pub t_end: f64,
    pub time_basis: LagrangeBasis,
    /// Active elements (sorted).
    pub active: Vec<usize>,
    /// Per background element: spatial basis and global spatial DOF ids of
    /// its local nodes; `None` for inactive elements.
    elem_data: Vec<Option<(LagrangeBasis, Vec<usize>)>>,
    /// Coordinates of the global spatial DOFs.
    pub spatial_coords: Vec<f64>,
    /// Temporal differentiation matrix d[m][m'] = L_{m'}'(t_m).
    pub time_diff: Vec<Vec<f64>>,
}

impl SlabSpace {
    pub fn n_spatial(&self) -> usize {
        self.spatial_coords.len()
    }

    pub fn n_time(&self) -> usize {
        self.k_t + 1
    }

    pub fn dim(&self) -> usize {
        self.n_spatial() * self.n_time()
    }

    pub fn dof(&self, spatial: usize, mode: usize) -> usize {
        spatial * self.n_time() + mode
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.elem_data[e].is_some()
    }

    /// Spatial basis and global spatial DOFs of an active element.
    pub fn element(&self, e: usize) -> Option<(&LagrangeBasis, &[usize])> {
        self.elem_data[e]
            .as_ref()
            .map(|(b, d)| (b, d.as_slice()))
    }

    /// Value of the coefficient function at reference (x in element e, t);
    /// zero on inactive elements.
    pub fn value_ref(&self, coeffs: &DVector<f64>, e: usize, x: f64, t: f64) -> f64 {
        let Some((basis, dofs)) = self.element(e) else {
            return 0.0;
        };
        let sv = basis.eval(x);
        let tv = self.time_basis.eval(t);
        let mut acc = 0.0;
        for (i, &s) in dofs.iter().enumerate() {
            for m in 0..self.n_time() {
                acc += coeffs[self.dof(s, m)] * sv[i] * tv[m];
            }
        }
        acc
    }

    /// Spatial derivative in reference coordinates.
    pub fn dx_ref(&self, coeffs: &DVector<f64>, e: usize, x: f64, t: f64) -> f64 {
        let Some((basis, dofs)) = self.element(e) else {
            return 0.0;
        };
        let sv = basis.eval_deriv(x);
        let tv = self.time_basis.eval(t);
        let mut acc = 0.0;
        for (i, &s) in dofs.iter().enumerate() {
            for m in 0..self.n_time() {
                acc += coeffs[self.dof(s, m)] * sv[i] * tv[m];
            }
        }
        acc
    }

    /// Temporal derivative in reference coordinates (this is the mesh time
    /// derivative of the mapped function).
    pub fn dt_ref(&self, coeffs: &DVector<f64>, e: usize, x: f64, t: f64) -> f64 {
        let Some((basis, dofs)) = self.element(e) else {
            return 0.0;
        };
        let sv = basis.eval(x);
        let tv = self.time_basis.eval_deriv(t);
        let mut acc = 0.0;
        for (i, &s) in dofs.iter().enumerate() {
            for m in 0..self.n_time() {
                acc += coeffs[self.dof(s, m)] * sv[i] * tv[m];
            }
        }
        acc
    }

    /// Coefficients of the mesh time derivative: the temporal
    /// differentiation matrix applied per spatial DOF (the derivative of a
    /// slab function stays in the slab space).
    pub fn apply_time_derivative(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let nt = self.n_time();
        let mut out = DVector::zeros(coeffs.len());
        for s in 0..self.n_spatial() {
            for m in 0..nt {
                let mut acc = 0.0;
                for mp in 0..nt {
                    acc += self.time_diff[m][mp] * coeffs[self.dof(s, mp)];
                }
                out[self.dof(s, m)] = acc;
            }
        }
        out
    }

    /// Nodal interpolation of g(x, t) at (spatial node, time node) pairs.
    pub fn interpolate(&self, g: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim());
        for (s, &x) in self.spatial_coords.iter().enumerate() {
            for (m, &t) in self.time_basis.nodes.iter().enumerate() {
                c[self.dof(s, m)] = g(x, t);
            }
        }
        c
    }

    /// Coefficients of the constant-in-space function c(t) given by nodal
    /// values over the temporal nodes.
    pub fn constant_in_space(&self, values_at_tnodes: &[f64]) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim());
        for s in 0..self.n_spatial() {
            for m in 0..self.n_time() {
                c[self.dof(s, m)] = values_at_tnodes[m];
            }
        }
        c
    }
}

/// Build the slab space on the active element set of a cut topology.
pub fn build_space(
    topology: &CutTopology,
    mesh: &BackgroundMesh,
    k_s: usize,
    k_t: usize,
    t0: f64,
    t1: f64,
) -> Result<SlabSpace> {
    assert!(k_s >= 1, "spatial order must be >= 1");
    if topology.active.is_empty() {
        return Err(Error::EmptySlab {
            slab: topology.slab,
        });
    }
    let mut elem_data: Vec<Option<(LagrangeBasis, Vec<usize>)>> = vec![None; mesh.n_elements()];
    let mut spatial_coords: Vec<f64> = Vec::new();
    let mut prev_active: Option<usize> = None;
    for &e in &topology.active {
        let (xl, xr) = mesh.element(e);
        let nodes = interpolation_nodes(k_s, xl, xr);
        let mut dofs = Vec::with_capacity(nodes.len());
        for (i, &x) in nodes.iter().enumerate() {
            if i == 0 && prev_active == Some(e.wrapping_sub(1)) {
                // shared vertex with the previous active element
                let prev = elem_data[e - 1].as_ref().unwrap();
                dofs.push(*prev.1.last().unwrap());
            } else {
                spatial_coords.push(x);
                dofs.push(spatial_coords.len() - 1);
            }
        }
        elem_data[e] = Some((LagrangeBasis::new(nodes), dofs));
        prev_active = Some(e);
    }
    let time_basis = LagrangeBasis::new(interpolation_nodes(k_t, t0, t1));
    let time_diff = time_basis.diff_matrix();
    Ok(SlabSpace {
        slab: topology.slab,
        k_s,
        k_t,
        t_begin: t0,
        t_end: t1,
        time_basis,
        active: topology.active.clone(),
        elem_data,
        spatial_coords,
        time_diff,
    })
}

/// Split a slab function into its top-trace mean and the mean-free part:
/// `mean = (c . u) / measure`, `meanfree = u - mean * 1`.
pub fn mean_split(
    space: &SlabSpace,
    constraint: &DVector<f64>,
    measure_top: f64,
    coeffs: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    if measure_top <= 0.0 {
        return Err(Error::VanishingSliceMeasure { t: space.t_end });
    }
    let mean = constraint.dot(coeffs) / measure_top;
    let ones = space.constant_in_space(&vec![1.0; space.n_time()]);
    Ok((mean, coeffs - ones * mean))
}
