//! Per-slab geometry pipeline: discrete level set, cut topology, reference
//! and mapped quadrature, and the mesh deformation. Slabs are independent
//! and are built in parallel.

use crate::cutgeom::{build_quadrature, classify, CutTopology, SpaceTimeQuadrature};
use crate::error::Result;
use crate::levelset::{interpolate_levelset, DiscreteLevelSet, ProblemData};
use crate::mapping::{build_mapping, physical_quadrature, GeometryMapping, PhysicalQuadrature};
use crate::meshtime::{BackgroundMesh, TimePartition};
use crate::par::maybe_par_map;

/// Discretization parameters shared by all slabs.
#[derive(Debug, Clone)]
pub struct Discretization {
    /// Solution orders (space, time).
    pub k_s: usize,
    pub k_t: usize,
    /// Geometry approximation orders (space, time).
    pub q_s: usize,
    pub q_t: usize,
    /// Ghost-penalty parameter gamma_J (the assembled factor additionally
    /// carries (1 + dt/h)).
    pub gamma_j: f64,
    /// Quadrature exactness degree per direction.
    pub quad_order: usize,
    /// Apply the isoparametric deformation (reference-geometry mode off).
    pub deform: bool,
}

impl Discretization {
    pub fn new(k_s: usize, k_t: usize, q_s: usize, q_t: usize) -> Self {
        let m = k_s.max(k_t).max(q_s).max(q_t);
        Self {
            k_s,
            k_t,
            q_s,
            q_t,
            gamma_j: 1.0,
            quad_order: 2 * m + 2,
            deform: true,
        }
    }

    pub fn with_gamma(mut self, gamma_j: f64) -> Self {
        self.gamma_j = gamma_j;
        self
    }

    pub fn with_quad_order(mut self, order: usize) -> Self {
        self.quad_order = order;
        self
    }

    pub fn without_deformation(mut self) -> Self {
        self.deform = false;
        self
    }
}

/// Geometry data of one slab.
#[derive(Debug, Clone)]
pub struct SlabGeometry {
    pub levelset: DiscreteLevelSet,
    pub topology: CutTopology,
    pub quad: SpaceTimeQuadrature,
    pub mapping: GeometryMapping,
    pub phys: PhysicalQuadrature,
}

/// Build the geometry of every slab (in parallel when enabled).
pub fn build_geometry(
    problem: &ProblemData,
    mesh: &BackgroundMesh,
    time: &TimePartition,
    disc: &Discretization,
) -> Result<Vec<SlabGeometry>> {
    let levelsets = interpolate_levelset(problem, mesh, time, disc.q_s, disc.q_t);
    let results = maybe_par_map(time.n_slabs, |n| -> Result<SlabGeometry> {
        let levelset = levelsets[n].clone();
        let topology = classify(&levelset, mesh, n)?;
        let quad = build_quadrature(&topology, &levelset, mesh, disc.quad_order)?;
        let mapping = build_mapping(&levelset, &topology, mesh, disc.deform)?;
        let phys = physical_quadrature(&mapping, &quad)?;
        Ok(SlabGeometry {
            levelset,
            topology,
            quad,
            mapping,
            phys,
        })
    });
    results.into_iter().collect()
}
