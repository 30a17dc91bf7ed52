//! Isoparametric space-time mesh deformation with smooth blending, the
//! mapped (physical) quadrature rules, and the exact-level-set lifting used
//! for error measurement.

use crate::cutgeom::{CutTopology, ElementMarker, SpaceTimeQuadrature};
use crate::error::{Error, Result};
use crate::lagrange::LagrangeBasis;
use crate::levelset::{DiscreteLevelSet, ProblemData};
use crate::meshtime::BackgroundMesh;

/// C1 decay profile: 1 at s=0, 0 at s=1, zero slope at both ends.
fn hermite_decay(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        2.0 * s * s * s - 3.0 * s * s + 1.0
    }
}

fn hermite_decay_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        6.0 * s * s - 6.0 * s
    }
}

/// Displacement representation of one element.
#[derive(Debug, Clone)]
enum ElemDisp {
    Zero,
    /// Nodal values at the element's spatial nodes x temporal nodes.
    Nodal(Vec<Vec<f64>>),
    /// One-ring blending: vertex displacements decaying through the Hermite
    /// profile; `left[m]`/`right[m]` are the values at the left/right vertex
    /// per temporal node.
    Ring { left: Vec<f64>, right: Vec<f64> },
}

/// The slab-wise space-time deformation Theta(x, t) = x + D(x, t).
#[derive(Debug, Clone)]
pub struct GeometryMapping {
    pub slab: usize,
    pub t_begin: f64,
    pub t_end: f64,
    pub time_basis: LagrangeBasis,
    space_basis: Vec<LagrangeBasis>,
    disp: Vec<ElemDisp>,
    mesh_a: f64,
    mesh_b: f64,
    n_elements: usize,
    pub identity: bool,
}

impl GeometryMapping {
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    fn elem_of(&self, x: f64) -> usize {
        let n = self.n_elements;
        if x <= self.mesh_a {
            return 0;
        }
        if x >= self.mesh_b {
            return n - 1;
        }
        (((x - self.mesh_a) / (self.mesh_b - self.mesh_a) * n as f64) as usize).min(n - 1)
    }

    fn elem_bounds(&self, e: usize) -> (f64, f64) {
        let len = (self.mesh_b - self.mesh_a) / self.n_elements as f64;
        let xl = self.mesh_a + e as f64 * len;
        (xl, xl + len)
    }

    /// Displacement and its x/t derivatives on element e at (x, t).
    fn disp_at(&self, e: usize, x: f64, t: f64) -> (f64, f64, f64) {
        match &self.disp[e] {
            ElemDisp::Zero => (0.0, 0.0, 0.0),
            ElemDisp::Nodal(values) => {
                let sv = self.space_basis[e].eval(x);
                let sdv = self.space_basis[e].eval_deriv(x);
                let tv = self.time_basis.eval(t);
                let tdv = self.time_basis.eval_deriv(t);
                let (mut d, mut dx, mut dt) = (0.0, 0.0, 0.0);
                for (i, row) in values.iter().enumerate() {
                    for (m, &v) in row.iter().enumerate() {
                        d += v * sv[i] * tv[m];
                        dx += v * sdv[i] * tv[m];
                        dt += v * sv[i] * tdv[m];
                    }
                }
                (d, dx, dt)
            }
            ElemDisp::Ring { left, right } => {
                let (xl, xr) = self.elem_bounds(e);
                let len = xr - xl;
                let s_l = (x - xl) / len;
                let s_r = (xr - x) / len;
                let tv = self.time_basis.eval(t);
                let tdv = self.time_basis.eval_deriv(t);
                let dl: f64 = tv.iter().zip(left).map(|(a, b)| a * b).sum();
                let dr: f64 = tv.iter().zip(right).map(|(a, b)| a * b).sum();
                let dl_t: f64 = tdv.iter().zip(left).map(|(a, b)| a * b).sum();
                let dr_t: f64 = tdv.iter().zip(right).map(|(a, b)| a * b).sum();
                let d = dl * hermite_decay(s_l) + dr * hermite_decay(s_r);
                let dx = dl * hermite_decay_deriv(s_l) / len - dr * hermite_decay_deriv(s_r) / len;
                let dt = dl_t * hermite_decay(s_l) + dr_t * hermite_decay(s_r);
                (d, dx, dt)
            }
        }
    }

    /// Theta(x, t) with x located in element e.
    pub fn theta_on(&self, e: usize, x: f64, t: f64) -> f64 {
        x + self.disp_at(e, x, t).0
    }

    /// Theta(x, t), locating the element from x.
    pub fn theta(&self, x: f64, t: f64) -> f64 {
        self.theta_on(self.elem_of(x), x, t)
    }

    /// Spatial derivative of Theta on element e.
    pub fn theta_dx(&self, e: usize, x: f64, t: f64) -> f64 {
        1.0 + self.disp_at(e, x, t).1
    }

    /// Temporal derivative of Theta on element e.
    pub fn theta_dt(&self, e: usize, x: f64, t: f64) -> f64 {
        self.disp_at(e, x, t).2
    }

    /// Preimage of physical x at time t by per-element Newton.
    pub fn preimage(&self, x: f64, t: f64) -> Result<f64> {
        if self.identity {
            return Ok(x);
        }
        let mut xi = x;
        let tol = 1e-12 * (self.mesh_b - self.mesh_a).max(1.0);
        for _ in 0..60 {
            let e = self.elem_of(xi);
            let r = self.theta_on(e, xi, t) - x;
            if r.abs() <= tol {
                return Ok(xi);
            }
            let slope = self.theta_dx(e, xi, t);
            if slope.abs() < 1e-14 {
                break;
            }
            xi -= r / slope;
        }
        let e = self.elem_of(xi);
        if (self.theta_on(e, xi, t) - x).abs() <= 1e-10 {
            Ok(xi)
        } else {
            Err(Error::Preimage { x, t })
        }
    }

    /// Mesh velocity at physical (x, t): time derivative of the deformation
    /// evaluated at the preimage point.
    pub fn mesh_velocity(&self, x: f64, t: f64) -> Result<f64> {
        let xi = self.preimage(x, t)?;
        let e = self.elem_of(xi);
        Ok(self.theta_dt(e, xi, t))
    }

    /// Extended-polynomial mapping of element e (the element polynomial
    /// evaluated beyond its support), used by the ghost-penalty jump.
    pub fn theta_extended(&self, e: usize, x: f64, t: f64) -> f64 {
        match &self.disp[e] {
            ElemDisp::Zero => x,
            _ => x + self.disp_at(e, x, t).0,
        }
    }

    /// Invert the extended mapping of element e at physical x by Newton
    /// started from `guess` (the own-side reference coordinate selects the
    /// near-identity branch), with a bracketed bisection fallback around the
    /// guess. Fails when the extension does not attain x nearby, which
    /// happens when the displacement is large relative to the element size.
    pub fn theta_extended_inverse(&self, e: usize, x: f64, t: f64, guess: f64) -> Result<f64> {
        if matches!(self.disp[e], ElemDisp::Zero) {
            return Ok(x);
        }
        let mut xi = guess;
        let tol = 1e-13 * (self.mesh_b - self.mesh_a).max(1.0);
        for _ in 0..60 {
            let r = self.theta_extended(e, xi, t) - x;
            if r.abs() <= tol {
                return Ok(xi);
            }
            let slope = 1.0 + self.disp_at(e, xi, t).1;
            if slope.abs() < 1e-14 {
                break;
            }
            xi -= r / slope;
        }
        // bracketed bisection around the guess
        let len = (self.mesh_b - self.mesh_a) / self.n_elements as f64;
        let (lo, hi) = (guess - len, guess + len);
        let g = |y: f64| self.theta_extended(e, y, t) - x;
        let n = 64;
        let mut prev = lo;
        let mut fprev = g(prev);
        for k in 1..=n {
            let yk = lo + (hi - lo) * k as f64 / n as f64;
            let f = g(yk);
            if fprev * f <= 0.0 {
                let (mut a, mut b, mut fa) = (prev, yk, fprev);
                for _ in 0..100 {
                    let mid = 0.5 * (a + b);
                    let fm = g(mid);
                    if fm.abs() <= tol {
                        return Ok(mid);
                    }
                    if fa * fm <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                return Ok(0.5 * (a + b));
            }
            prev = yk;
            fprev = f;
        }
        Err(Error::Preimage { x, t })
    }
}

/// Solve phi_h(y, t) = target near x by safeguarded Newton with a bisection
/// fallback on a bracket inside [lo, hi].
fn solve_levelset_root(
    levelset: &DiscreteLevelSet,
    mesh: &BackgroundMesh,
    x0: f64,
    t: f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let g = |y: f64| levelset.eval_high(mesh.element_of(y), y, t) - target;
    let dg = |y: f64| levelset.eval_high_dx(mesh.element_of(y), y, t);
    let scale = target.abs().max(1.0);
    let tol = 1e-13 * scale;
    let mut y = x0;
    for _ in 0..50 {
        let r = g(y);
        if r.abs() <= tol && y >= lo && y <= hi {
            return Some(y);
        }
        let d = dg(y);
        if d.abs() < 1e-14 {
            break;
        }
        let step = r / d;
        y -= step;
        if !(lo - 1e-12..=hi + 1e-12).contains(&y) {
            break;
        }
        if step.abs() < 1e-15 * (hi - lo).max(1.0) && r.abs() <= 10.0 * tol {
            return Some(y);
        }
    }
    // bisection fallback on a scanned bracket
    let n = 64;
    let mut prev = lo;
    let mut fprev = g(prev);
    for k in 1..=n {
        let yk = lo + (hi - lo) * k as f64 / n as f64;
        let f = g(yk);
        if fprev == 0.0 {
            return Some(prev);
        }
        if fprev * f < 0.0 {
            let (mut a, mut b, mut fa) = (prev, yk, fprev);
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                let fm = g(mid);
                if fm.abs() <= tol {
                    return Some(mid);
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = yk;
        fprev = f;
    }
    None
}

/// Construct the slab deformation. At each temporal interpolation node the
/// spatial isoparametric construction is applied to the elements that are
/// spatially cut at that node: for each of their spatial nodes x the scalar
/// root problem `phi_h(y, t_m) = phi^lin(x, t_m)` is solved near x and the
/// displacement y - x recorded. Per node, non-cut neighbors receive the
/// shared-vertex value decayed by a C1 Hermite profile; everything else is
/// zero. The temporal shape interpolates the per-node data in P^{q_t}, and
/// slab continuity holds because t_n is a shared node. With `deform = false`
/// (or q_s = 1, where the two interpolants coincide) the mapping is the
/// identity.
pub fn build_mapping(
    levelset: &DiscreteLevelSet,
    topology: &CutTopology,
    mesh: &BackgroundMesh,
    deform: bool,
) -> Result<GeometryMapping> {
    let n_elem = mesh.n_elements();
    let time_basis = levelset.time_basis.clone();
    let space_basis = levelset.space_basis.clone();
    let n_time = time_basis.len();
    let mut disp = vec![ElemDisp::Zero; n_elem];

    if deform && levelset.q_s > 1 {
        // Displacement band per temporal node: the elements spatially cut at
        // that node plus a one-element margin. The band depends only on data
        // at the node time, so adjacent slabs (which share the node t_n)
        // build identical columns there and the mapping stays continuous
        // across slabs. The margin covers every element the interface visits
        // during the slab as long as it travels at most one element per slab.
        let mut band = vec![vec![false; n_time]; n_elem];
        for e in 0..n_elem {
            for m in 0..n_time {
                let vl = levelset.vertex_values[e][m];
                let vr = levelset.vertex_values[e + 1][m];
                if vl * vr < 0.0 {
                    band[e][m] = true;
                    if e > 0 {
                        band[e - 1][m] = true;
                    }
                    if e + 1 < n_elem {
                        band[e + 1][m] = true;
                    }
                }
            }
        }
        for e in 0..n_elem {
            if band[e].iter().all(|b| !b) {
                continue;
            }
            let (xl, xr) = mesh.element(e);
            let len = xr - xl;
            let mut values = vec![vec![0.0; n_time]; levelset.elem_nodes[e].len()];
            for (m, &tm) in time_basis.nodes.iter().enumerate() {
                if !band[e][m] {
                    continue;
                }
                let vl = levelset.vertex_values[e][m];
                let vr = levelset.vertex_values[e + 1][m];
                for (i, &x) in levelset.elem_nodes[e].iter().enumerate() {
                    let target = vl + (x - xl) / len * (vr - vl);
                    let y = solve_levelset_root(
                        levelset,
                        mesh,
                        x,
                        tm,
                        target,
                        (x - len).max(mesh.a),
                        (x + len).min(mesh.b),
                    )
                    .ok_or(Error::GeometryConstruction {
                        slab: topology.slab,
                        element: e,
                        t: tm,
                        reason: "level-set root search did not converge".into(),
                    })?;
                    if (y - x).abs() > len {
                        return Err(Error::GeometryConstruction {
                            slab: topology.slab,
                            element: e,
                            t: tm,
                            reason: format!(
                                "root y = {y} outside one-element neighborhood of x = {x}"
                            ),
                        });
                    }
                    values[i][m] = y - x;
                }
            }
            disp[e] = ElemDisp::Nodal(values);
        }
        // one-ring blending from the shared-vertex values of cut neighbors.
        // With nodal level-set interpolation the vertex displacements vanish
        // identically (both interpolants share the vertex data); the blending
        // keeps the construction valid for ingested level sets where they
        // may not.
        let vertex_disp = |disp: &[ElemDisp], e: usize, left_vertex: bool| -> Option<Vec<f64>> {
            match &disp[e] {
                ElemDisp::Nodal(values) => {
                    if left_vertex {
                        values.first().cloned()
                    } else {
                        values.last().cloned()
                    }
                }
                _ => None,
            }
        };
        let mut ring: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
        for e in 0..n_elem {
            if matches!(disp[e], ElemDisp::Nodal(_)) {
                continue;
            }
            let left = if e > 0 {
                vertex_disp(&disp, e - 1, false)
            } else {
                None
            };
            let right = if e + 1 < n_elem {
                vertex_disp(&disp, e + 1, true)
            } else {
                None
            };
            if left.is_some() || right.is_some() {
                let left = left.unwrap_or_else(|| vec![0.0; n_time]);
                let right = right.unwrap_or_else(|| vec![0.0; n_time]);
                if left.iter().chain(&right).any(|v| v.abs() > 0.0) {
                    ring.push((e, left, right));
                }
            }
        }
        for (e, left, right) in ring {
            disp[e] = ElemDisp::Ring { left, right };
        }
    }

    let identity = disp.iter().all(|d| match d {
        ElemDisp::Zero => true,
        ElemDisp::Nodal(v) => v.iter().flatten().all(|x| *x == 0.0),
        ElemDisp::Ring { left, right } => {
            left.iter().all(|x| *x == 0.0) && right.iter().all(|x| *x == 0.0)
        }
    });

    Ok(GeometryMapping {
        slab: topology.slab,
        t_begin: levelset.t_begin,
        t_end: levelset.t_end,
        time_basis,
        space_basis,
        disp,
        mesh_a: mesh.a,
        mesh_b: mesh.b,
        n_elements: n_elem,
        identity,
    })
}

/// A mapped volume point; `w` includes the Jacobian, `xref` is kept for
/// pull-back evaluation of discrete functions.
#[derive(Debug, Clone, Copy)]
pub struct PhysVolumePoint {
    pub elem: usize,
    pub xref: f64,
    pub t: f64,
    pub x: f64,
    pub w: f64,
    pub jac: f64,
}

/// A mapped lateral-boundary point with the discrete interface speed.
#[derive(Debug, Clone, Copy)]
pub struct PhysBoundaryPoint {
    pub elem: usize,
    pub xref: f64,
    pub t: f64,
    pub x: f64,
    pub w: f64,
    /// Outward spatial normal (+1/-1) of the inside region.
    pub normal: f64,
    /// Velocity of the mapped interface point, d/dt Theta(x_Gamma(t), t).
    pub speed: f64,
}

/// A mapped fixed-time slice point; `w` includes the Jacobian.
#[derive(Debug, Clone, Copy)]
pub struct PhysSlicePoint {
    pub elem: usize,
    pub xref: f64,
    pub x: f64,
    pub w: f64,
}

/// Mapped quadrature rules of one slab.
#[derive(Debug, Clone)]
pub struct PhysicalQuadrature {
    pub slab: usize,
    pub volume: Vec<PhysVolumePoint>,
    pub boundary: Vec<PhysBoundaryPoint>,
    pub slice_bottom: Vec<PhysSlicePoint>,
    pub slice_top: Vec<PhysSlicePoint>,
}

/// Push the reference rules through the mapping, scaling weights by the
/// (positive) Jacobian and attaching interface velocities.
pub fn physical_quadrature(
    map: &GeometryMapping,
    quad: &SpaceTimeQuadrature,
) -> Result<PhysicalQuadrature> {
    let mut volume = Vec::with_capacity(quad.volume.len());
    for p in &quad.volume {
        let jac = map.theta_dx(p.elem, p.x, p.t);
        if jac <= 0.0 {
            return Err(Error::NonpositiveJacobian {
                slab: quad.slab,
                element: p.elem,
                value: jac,
            });
        }
        volume.push(PhysVolumePoint {
            elem: p.elem,
            xref: p.x,
            t: p.t,
            x: map.theta_on(p.elem, p.x, p.t),
            w: p.w * jac,
            jac,
        });
    }
    let mut boundary = Vec::with_capacity(quad.boundary.len());
    for p in &quad.boundary {
        let jac = map.theta_dx(p.elem, p.x, p.t);
        if jac <= 0.0 {
            return Err(Error::NonpositiveJacobian {
                slab: quad.slab,
                element: p.elem,
                value: jac,
            });
        }
        boundary.push(PhysBoundaryPoint {
            elem: p.elem,
            xref: p.x,
            t: p.t,
            x: map.theta_on(p.elem, p.x, p.t),
            w: p.w,
            normal: p.normal,
            speed: jac * p.xdot + map.theta_dt(p.elem, p.x, p.t),
        });
    }
    let map_slice = |pts: &[crate::cutgeom::SlicePoint], t: f64| -> Result<Vec<PhysSlicePoint>> {
        pts.iter()
            .map(|p| {
                let jac = map.theta_dx(p.elem, p.x, t);
                if jac <= 0.0 {
                    return Err(Error::NonpositiveJacobian {
                        slab: quad.slab,
                        element: p.elem,
                        value: jac,
                    });
                }
                Ok(PhysSlicePoint {
                    elem: p.elem,
                    xref: p.x,
                    x: map.theta_on(p.elem, p.x, t),
                    w: p.w * jac,
                })
            })
            .collect()
    };
    Ok(PhysicalQuadrature {
        slab: quad.slab,
        volume,
        boundary,
        slice_bottom: map_slice(&quad.slice_bottom, map.t_begin)?,
        slice_top: map_slice(&quad.slice_top, map.t_end)?,
    })
}

/// Reference interface positions of a slab at time t: (element, x, normal).
pub fn reference_interfaces(
    levelset: &DiscreteLevelSet,
    mesh: &BackgroundMesh,
    topology: &CutTopology,
    t: f64,
) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for &e in &topology.active {
        if topology.markers[e] != ElementMarker::Cut {
            continue;
        }
        let (xl, xr) = mesh.element(e);
        let (vl, vr) = levelset.lin_endpoints(e, t);
        if vl < 0.0 && vr > 0.0 {
            out.push((e, xl + (xr - xl) * vl / (vl - vr), 1.0));
        } else if vl > 0.0 && vr < 0.0 {
            out.push((e, xl + (xr - xl) * vl / (vl - vr), -1.0));
        }
    }
    out
}

/// The lifting Phi from the discrete geometry to the exact one: the
/// discrete interface point is carried onto the nearest exact root of phi,
/// the correction decays to zero through a C1 bump of one-element radius,
/// and Phi is the identity away from the interface. Composing the exact
/// solution with Phi gives the comparison field on the discrete domain.
pub struct ExactLifting<'a> {
    problem: &'a ProblemData,
    mesh: &'a BackgroundMesh,
    slabs: Vec<(&'a DiscreteLevelSet, &'a CutTopology, &'a GeometryMapping)>,
    /// Bump radius (one element).
    pub radius: f64,
}

impl<'a> ExactLifting<'a> {
    fn slab_of(&self, t: f64) -> usize {
        for (i, (ls, _, _)) in self.slabs.iter().enumerate() {
            if t <= ls.t_end || i == self.slabs.len() - 1 {
                if t >= ls.t_begin || i == 0 {
                    return i;
                }
            }
        }
        self.slabs.len() - 1
    }

    /// Mapped (physical) discrete interface points at time t with the
    /// matching exact roots; may be empty for fitted geometry.
    fn interface_pairs(&self, t: f64) -> Result<Vec<(f64, f64)>> {
        let (ls, topo, map) = &self.slabs[self.slab_of(t)];
        let mut out = Vec::new();
        for (e, xg, _) in reference_interfaces(ls, self.mesh, topo, t) {
            let xh = map.theta_on(e, xg, t);
            let p = self.exact_root_near(xh, t)?;
            out.push((xh, p));
        }
        Ok(out)
    }

    /// Nearest root of phi(., t) from x0 by Newton with bisection safeguard.
    fn exact_root_near(&self, x0: f64, t: f64) -> Result<f64> {
        let mut y = x0;
        for _ in 0..50 {
            let r = self.problem.phi(y, t);
            if r.abs() <= 1e-13 * self.problem.phi_x(y, t).abs().max(1.0) {
                return Ok(y);
            }
            let d = self.problem.phi_x(y, t);
            if d.abs() < 1e-14 {
                break;
            }
            y -= r / d;
            if (y - x0).abs() > 2.0 * self.radius {
                break;
            }
        }
        // bisection fallback around x0
        let (a, b) = (x0 - self.radius, x0 + self.radius);
        let n = 64;
        let mut prev = a;
        let mut fprev = self.problem.phi(prev, t);
        for k in 1..=n {
            let xk = a + (b - a) * k as f64 / n as f64;
            let f = self.problem.phi(xk, t);
            if fprev * f <= 0.0 && fprev != f {
                let (mut lo, mut hi, mut flo) = (prev, xk, fprev);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.problem.phi(mid, t);
                    if flo * fm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                return Ok(0.5 * (lo + hi));
            }
            prev = xk;
            fprev = f;
        }
        Err(Error::RootSearch {
            x: x0,
            t,
            reason: "no exact level-set root near the discrete interface".into(),
        })
    }

    /// Phi(x, t) and its spatial derivative.
    pub fn phi_map(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let mut value = x;
        let mut deriv = 1.0;
        for (xh, p) in self.interface_pairs(t)? {
            let s = (x - xh).abs() / self.radius;
            let chi = hermite_decay(s);
            let dchi = hermite_decay_deriv(s) * (x - xh).signum() / self.radius;
            value += chi * (p - xh);
            deriv += dchi * (p - xh);
        }
        Ok((value, deriv))
    }

    /// Lifted exact solution u^l(x, t) = u(Phi(x, t), t).
    pub fn lifted(&self, x: f64, t: f64) -> Result<f64> {
        let (y, _) = self.phi_map(x, t)?;
        Ok(self.problem.exact(y, t).expect("lifting needs an exact solution"))
    }

    /// Spatial derivative of the lifted solution.
    pub fn lifted_dx(&self, x: f64, t: f64) -> Result<f64> {
        let (y, dy) = self.phi_map(x, t)?;
        Ok(self.problem.exact_x(y, t).expect("lifting needs exact_x") * dy)
    }
}

/// Assemble the lifting from per-slab geometry.
pub fn build_lifting<'a>(
    problem: &'a ProblemData,
    mesh: &'a BackgroundMesh,
    slabs: Vec<(&'a DiscreteLevelSet, &'a CutTopology, &'a GeometryMapping)>,
) -> ExactLifting<'a> {
    ExactLifting {
        problem,
        mesh,
        slabs,
        radius: mesh.h,
    }
}
