//! Discrete norms, error evaluation against the lifted exact solution, and
//! EOC helpers.

use nalgebra::DVector;

use crate::discretization::SlabGeometry;
use crate::error::Result;
use crate::forms::{self, SlabMatrices};
use crate::mapping::ExactLifting;
use crate::meshtime::BackgroundMesh;
use crate::space::SlabSpace;

/// Squared components of the discrete norms. `dt_theta_sq` carries the dt
/// scaling, `l2_scaled_sq` the dt^{-1/2} scaling; the star-norm L2 exponent
/// is kept as displayed in the norm definition and stored separately so the
/// composites can be recombined.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormReport {
    /// ||grad u||^2 over the cut space-time volume.
    pub grad_sq: f64,
    /// dt * ||mesh time derivative of u||^2.
    pub dt_theta_sq: f64,
    /// ||u||^2 (unscaled).
    pub l2_sq: f64,
    /// dt^{-1/2} * ||u||^2.
    pub l2_scaled_sq: f64,
    /// DG jump part: sum ||[u]^n||^2 + ||u_+^0||^2 + ||u_-^N||^2.
    pub jump_sq: f64,
    /// Star jump part: sum over n of ||u_-^n||^2.
    pub star_jump_sq: f64,
    /// Ghost-penalty energy J(u, u).
    pub gp_sq: f64,
    /// Final-time L2 error ||u(T)||^2 on Omega^h(T).
    pub final_time_sq: f64,
}

impl NormReport {
    /// ||u||^2 = ||grad u||^2 + jump part (the coercivity norm).
    pub fn coercivity_sq(&self) -> f64 {
        self.grad_sq + self.jump_sq
    }

    pub fn coercivity_j_sq(&self) -> f64 {
        self.coercivity_sq() + self.gp_sq
    }

    /// Triple norm squared: dt ||d_t^Theta u||^2 + ||u||^2.
    pub fn triple_sq(&self) -> f64 {
        self.dt_theta_sq + self.coercivity_sq()
    }

    pub fn triple_j_sq(&self) -> f64 {
        self.triple_sq() + self.gp_sq
    }

    /// Star norm squared: dt^{-1/2} ||u||^2 + ||grad u||^2 + star jumps.
    pub fn star_sq(&self) -> f64 {
        self.l2_scaled_sq + self.grad_sq + self.star_jump_sq
    }

    pub fn star_j_sq(&self) -> f64 {
        self.star_sq() + self.gp_sq
    }

    pub fn triple(&self) -> f64 {
        self.triple_sq().sqrt()
    }

    pub fn triple_j(&self) -> f64 {
        self.triple_j_sq().sqrt()
    }

    pub fn final_time(&self) -> f64 {
        self.final_time_sq.sqrt()
    }
}

/// Norms of a discrete function given by per-slab coefficients.
pub fn compute_norms(
    spaces: &[SlabSpace],
    mats: &[SlabMatrices],
    u: &[DVector<f64>],
) -> NormReport {
    let dt = mats[0].dt;
    let mut grad_sq = 0.0;
    let mut l2_sq = 0.0;
    let mut dtt_sq = 0.0;
    for (n, s) in mats.iter().enumerate() {
        grad_sq += u[n].dot(&(&s.a_grad * &u[n]));
        l2_sq += u[n].dot(&(&s.m_cut * &u[n]));
        let du = spaces[n].apply_time_derivative(&u[n]);
        dtt_sq += du.dot(&(&s.m_cut * &du));
    }
    let last = mats.len() - 1;
    NormReport {
        grad_sq,
        dt_theta_sq: dt * dtt_sq,
        l2_sq,
        l2_scaled_sq: l2_sq / dt.sqrt(),
        jump_sq: forms::jump_sq(mats, u),
        star_jump_sq: forms::star_jump_sq(mats, u),
        gp_sq: forms::gp_global(mats, u, u),
        final_time_sq: u[last].dot(&(&mats[last].m_top * &u[last])),
    }
}

/// Mesh time derivative of a discrete slab function at a physical point:
/// the temporal derivative of the reference expansion at the preimage
/// (never the chain-rule sum, which would cancel catastrophically).
pub fn mesh_time_derivative(
    space: &SlabSpace,
    mesh: &BackgroundMesh,
    geo: &SlabGeometry,
    coeffs: &DVector<f64>,
    x: f64,
    t: f64,
) -> Result<f64> {
    let xi = geo.mapping.preimage(x, t)?;
    Ok(space.dt_ref(coeffs, mesh.element_of(xi), xi, t))
}

/// Norm components of the error e = u^l - u_h against the lifted exact
/// solution, evaluated pointwise at the physical quadrature points. The
/// mesh time derivative of the lifting is taken by central differences in
/// reference time coordinates (step 1e-6 dt); the ghost-penalty component
/// is J(u_h, u_h), a globally smooth lifting having zero patch jumps.
pub fn error_vs_exact(
    spaces: &[SlabSpace],
    mats: &[SlabMatrices],
    geometry: &[SlabGeometry],
    lifting: &ExactLifting,
    u: &[DVector<f64>],
) -> Result<NormReport> {
    let n_slabs = spaces.len();
    let dt = mats[0].dt;
    let fd = 1e-6 * dt;
    let mut grad_sq = 0.0;
    let mut l2_sq = 0.0;
    let mut dtt_sq = 0.0;
    for n in 0..n_slabs {
        let space = &spaces[n];
        let geo = &geometry[n];
        for p in &geo.phys.volume {
            let e_val = lifting.lifted(p.x, p.t)? - space.value_ref(&u[n], p.elem, p.xref, p.t);
            l2_sq += p.w * e_val * e_val;
            let e_grad =
                lifting.lifted_dx(p.x, p.t)? - space.dx_ref(&u[n], p.elem, p.xref, p.t) / p.jac;
            grad_sq += p.w * e_grad * e_grad;
            // d_t^Theta u^l by reference-time finite differences
            let tp = (p.t + fd).min(geo.mapping.t_end);
            let tm = (p.t - fd).max(geo.mapping.t_begin);
            let xp = geo.mapping.theta_on(p.elem, p.xref, tp);
            let xm = geo.mapping.theta_on(p.elem, p.xref, tm);
            let dt_lift = (lifting.lifted(xp, tp)? - lifting.lifted(xm, tm)?) / (tp - tm);
            let e_dtt = dt_lift - space.dt_ref(&u[n], p.elem, p.xref, p.t);
            dtt_sq += p.w * e_dtt * e_dtt;
        }
    }
    // trace terms at the slice times
    let mut jump_sq = 0.0;
    let mut star_jump_sq = 0.0;
    // initial trace ||e_+^0||^2
    {
        let space = &spaces[0];
        let geo = &geometry[0];
        let t0 = space.t_begin;
        for p in &geo.phys.slice_bottom {
            let e_val = lifting.lifted(p.x, t0)? - space.value_ref(&u[0], p.elem, p.xref, t0);
            jump_sq += p.w * e_val * e_val;
        }
    }
    // interior jumps ||[e]^n||^2 on the shared slice, via the upper slab's
    // bottom rule (both slabs' deformations agree there)
    for n in 0..n_slabs - 1 {
        let upper = &spaces[n + 1];
        let lower = &spaces[n];
        let geo = &geometry[n + 1];
        let tn = upper.t_begin;
        for p in &geo.phys.slice_bottom {
            let e_plus = lifting.lifted(p.x, tn)? - upper.value_ref(&u[n + 1], p.elem, p.xref, tn);
            let e_minus = lifting.lifted(p.x, tn)? - lower.value_ref(&u[n], p.elem, p.xref, tn);
            let d = e_plus - e_minus;
            jump_sq += p.w * d * d;
        }
    }
    // top traces ||e_-^n||^2 for n = 1..N and the final-time error
    let mut final_time_sq = 0.0;
    for n in 0..n_slabs {
        let space = &spaces[n];
        let geo = &geometry[n];
        let tn = space.t_end;
        let mut acc = 0.0;
        for p in &geo.phys.slice_top {
            let e_val = lifting.lifted(p.x, tn)? - space.value_ref(&u[n], p.elem, p.xref, tn);
            acc += p.w * e_val * e_val;
        }
        star_jump_sq += acc;
        if n == n_slabs - 1 {
            jump_sq += acc;
            final_time_sq = acc;
        }
    }
    Ok(NormReport {
        grad_sq,
        dt_theta_sq: dt * dtt_sq,
        l2_sq,
        l2_scaled_sq: l2_sq / dt.sqrt(),
        jump_sq,
        star_jump_sq,
        gp_sq: forms::gp_global(mats, u, u),
        final_time_sq,
    })
}

/// Experimental orders of convergence for a refinement family with ratio 2:
/// eoc[i] = log2(err[i] / err[i+1]).
pub fn eoc(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_geometry, Discretization};
    use crate::forms::assemble_all;
    use crate::levelset::{const_fitted, ms1, poly_fitted};
    use crate::mapping::build_lifting;
    use crate::meshtime::{build_mesh, build_time_partition};
    use crate::solver::{solve, SolveConfig, Variant};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    struct Setup {
        mesh: BackgroundMesh,
        spaces: Vec<SlabSpace>,
        mats: Vec<SlabMatrices>,
        geometry: Vec<SlabGeometry>,
    }

    fn setup(problem: &crate::levelset::ProblemData, n: usize, n_slabs: usize, k: (usize, usize)) -> Setup {
        let mesh = build_mesh(problem.background.0, problem.background.1, n).unwrap();
        let tp = build_time_partition(problem.t_end, n_slabs).unwrap();
        let disc = Discretization::new(k.0, k.1, 2, 2);
        let geometry = build_geometry(problem, &mesh, &tp, &disc).unwrap();
        let (spaces, mats) = assemble_all(problem, &mesh, &tp, &disc, &geometry).unwrap();
        Setup {
            mesh,
            spaces,
            mats,
            geometry,
        }
    }

    #[test]
    fn constant_norm_is_pure_trace() {
        let p = ms1();
        let s = setup(&p, 16, 4, (1, 1));
        let u: Vec<DVector<f64>> = s.spaces.iter().map(|sp| sp.interpolate(|_, _| 1.0)).collect();
        let r = compute_norms(&s.spaces, &s.mats, &u);
        assert!(r.grad_sq < 1e-18);
        assert!(r.dt_theta_sq < 1e-18);
        // the deformed-patch jump of a constant vanishes up to the round-off
        // of extrapolated basis evaluations
        assert!(r.gp_sq < 1e-12, "gp energy of constant: {}", r.gp_sq);
        // only first and last trace terms survive in the jump part
        let expect = s.mats[0].measure_bottom + s.mats[3].measure_top;
        assert_relative_eq!(r.jump_sq, expect, epsilon = 1e-10);
    }

    #[test]
    fn step_function_jump_measures_slice() {
        let p = ms1();
        let s = setup(&p, 16, 2, (1, 1));
        let u = vec![
            s.spaces[0].interpolate(|_, _| 1.0),
            s.spaces[1].interpolate(|_, _| 0.0),
        ];
        let r = compute_norms(&s.spaces, &s.mats, &u);
        // jump part = ||u_+^0||^2 + ||[u]^1||^2 + ||u_-^N||^2
        //           = |Omega(0)| + |Omega(t_1)| + 0
        let expect = s.mats[0].measure_bottom + s.mats[0].measure_top;
        assert_relative_eq!(r.jump_sq, expect, epsilon = 1e-10);
    }

    #[test]
    fn composites_and_homogeneity() {
        let p = ms1();
        let s = setup(&p, 16, 2, (2, 2));
        let mut rng = StdRng::seed_from_u64(1);
        let u: Vec<DVector<f64>> = s
            .spaces
            .iter()
            .map(|sp| DVector::from_fn(sp.dim(), |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let r = compute_norms(&s.spaces, &s.mats, &u);
        assert_relative_eq!(
            r.triple_j_sq(),
            r.triple_sq() + r.gp_sq,
            epsilon = 1e-14 * (1.0 + r.triple_j_sq())
        );
        assert!(r.triple_sq() >= r.coercivity_sq());
        // homogeneity: report(a u) = a^2 report(u) componentwise
        let a = 3.7;
        let ua: Vec<DVector<f64>> = u.iter().map(|c| c * a).collect();
        let ra = compute_norms(&s.spaces, &s.mats, &ua);
        for (x, y) in [
            (ra.grad_sq, r.grad_sq),
            (ra.dt_theta_sq, r.dt_theta_sq),
            (ra.l2_sq, r.l2_sq),
            (ra.jump_sq, r.jump_sq),
            (ra.star_jump_sq, r.star_jump_sq),
            (ra.gp_sq, r.gp_sq),
        ] {
            assert_relative_eq!(x, a * a * y, epsilon = 1e-9 * (1.0 + x.abs()));
        }
        // triangle inequality spot check for the triple-j norm
        let v: Vec<DVector<f64>> = s
            .spaces
            .iter()
            .map(|sp| DVector::from_fn(sp.dim(), |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let rv = compute_norms(&s.spaces, &s.mats, &v);
        let sum: Vec<DVector<f64>> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let rs = compute_norms(&s.spaces, &s.mats, &sum);
        assert!(rs.triple_j() <= r.triple_j() + rv.triple_j() + 1e-12);
    }

    #[test]
    fn mesh_time_derivative_cases() {
        let p = const_fitted();
        let s = setup(&p, 4, 1, (1, 1));
        let space = &s.spaces[0];
        let geo = &s.geometry[0];
        // identity mapping: u = t gives 1, u = x gives 0
        let ut = space.interpolate(|_, t| t);
        let ux = space.interpolate(|x, _| x);
        let d1 = mesh_time_derivative(space, &s.mesh, geo, &ut, 0.4, 0.2).unwrap();
        let d2 = mesh_time_derivative(space, &s.mesh, geo, &ux, 0.4, 0.2).unwrap();
        assert_relative_eq!(d1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(d2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mesh_time_derivative_moving_mapping() {
        // on a deformed slab, a reference-linear function has zero mesh
        // derivative although its fixed-x time derivative is nonzero
        let p = ms1();
        let s = setup(&p, 16, 4, (2, 2));
        let n = 1;
        let space = &s.spaces[n];
        let geo = &s.geometry[n];
        assert!(!geo.mapping.is_identity());
        let uhat = space.interpolate(|x, _| x); // reference-linear
        // pick a physical point on a deformed cut element
        let p0 = s.geometry[n]
            .phys
            .volume
            .iter()
            .find(|p| (p.jac - 1.0).abs() > 1e-8)
            .expect("deformed point");
        let d = mesh_time_derivative(space, &s.mesh, geo, &uhat, p0.x, p0.t).unwrap();
        assert!(d.abs() < 1e-10, "mesh derivative {d}");
        // fixed-x derivative is nonzero: compare values at two times
        let eps = 1e-5 * (space.t_end - space.t_begin);
        let v1 = crate::solver::eval_solution(space, &s.mesh, geo, &uhat, p0.x, p0.t - eps).unwrap();
        let v2 = crate::solver::eval_solution(space, &s.mesh, geo, &uhat, p0.x, p0.t + eps).unwrap();
        assert!(((v2 - v1) / (2.0 * eps)).abs() > 1e-4);
    }

    #[test]
    fn polynomial_solution_error_near_zero() {
        let p = poly_fitted();
        let mesh = build_mesh(0.0, 1.0, 4).unwrap();
        let tp = build_time_partition(0.5, 2).unwrap();
        let disc = Discretization::new(3, 1, 1, 1);
        let res = solve(&p, &mesh, &tp, &disc, &SolveConfig::new(Variant::Plain)).unwrap();
        let slabs: Vec<_> = res
            .geometry
            .iter()
            .map(|g| (&g.levelset, &g.topology, &g.mapping))
            .collect();
        let lifting = build_lifting(&p, &mesh, slabs);
        let u = res.coeff_refs();
        let r = error_vs_exact(&res.spaces, &res.mats, &res.geometry, &lifting, &u).unwrap();
        assert!(r.triple_j_sq().sqrt() < 1e-9, "error {}", r.triple_j_sq().sqrt());
        assert!(r.final_time() < 1e-10);
    }

    #[test]
    fn eoc_helper() {
        let e = eoc(&[1.0, 0.25, 0.0625]);
        assert_relative_eq!(e[0], 2.0);
        assert_relative_eq!(e[1], 2.0);
    }
}
