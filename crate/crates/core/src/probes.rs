//! Numerical stability probes: extremal constants of the ghost-penalty
//! lemmas and the trace inequality via small generalized eigenproblems, and
//! the inf-sup constant of the stabilized form on the mean-free subspace.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::cutgeom::full_prism_rule;
use crate::discretization::SlabGeometry;
use crate::error::{Error, Result};
use crate::forms::SlabMatrices;
use crate::meshtime::BackgroundMesh;
use crate::space::SlabSpace;

/// Largest eigenvalue of the pencil A u = lambda B u for symmetric A and
/// symmetric positive semidefinite B. The kernel of B is deflated: the
/// ratio is maximized over the range of B (eigendirections with relative
/// eigenvalue above 1e-11).
pub fn generalized_max_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    let bs = 0.5 * (b + b.transpose());
    let asym = 0.5 * (a + a.transpose());
    let eig = nalgebra::SymmetricEigen::new(bs);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    if lmax <= 0.0 {
        return Err(Error::EigenProbe("RHS matrix is zero".into()));
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > 1e-11 * lmax)
        .collect();
    if keep.is_empty() {
        return Err(Error::EigenProbe("RHS matrix numerically zero".into()));
    }
    // V D^{-1/2}: map to coordinates where B restricted is the identity
    let mut v = DMatrix::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        v.set_column(j, &(eig.eigenvectors.column(i) / scale));
    }
    let reduced = v.transpose() * asym * &v;
    let eig2 = nalgebra::SymmetricEigen::new(reduced);
    Ok(eig2.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)))
}

/// Offsets of the slab blocks in the concatenated global vector.
pub fn block_offsets(mats: &[SlabMatrices]) -> Vec<usize> {
    let mut off = vec![0];
    for m in mats {
        off.push(off.last().unwrap() + m.dim);
    }
    off
}

fn scatter_diag(global: &mut DMatrix<f64>, block: &DMatrix<f64>, off: usize) {
    global
        .view_mut((off, off), (block.nrows(), block.ncols()))
        .add_assign_block(block);
}

trait AddBlock {
    fn add_assign_block(&mut self, b: &DMatrix<f64>);
}

impl AddBlock for nalgebra::DMatrixViewMut<'_, f64> {
    fn add_assign_block(&mut self, b: &DMatrix<f64>) {
        for j in 0..b.ncols() {
            for i in 0..b.nrows() {
                self[(i, j)] += b[(i, j)];
            }
        }
    }
}

/// Temporal differentiation as a (dim x dim) matrix of one slab.
pub fn time_diff_matrix(space: &SlabSpace) -> DMatrix<f64> {
    let dim = space.dim();
    let nt = space.n_time();
    let mut d = DMatrix::zeros(dim, dim);
    for s in 0..space.n_spatial() {
        for m in 0..nt {
            for mp in 0..nt {
                d[(space.dof(s, m), space.dof(s, mp))] = space.time_diff[m][mp];
            }
        }
    }
    d
}

/// Global matrix of the stabilized upwind form B_h + J (block bidiagonal).
pub fn global_bh_plus_j(mats: &[SlabMatrices]) -> DMatrix<f64> {
    let off = block_offsets(mats);
    let dim = *off.last().unwrap();
    let mut a = DMatrix::zeros(dim, dim);
    for (n, s) in mats.iter().enumerate() {
        let blk = &s.a_conv + &s.a_grad + &s.m_bottom + &s.a_gp;
        scatter_diag(&mut a, &blk, off[n]);
        if let Some(c) = &s.coupling {
            let mut view = a.view_mut((off[n], off[n - 1]), (c.nrows(), c.ncols()));
            for j in 0..c.ncols() {
                for i in 0..c.nrows() {
                    view[(i, j)] -= c[(i, j)];
                }
            }
        }
    }
    a
}

/// Global Gram matrix of the triple norm (optionally with the GP part):
/// dt * (d_t u, d_t v) + (grad u, grad v) + DG jumps [+ J].
pub fn global_triple_gram(
    spaces: &[SlabSpace],
    mats: &[SlabMatrices],
    with_gp: bool,
) -> DMatrix<f64> {
    let off = block_offsets(mats);
    let dim = *off.last().unwrap();
    let mut g = DMatrix::zeros(dim, dim);
    for (n, s) in mats.iter().enumerate() {
        let dmat = time_diff_matrix(&spaces[n]);
        let mut blk = s.dt * (dmat.transpose() * &s.m_cut * &dmat);
        blk += &s.a_grad;
        blk += &s.m_bottom;
        blk += &s.m_top;
        if with_gp {
            blk += &s.a_gp;
        }
        scatter_diag(&mut g, &blk, off[n]);
        if let Some(c) = &s.coupling {
            let mut v1 = g.view_mut((off[n], off[n - 1]), (c.nrows(), c.ncols()));
            for j in 0..c.ncols() {
                for i in 0..c.nrows() {
                    v1[(i, j)] -= c[(i, j)];
                }
            }
            let ct = c.transpose();
            let mut v2 = g.view_mut((off[n - 1], off[n]), (ct.nrows(), ct.ncols()));
            for j in 0..ct.ncols() {
                for i in 0..ct.nrows() {
                    v2[(i, j)] -= ct[(i, j)];
                }
            }
        }
    }
    g
}

/// Global lateral-boundary Gram matrix.
pub fn global_boundary_gram(mats: &[SlabMatrices]) -> DMatrix<f64> {
    let off = block_offsets(mats);
    let dim = *off.last().unwrap();
    let mut g = DMatrix::zeros(dim, dim);
    for (n, s) in mats.iter().enumerate() {
        scatter_diag(&mut g, &s.bdry_gram, off[n]);
    }
    g
}

/// Orthonormal basis of the global mean-free subspace: per slab, the
/// orthogonal complement of the constraint row (Householder construction).
pub fn meanfree_basis(mats: &[SlabMatrices]) -> DMatrix<f64> {
    let off = block_offsets(mats);
    let dim = *off.last().unwrap();
    let reduced: usize = mats.iter().map(|m| m.dim - 1).sum();
    let mut z = DMatrix::zeros(dim, reduced);
    let mut col = 0;
    for (n, s) in mats.iter().enumerate() {
        let c = &s.constraint;
        let d = s.dim;
        let mut v = c.clone();
        let norm = c.norm();
        v[0] += c[0].signum() * norm;
        let vn2 = v.dot(&v);
        // columns 1..d of H = I - 2 v v^T / (v^T v) span the complement
        for j in 1..d {
            for i in 0..d {
                let hij = (if i == j { 1.0 } else { 0.0 }) - 2.0 * v[i] * v[j] / vn2;
                z[(off[n] + i, col)] = hij;
            }
            col += 1;
        }
    }
    z
}

/// Project the per-slab mean of the top trace out of a global vector.
pub fn pi_tilde(mats: &[SlabMatrices], u: &[DVector<f64>]) -> Vec<DVector<f64>> {
    mats.iter()
        .zip(u)
        .map(|(s, c)| {
            let mean = s.constraint.dot(c) / s.measure_top;
            let ones = DVector::from_element(c.len(), mean);
            c - ones
        })
        .collect()
}

/// Mass and stiffness matrices over full (uncut) deformed prisms of the
/// given element set.
pub fn prism_mass_stiffness(
    space: &SlabSpace,
    geo: &SlabGeometry,
    mesh: &BackgroundMesh,
    elements: &[usize],
    order: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = space.dim();
    let nt = space.n_time();
    let mut mass = DMatrix::zeros(dim, dim);
    let mut stiff = DMatrix::zeros(dim, dim);
    let rule = full_prism_rule(elements, mesh, space.t_begin, space.t_end, order);
    for p in &rule {
        let Some((basis, sdofs)) = space.element(p.elem) else {
            continue;
        };
        let jac = geo.mapping.theta_dx(p.elem, p.x, p.t);
        let sv = basis.eval(p.x);
        let sdv = basis.eval_deriv(p.x);
        let tv = space.time_basis.eval(p.t);
        for (i_s, &gi) in sdofs.iter().enumerate() {
            for m in 0..nt {
                let row = space.dof(gi, m);
                let val_i = sv[i_s] * tv[m];
                let dx_i = sdv[i_s] * tv[m];
                for (j_s, &gj) in sdofs.iter().enumerate() {
                    for mm in 0..nt {
                        let col = space.dof(gj, mm);
                        mass[(row, col)] += p.w * jac * sv[j_s] * tv[mm] * val_i;
                        stiff[(row, col)] +=
                            p.w * (sdv[j_s] * tv[mm] / jac) * (dx_i / jac);
                    }
                }
            }
        }
    }
    (mass, stiff)
}

/// Extremal constants of the per-slab ghost-penalty lemmas, maximized over
/// slabs, plus the global time-derivative GP bound.
#[derive(Debug, Clone, Copy)]
pub struct GpProbeValues {
    /// ||u||^2_{Q_E} vs ||u||^2_{Q_I} + (h^2/gamma) j(u,u)
    pub l2_active_vs_interior: f64,
    /// ||grad u||^2_{Q_E} vs ||grad u||^2_{Q_I} + (1/gamma) j(u,u)
    pub h1_active_vs_interior: f64,
    /// slab-end traces vs (1/dt)(||u||^2_{Q_I} + (h^2/gamma) j(u,u))
    pub trace_vs_volume: f64,
    /// dt ||d_t u||^2_{Q_E} vs (1/dt)(||u||^2_{Q_I} + (h^2/gamma) j(u,u))
    pub dt_vs_volume: f64,
    /// dt^2 J(d_t u, d_t u) vs J(u,u) + gamma (h + dt) ||grad u||^2 (global)
    pub gp_dt_vs_gp: f64,
}

pub fn gp_probes(
    spaces: &[SlabSpace],
    mats: &[SlabMatrices],
    geometry: &[SlabGeometry],
    mesh: &BackgroundMesh,
    gamma_j: f64,
    order: usize,
) -> Result<GpProbeValues> {
    let h = mesh.h;
    let mut l2 = 0.0f64;
    let mut h1 = 0.0f64;
    let mut tr = 0.0f64;
    let mut dtv = 0.0f64;
    for (n, s) in mats.iter().enumerate() {
        let space = &spaces[n];
        let geo = &geometry[n];
        let dt = s.dt;
        let (m_active, k_active) =
            prism_mass_stiffness(space, geo, mesh, &geo.topology.active, order);
        let (m_interior, k_interior) =
            prism_mass_stiffness(space, geo, mesh, &geo.topology.interior, order);
        let rhs_l2 = &m_interior + &s.a_gp * (h * h / gamma_j);
        l2 = l2.max(generalized_max_eig(&m_active, &rhs_l2)?);
        let rhs_h1 = &k_interior + &s.a_gp * (1.0 / gamma_j);
        h1 = h1.max(generalized_max_eig(&k_active, &rhs_h1)?);
        let lhs_tr = &s.m_bottom + &s.m_top;
        let rhs_tr = &rhs_l2 * (1.0 / dt);
        tr = tr.max(generalized_max_eig(&lhs_tr, &rhs_tr)?);
        let dmat = time_diff_matrix(space);
        let lhs_dt = dt * (dmat.transpose() * &m_active * &dmat);
        dtv = dtv.max(generalized_max_eig(&lhs_dt, &rhs_tr)?);
    }
    // global time-derivative GP bound
    let off = block_offsets(mats);
    let dim = *off.last().unwrap();
    let mut lhs = DMatrix::zeros(dim, dim);
    let mut rhs = DMatrix::zeros(dim, dim);
    let dt = mats[0].dt;
    for (n, s) in mats.iter().enumerate() {
        let dmat = time_diff_matrix(&spaces[n]);
        let blk = dt * dt * (dmat.transpose() * &s.a_gp * &dmat);
        scatter_diag(&mut lhs, &blk, off[n]);
        let rblk = &s.a_gp + &s.a_grad * (gamma_j * (h + dt));
        scatter_diag(&mut rhs, &rblk, off[n]);
    }
    let gp_dt = generalized_max_eig(&lhs, &rhs)?;
    Ok(GpProbeValues {
        l2_active_vs_interior: l2,
        h1_active_vs_interior: h1,
        trace_vs_volume: tr,
        dt_vs_volume: dtv,
        gp_dt_vs_gp: gp_dt,
    })
}

/// Extremal constant of the special trace inequality on the mean-free
/// subspace: boundary energy against the triple norm.
pub fn trace_probe(spaces: &[SlabSpace], mats: &[SlabMatrices]) -> Result<f64> {
    let z = meanfree_basis(mats);
    let bg = global_boundary_gram(mats);
    let tg = global_triple_gram(spaces, mats, false);
    let a = z.transpose() * bg * &z;
    let b = z.transpose() * tg * &z;
    generalized_max_eig(&a, &b)
}

/// Inf-sup probe results.
#[derive(Debug, Clone, Copy)]
pub struct InfSupReport {
    /// Direct inf-sup constant of B_h + J on the mean-free subspace in the
    /// triple-j norm (smallest singular value of the norm-whitened operator).
    pub meanfree: f64,
    /// Same computation on the full space (may degrade; reported only).
    pub full: f64,
    /// Constructive lower bound: min over random u of the normalized pairing
    /// with v = alpha u + Pi~(dt d_t u), best alpha over a small sweep.
    pub constructive: f64,
    /// Sampling max of |||Pi~(dt d_t u)|||_j / |||u|||_j.
    pub pi_bound: f64,
}

fn whitened_min_singular(a: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(gram.clone())
        .ok_or_else(|| Error::EigenProbe("norm Gram not positive definite".into()))?;
    let l = chol.l();
    // S = L^{-1} A L^{-T}
    let x = l
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::EigenProbe("triangular solve failed".into()))?;
    let y = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::EigenProbe("triangular solve failed".into()))?;
    let s = y.transpose();
    let svd = s.svd(false, false);
    Ok(svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v)))
}

pub fn infsup_probe(
    spaces: &[SlabSpace],
    mats: &[SlabMatrices],
    seed: u64,
    samples: usize,
) -> Result<InfSupReport> {
    let a = global_bh_plus_j(mats);
    let gram = global_triple_gram(spaces, mats, true);
    let z = meanfree_basis(mats);
    let a_t = z.transpose() * &a * &z;
    let g_t = z.transpose() * &gram * &z;
    let meanfree = whitened_min_singular(&a_t, &g_t)?;
    let full = whitened_min_singular(&a, &gram)?;

    // constructive bound with the paper-style test function
    let off = block_offsets(mats);
    let norm_j = |u: &[DVector<f64>]| -> f64 {
        crate::norms::compute_norms(spaces, mats, u).triple_j_sq().sqrt()
    };
    let pair = |u: &[DVector<f64>], v: &[DVector<f64>]| -> f64 {
        let mut gu = DVector::zeros(*off.last().unwrap());
        let mut gv = DVector::zeros(*off.last().unwrap());
        for (n, (cu, cv)) in u.iter().zip(v).enumerate() {
            gu.rows_mut(off[n], cu.len()).copy_from(cu);
            gv.rows_mut(off[n], cv.len()).copy_from(cv);
        }
        gv.dot(&(&a * gu))
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let mut constructive = f64::INFINITY;
    let mut pi_bound = 0.0f64;
    for _ in 0..samples {
        let raw: Vec<DVector<f64>> = mats
            .iter()
            .map(|s| {
                DVector::from_fn(s.dim, |_, _| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    x
                })
            })
            .collect();
        let u = pi_tilde(mats, &raw);
        let nu = norm_j(&u);
        if nu < 1e-12 {
            continue;
        }
        let dtu: Vec<DVector<f64>> = spaces
            .iter()
            .zip(&u)
            .zip(mats)
            .map(|((sp, c), s)| sp.apply_time_derivative(c) * s.dt)
            .collect();
        let w = pi_tilde(mats, &dtu);
        pi_bound = pi_bound.max(norm_j(&w) / nu);
        let mut best = f64::NEG_INFINITY;
        for alpha in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let v: Vec<DVector<f64>> = u
                .iter()
                .zip(&w)
                .map(|(cu, cw)| cu * alpha + cw)
                .collect();
            let nv = norm_j(&v);
            if nv < 1e-14 {
                continue;
            }
            best = best.max(pair(&u, &v) / (nu * nv));
        }
        constructive = constructive.min(best);
    }
    Ok(InfSupReport {
        meanfree,
        full,
        constructive,
        pi_bound,
    })
}

/// Seeded standard-normal coefficient fields for sampling probes.
pub fn random_fields(mats: &[SlabMatrices], seed: u64) -> Vec<DVector<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    mats.iter()
        .map(|s| {
            DVector::from_fn(s.dim, |_, _| {
                let x: f64 = StandardNormal.sample(&mut rng);
                x
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_geometry, Discretization};
    use crate::forms::assemble_all;
    use crate::levelset::{custom_geometry, ms1, ms1_mean};
    use crate::meshtime::{build_mesh, build_time_partition};
    use approx::assert_relative_eq;

    fn setup(
        problem: &crate::levelset::ProblemData,
        n: usize,
        n_slabs: usize,
        k: (usize, usize),
        q: (usize, usize),
    ) -> (
        BackgroundMesh,
        Vec<SlabSpace>,
        Vec<SlabMatrices>,
        Vec<SlabGeometry>,
        Discretization,
    ) {
        let mesh = build_mesh(problem.background.0, problem.background.1, n).unwrap();
        let tp = build_time_partition(problem.t_end, n_slabs).unwrap();
        let disc = Discretization::new(k.0, k.1, q.0, q.1);
        let geometry = build_geometry(problem, &mesh, &tp, &disc).unwrap();
        let (spaces, mats) = assemble_all(problem, &mesh, &tp, &disc, &geometry).unwrap();
        (mesh, spaces, mats, geometry, disc)
    }

    #[test]
    fn generalized_eig_simple() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        assert_relative_eq!(generalized_max_eig(&a, &b).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn uncut_domain_probe_is_one() {
        let data = custom_geometry("neg", (0.0, 1.0), 0.5, |_, _| -1.0, |_, _| 0.0, |_, _| 0.0);
        let (mesh, spaces, mats, geometry, disc) = setup(&data, 6, 2, (1, 1), (1, 1));
        let v = gp_probes(&spaces, &mats, &geometry, &mesh, disc.gamma_j, disc.quad_order);
        let v = v.unwrap();
        assert!(
            (v.l2_active_vs_interior - 1.0).abs() <= 1e-10,
            "uncut ratio {}",
            v.l2_active_vs_interior
        );
        assert!((v.h1_active_vs_interior - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn gp_probes_finite_on_cut_domain() {
        let (mesh, spaces, mats, geometry, disc) = setup(&ms1(), 16, 4, (1, 1), (1, 1));
        let v = gp_probes(&spaces, &mats, &geometry, &mesh, disc.gamma_j, disc.quad_order)
            .unwrap();
        for (name, x) in [
            ("l2", v.l2_active_vs_interior),
            ("h1", v.h1_active_vs_interior),
            ("trace", v.trace_vs_volume),
            ("dt", v.dt_vs_volume),
            ("gp-dt", v.gp_dt_vs_gp),
        ] {
            assert!(x.is_finite() && x > 0.0, "{name} probe value {x}");
        }
        // active-vs-interior ratios are at least 1 (E contains I)
        assert!(v.l2_active_vs_interior >= 1.0 - 1e-10);
    }

    #[test]
    fn gamma_scaling_of_gp_probe() {
        // the (h^2 / gamma) scaling makes the extremal constant invariant
        // when gamma is varied, because j scales linearly in gamma
        let p = ms1();
        let mesh = build_mesh(0.0, 2.0, 16).unwrap();
        let tp = build_time_partition(0.5, 4).unwrap();
        let mut values = Vec::new();
        for gamma in [0.1, 1.0, 10.0] {
            let disc = Discretization::new(1, 1, 1, 1).with_gamma(gamma);
            let geometry = build_geometry(&p, &mesh, &tp, &disc).unwrap();
            let (spaces, mats) = assemble_all(&p, &mesh, &tp, &disc, &geometry).unwrap();
            let v =
                gp_probes(&spaces, &mats, &geometry, &mesh, gamma, disc.quad_order).unwrap();
            values.push(v.l2_active_vs_interior);
        }
        assert_relative_eq!(values[0], values[1], epsilon = 1e-6 * values[1]);
        assert_relative_eq!(values[2], values[1], epsilon = 1e-6 * values[1]);
    }

    #[test]
    fn meanfree_basis_annihilates_constraints() {
        let (_, _, mats, _, _) = setup(&ms1_mean(), 8, 2, (1, 1), (1, 1));
        let z = meanfree_basis(&mats);
        let off = block_offsets(&mats);
        for (n, s) in mats.iter().enumerate() {
            let mut c = DVector::zeros(*off.last().unwrap());
            c.rows_mut(off[n], s.dim).copy_from(&s.constraint);
            let r = z.transpose() * &c;
            assert!(r.amax() < 1e-12, "constraint not annihilated: {}", r.amax());
        }
        // columns orthonormal
        let gram = z.transpose() * &z;
        let eye = DMatrix::identity(gram.nrows(), gram.ncols());
        assert!((gram - eye).amax() < 1e-12);
    }

    #[test]
    fn infsup_positive_on_small_problem() {
        let (_, spaces, mats, _, _) = setup(&ms1_mean(), 8, 2, (1, 1), (1, 1));
        let rep = infsup_probe(&spaces, &mats, 42, 12).unwrap();
        assert!(rep.meanfree > 1e-4, "inf-sup constant {}", rep.meanfree);
        assert!(rep.constructive > 0.0, "constructive bound {}", rep.constructive);
        assert!(rep.pi_bound.is_finite() && rep.pi_bound > 0.0);
    }

    #[test]
    fn trace_probe_finite() {
        let (_, spaces, mats, _, _) = setup(&ms1_mean(), 12, 3, (1, 1), (1, 1));
        let c = trace_probe(&spaces, &mats).unwrap();
        assert!(c.is_finite() && c > 0.0, "trace constant {c}");
    }
}
