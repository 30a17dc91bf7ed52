//! Refinement studies and probe sweeps: the machinery behind the CLI
//! subcommands and the acceptance suite.

use nalgebra::DVector;

use crate::cutgeom::SpaceTimeQuadrature;
use crate::discretization::{build_geometry, Discretization};
use crate::error::Result;
use crate::forms::{self, assemble_all};
use crate::levelset::ProblemData;
use crate::mapping::build_lifting;
use crate::meshtime::{build_mesh, build_time_partition};
use crate::norms::{compute_norms, error_vs_exact, NormReport};
use crate::probes::{gp_probes, infsup_probe, random_fields, trace_probe, GpProbeValues, InfSupReport};
use crate::solver::{solve, SolveConfig, SolveResult};

/// Refinement ladder: level i uses `base_elements << i` elements and
/// `base_slabs << i` slabs.
#[derive(Debug, Clone, Copy)]
pub struct Ladder {
    pub base_elements: usize,
    pub base_slabs: usize,
    pub levels: usize,
}

impl Ladder {
    pub fn level(&self, i: usize) -> (usize, usize) {
        (self.base_elements << i, self.base_slabs << i)
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n_elements: usize,
    pub n_slabs: usize,
    pub h: f64,
    pub dt: f64,
    pub error: NormReport,
    pub total_drift: f64,
    pub abs_drift_sum: f64,
}

/// Solve on every level and measure the error against the lifted exact
/// solution.
pub fn run_convergence(
    problem: &ProblemData,
    disc: &Discretization,
    cfg: &SolveConfig,
    ladder: &Ladder,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = ladder.level(level);
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let res = solve(problem, &mesh, &tp, disc, cfg)?;
        let lifted_slabs: Vec<_> = res
            .geometry
            .iter()
            .map(|g| (&g.levelset, &g.topology, &g.mapping))
            .collect();
        let lifting = build_lifting(problem, &mesh, lifted_slabs);
        let u = res.coeff_refs();
        let error = error_vs_exact(&res.spaces, &res.mats, &res.geometry, &lifting, &u)?;
        rows.push(ConvergenceRow {
            level,
            n_elements: n,
            n_slabs: slabs,
            h: mesh.h,
            dt: tp.dt,
            error,
            total_drift: global_drift(&res),
            abs_drift_sum: res.track.drifts.iter().map(|d| d.abs()).sum(),
        });
    }
    Ok(rows)
}

/// |total(T) - total(0) - integral of f| for a finished solve.
pub fn global_drift(res: &SolveResult) -> f64 {
    let t = &res.track;
    ((t.totals.last().unwrap() - t.totals[0]) - t.source_integrals.iter().sum::<f64>()).abs()
}

/// One row of the geometry-order check.
#[derive(Debug, Clone)]
pub struct GeometryRow {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    /// max over boundary quadrature points of |phi(Theta(x_G), t)| / |phi_x|.
    pub interface_residual: f64,
    /// max over slice times of | |Omega^h(t_n)| - |Omega(t_n)| |.
    pub measure_error: f64,
    /// max over boundary quadrature points of |w . n - V_h|.
    pub velocity_mismatch: f64,
}

pub fn run_geometry_check(
    problem: &ProblemData,
    disc: &Discretization,
    ladder: &Ladder,
) -> Result<Vec<GeometryRow>> {
    let mut rows = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = ladder.level(level);
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let geometry = build_geometry(problem, &mesh, &tp, disc)?;
        let mut iface = 0.0f64;
        let mut vel = 0.0f64;
        let mut meas = 0.0f64;
        for (s, geo) in geometry.iter().enumerate() {
            for p in &geo.phys.boundary {
                let denom = problem.phi_x(p.x, p.t).abs().max(1e-12);
                iface = iface.max(problem.phi(p.x, p.t).abs() / denom);
                vel = vel.max(((problem.velocity(p.x, p.t) - p.speed) * p.normal).abs());
            }
            let m_top: f64 = geo.phys.slice_top.iter().map(|p| p.w).sum();
            let exact = problem.measure(tp.time(s + 1), mesh.a, mesh.b);
            meas = meas.max((m_top - exact).abs());
        }
        rows.push(GeometryRow {
            level,
            h: mesh.h,
            dt: tp.dt,
            interface_residual: iface,
            measure_error: meas,
            velocity_mismatch: vel,
        });
    }
    Ok(rows)
}

/// Direction of an interpolation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Refine the mesh only; the test field is constant in time.
    Space,
    /// Refine the time partition only; the test field is constant in space.
    Time,
}

#[derive(Debug, Clone)]
pub struct InterpolationRow {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub l2_error: f64,
}

/// L2(Q^lin) error of the nodal slab interpolant of a smooth field under a
/// one-directional refinement sweep. The swept direction carries the only
/// variation of the field, so the measured rate isolates that direction.
pub fn run_interpolation_study(
    problem: &ProblemData,
    disc: &Discretization,
    ladder: &Ladder,
    sweep: Sweep,
) -> Result<Vec<InterpolationRow>> {
    let g = move |x: f64, t: f64| -> f64 {
        match sweep {
            Sweep::Space => (1.3 * x).sin(),
            Sweep::Time => (0.9 * t).exp() * (2.0 + t).ln(),
        }
    };
    let mut rows = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = match sweep {
            Sweep::Space => (ladder.base_elements << level, ladder.base_slabs),
            Sweep::Time => (ladder.base_elements, ladder.base_slabs << level),
        };
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let geometry = build_geometry(problem, &mesh, &tp, disc)?;
        let mut err_sq = 0.0;
        for (s, geo) in geometry.iter().enumerate() {
            let (t0, t1) = tp.slab(s);
            let space =
                crate::space::build_space(&geo.topology, &mesh, disc.k_s, disc.k_t, t0, t1)?;
            let coeffs = space.interpolate(g);
            err_sq += l2_ref_error(&space, &geo.quad, &coeffs, g);
        }
        rows.push(InterpolationRow {
            level,
            h: mesh.h,
            dt: tp.dt,
            l2_error: err_sq.sqrt(),
        });
    }
    Ok(rows)
}

fn l2_ref_error(
    space: &crate::space::SlabSpace,
    quad: &SpaceTimeQuadrature,
    coeffs: &DVector<f64>,
    g: impl Fn(f64, f64) -> f64,
) -> f64 {
    quad.volume
        .iter()
        .map(|p| {
            let d = space.value_ref(coeffs, p.elem, p.x, p.t) - g(p.x, p.t);
            p.w * d * d
        })
        .sum()
}

/// Per-level ghost-penalty lemma constants.
pub fn run_gp_probe_study(
    problem: &ProblemData,
    disc: &Discretization,
    ladder: &Ladder,
) -> Result<Vec<(usize, GpProbeValues)>> {
    let mut out = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = ladder.level(level);
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let geometry = build_geometry(problem, &mesh, &tp, disc)?;
        let (spaces, mats) = assemble_all(problem, &mesh, &tp, disc, &geometry)?;
        out.push((
            level,
            gp_probes(&spaces, &mats, &geometry, &mesh, disc.gamma_j, disc.quad_order)?,
        ));
    }
    Ok(out)
}

/// Per-level trace-inequality constants.
pub fn run_trace_study(
    problem: &ProblemData,
    disc: &Discretization,
    ladder: &Ladder,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = ladder.level(level);
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let geometry = build_geometry(problem, &mesh, &tp, disc)?;
        let (spaces, mats) = assemble_all(problem, &mesh, &tp, disc, &geometry)?;
        out.push((level, trace_probe(&spaces, &mats)?));
    }
    Ok(out)
}

/// Per-level inf-sup constants.
pub fn run_infsup_study(
    problem: &ProblemData,
    disc: &Discretization,
    ladder: &Ladder,
    seed: u64,
    samples: usize,
) -> Result<Vec<(usize, InfSupReport)>> {
    let mut out = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = ladder.level(level);
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let geometry = build_geometry(problem, &mesh, &tp, disc)?;
        let (spaces, mats) = assemble_all(problem, &mesh, &tp, disc, &geometry)?;
        out.push((level, infsup_probe(&spaces, &mats, seed, samples)?));
    }
    Ok(out)
}

/// One configuration row of the symmetric-sum identity probe.
#[derive(Debug, Clone)]
pub struct IdentityRow {
    pub k: (usize, usize),
    pub q: (usize, usize),
    pub deformed: bool,
    pub max_rel_violation: f64,
}

/// Check (B_h + B_mc)(u, u) = 2 ||grad u||^2 + jump part for seeded random
/// discrete functions over all order combinations in {1,2}.
pub fn run_identity_probe(
    problem: &ProblemData,
    n_elements: usize,
    n_slabs: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<IdentityRow>> {
    let mesh = build_mesh(problem.background.0, problem.background.1, n_elements)?;
    let tp = build_time_partition(problem.t_end, n_slabs)?;
    let mut rows = Vec::new();
    for k_s in [1usize, 2] {
        for k_t in [1usize, 2] {
            for q_s in [1usize, 2] {
                for q_t in [1usize, 2] {
                    for deformed in [true, false] {
                        let mut disc = Discretization::new(k_s, k_t, q_s, q_t);
                        if !deformed {
                            disc = disc.without_deformation();
                        }
                        let geometry = build_geometry(problem, &mesh, &tp, &disc)?;
                        let (_, mats) = assemble_all(problem, &mesh, &tp, &disc, &geometry)?;
                        let mut worst = 0.0f64;
                        for sample in 0..n_samples {
                            let u = random_fields(&mats, seed + sample as u64);
                            let lhs = forms::bh_global(&mats, &u, &u)
                                + forms::bmc_global(&mats, &u, &u);
                            let grad: f64 = mats
                                .iter()
                                .enumerate()
                                .map(|(i, s)| u[i].dot(&(&s.a_grad * &u[i])))
                                .sum();
                            let rhs = 2.0 * grad + forms::jump_sq(&mats, &u);
                            worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
                        }
                        rows.push(IdentityRow {
                            k: (k_s, k_t),
                            q: (q_s, q_t),
                            deformed,
                            max_rel_violation: worst,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// One row of a conservation study.
#[derive(Debug, Clone)]
pub struct ConservationRow {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub global_drift: f64,
    pub max_slab_drift: f64,
    pub abs_drift_sum: f64,
}

pub fn run_conservation(
    problem: &ProblemData,
    disc: &Discretization,
    cfg: &SolveConfig,
    ladder: &Ladder,
) -> Result<Vec<ConservationRow>> {
    let mut rows = Vec::new();
    for level in 0..ladder.levels {
        let (n, slabs) = ladder.level(level);
        let mesh = build_mesh(problem.background.0, problem.background.1, n)?;
        let tp = build_time_partition(problem.t_end, slabs)?;
        let res = solve(problem, &mesh, &tp, disc, cfg)?;
        rows.push(ConservationRow {
            level,
            h: mesh.h,
            dt: tp.dt,
            global_drift: global_drift(&res),
            max_slab_drift: res.track.drifts.iter().fold(0.0f64, |m, d| m.max(d.abs())),
            abs_drift_sum: res.track.drifts.iter().map(|d| d.abs()).sum(),
        });
    }
    Ok(rows)
}

/// Norm distance used by the penalty sweep: the triple-j norm of the
/// coefficient difference.
pub fn triple_j_distance(
    spaces: &[crate::space::SlabSpace],
    mats: &[forms::SlabMatrices],
    diff: &[DVector<f64>],
) -> f64 {
    compute_norms(spaces, mats, diff).triple_j_sq().sqrt()
}

/// Verdict helper: true when consecutive values grow by at most the factor.
pub fn bounded_verdict(values: &[f64], max_growth: f64) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= max_growth * w[0].max(1e-300))
}

/// Verdict helper: EOC of the last refinement pair is at least the target.
pub fn last_eoc(errors: &[f64]) -> f64 {
    let n = errors.len();
    (errors[n - 2] / errors[n - 1]).log2()
}
