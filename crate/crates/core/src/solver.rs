//! Slab-marching time loop for the four method variants, with tracking of
//! total concentrations and the mean/mean-free splitting.

use nalgebra::{DMatrix, DVector};

use crate::discretization::{build_geometry, Discretization, SlabGeometry};
use crate::error::{Error, Result};
use crate::forms::{assemble_all, SlabMatrices};
use crate::levelset::ProblemData;
use crate::meshtime::{check_assumptions, BackgroundMesh, TimePartition};
use crate::space::{mean_split, SlabSpace};

/// Method variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Upwind form B_h + J on the full space.
    Plain,
    /// Mass-conserving form B_mc + J.
    MassConserving,
    /// B_h + J with the per-slab total concentration enforced by a Lagrange
    /// multiplier (bordered saddle-point system).
    Constrained,
    /// B_h + J with the total concentration enforced by a penalty K,
    /// realized through the bordered system with a -1/K diagonal block.
    Penalty,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "plain" => Some(Variant::Plain),
            "mc" => Some(Variant::MassConserving),
            "constrained" => Some(Variant::Constrained),
            "penalty" => Some(Variant::Penalty),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::MassConserving => "mc",
            Variant::Constrained => "constrained",
            Variant::Penalty => "penalty",
        }
    }
}

/// Solve configuration on top of the discretization parameters.
#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    pub variant: Variant,
    /// Penalty parameter K; required positive for the penalty variant.
    pub penalty: f64,
}

impl SolveConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            penalty: 0.0,
        }
    }

    pub fn with_penalty(variant: Variant, k: f64) -> Self {
        Self {
            variant,
            penalty: k,
        }
    }
}

/// Coefficients of one slab plus the multiplier of the bordered variants.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub slab: usize,
    pub coeffs: DVector<f64>,
    pub multiplier: Option<f64>,
}

/// Total concentrations per slice time: measures |Omega^h(t_n)|, realized
/// totals, prescribed targets, per-slab source integrals and conservation
/// drifts.
#[derive(Debug, Clone)]
pub struct MeanTrack {
    /// n = 0..N
    pub measures: Vec<f64>,
    /// Realized total at t_n (t_0 entry is the discrete initial total).
    pub totals: Vec<f64>,
    /// Targets from the balance recursion.
    pub targets: Vec<f64>,
    /// Integral of f over slab n (length N).
    pub source_integrals: Vec<f64>,
    /// Per-slab conservation drift: totals[n] - totals[n-1] - source.
    pub drifts: Vec<f64>,
}

/// Full solve output: solutions plus everything needed for post-processing.
pub struct SolveResult {
    pub solutions: Vec<SlabSolution>,
    pub track: MeanTrack,
    pub warnings: Vec<String>,
    pub spaces: Vec<SlabSpace>,
    pub mats: Vec<SlabMatrices>,
    pub geometry: Vec<SlabGeometry>,
    /// Largest linear-solve residual over slabs (relative).
    pub max_solve_residual: f64,
}

impl SolveResult {
    pub fn coeff_refs(&self) -> Vec<DVector<f64>> {
        self.solutions.iter().map(|s| s.coeffs.clone()).collect()
    }
}

fn solve_dense(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    slab: usize,
    variant: &str,
) -> Result<(DVector<f64>, f64)> {
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or_else(|| Error::SingularSystem {
        slab,
        variant: variant.into(),
        reason: "LU solve failed".into(),
    })?;
    let resid = (a * &x - b).norm();
    let scale = a.norm() * x.norm() + b.norm();
    let rel = if scale > 0.0 { resid / scale } else { resid };
    if !rel.is_finite() || rel > 1e-8 {
        return Err(Error::SingularSystem {
            slab,
            variant: variant.into(),
            reason: format!("relative residual {rel:.3e} after direct solve"),
        });
    }
    Ok((x, rel))
}

/// Initial total concentration on the discrete domain at t = 0.
fn initial_total(problem: &ProblemData, geo: &SlabGeometry) -> f64 {
    geo.phys
        .slice_bottom
        .iter()
        .map(|p| p.w * problem.initial(p.x))
        .sum()
}

/// March the slab systems for the configured variant.
pub fn solve(
    problem: &ProblemData,
    mesh: &BackgroundMesh,
    time: &TimePartition,
    disc: &Discretization,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    if cfg.variant == Variant::Penalty && !(cfg.penalty > 0.0) {
        return Err(Error::Config(
            "penalty variant requires a positive penalty parameter".into(),
        ));
    }
    let mut warnings = Vec::new();
    let rep = check_assumptions(mesh.h, time.dt, disc.q_t, 1.0, 1.0);
    if !rep.all_ok() {
        warnings.extend(rep.messages.clone());
    }
    let geometry = build_geometry(problem, mesh, time, disc)?;
    let (spaces, mats) = assemble_all(problem, mesh, time, disc, &geometry)?;
    solve_assembled(problem, cfg, &geometry, &mats).map(
        |(solutions, track, max_solve_residual)| SolveResult {
            solutions,
            track,
            warnings,
            spaces,
            mats,
            geometry,
            max_solve_residual,
        },
    )
}

/// Slab march on already assembled systems (used by the penalty sweep to
/// reuse geometry and matrices across K values).
pub fn solve_assembled(
    problem: &ProblemData,
    cfg: &SolveConfig,
    geometry: &[SlabGeometry],
    mats: &[SlabMatrices],
) -> Result<(Vec<SlabSolution>, MeanTrack, f64)> {
    let n_slabs = mats.len();
    let total0 = initial_total(problem, &geometry[0]);
    let mut measures = vec![mats[0].measure_bottom];
    let mut totals = vec![total0];
    let mut targets = vec![total0];
    let mut source_integrals = Vec::with_capacity(n_slabs);
    let mut drifts = Vec::with_capacity(n_slabs);
    let mut solutions: Vec<SlabSolution> = Vec::with_capacity(n_slabs);
    let mut max_resid = 0.0f64;

    for n in 0..n_slabs {
        let s = &mats[n];
        let dim = s.dim;
        let mut rhs = s.load.clone();
        if n > 0 {
            let c = s.coupling.as_ref().expect("coupling present for n > 0");
            rhs += c * &solutions[n - 1].coeffs;
        }
        let target = targets[n] + s.source_integral;
        targets.push(target);
        source_integrals.push(s.source_integral);

        let variant_name = cfg.variant.name();
        let (coeffs, multiplier, rel) = match cfg.variant {
            Variant::Plain => {
                let a = &s.a_conv + &s.a_grad + &s.m_bottom + &s.a_gp;
                let (x, rel) = solve_dense(&a, &rhs, n, variant_name)?;
                (x, None, rel)
            }
            Variant::MassConserving => {
                let a = -s.a_conv.transpose() + &s.a_grad + &s.m_top + &s.a_gp;
                let (x, rel) = solve_dense(&a, &rhs, n, variant_name)?;
                (x, None, rel)
            }
            Variant::Constrained | Variant::Penalty => {
                let c = &s.constraint;
                if c.norm() < 1e-14 {
                    return Err(Error::SingularSystem {
                        slab: n,
                        variant: variant_name.into(),
                        reason: "constraint row numerically zero".into(),
                    });
                }
                let a = &s.a_conv + &s.a_grad + &s.m_bottom + &s.a_gp;
                let mut big = DMatrix::zeros(dim + 1, dim + 1);
                big.view_mut((0, 0), (dim, dim)).copy_from(&a);
                for i in 0..dim {
                    big[(i, dim)] = c[i];
                    big[(dim, i)] = c[i];
                }
                big[(dim, dim)] = if cfg.variant == Variant::Penalty {
                    -1.0 / cfg.penalty
                } else {
                    0.0
                };
                let mut brhs = DVector::zeros(dim + 1);
                brhs.rows_mut(0, dim).copy_from(&rhs);
                brhs[dim] = target;
                let (x, rel) = solve_dense(&big, &brhs, n, variant_name)?;
                (x.rows(0, dim).into_owned(), Some(x[dim]), rel)
            }
        };
        max_resid = max_resid.max(rel);
        let total = s.constraint.dot(&coeffs);
        drifts.push(total - totals[n] - s.source_integral);
        totals.push(total);
        measures.push(s.measure_top);
        solutions.push(SlabSolution {
            slab: n,
            coeffs,
            multiplier,
        });
    }
    Ok((
        solutions,
        MeanTrack {
            measures,
            totals,
            targets,
            source_integrals,
            drifts,
        },
        max_resid,
    ))
}

/// Distances of penalty solutions to the constrained reference over a sweep
/// of K values, measured in the given norm callable.
pub fn penalty_sweep(
    problem: &ProblemData,
    mesh: &BackgroundMesh,
    time: &TimePartition,
    disc: &Discretization,
    k_values: &[f64],
    distance: impl Fn(&[SlabSpace], &[SlabMatrices], &[DVector<f64>]) -> f64,
) -> Result<Vec<(f64, f64, Vec<SlabSolution>)>> {
    let geometry = build_geometry(problem, mesh, time, disc)?;
    let (spaces, mats) = assemble_all(problem, mesh, time, disc, &geometry)?;
    let reference = solve_assembled(
        problem,
        &SolveConfig::new(Variant::Constrained),
        &geometry,
        &mats,
    )?
    .0;
    let mut out = Vec::new();
    for &k in k_values {
        let sols = solve_assembled(
            problem,
            &SolveConfig::with_penalty(Variant::Penalty, k),
            &geometry,
            &mats,
        )?
        .0;
        let diff: Vec<DVector<f64>> = sols
            .iter()
            .zip(&reference)
            .map(|(a, b)| &a.coeffs - &b.coeffs)
            .collect();
        out.push((k, distance(&spaces, &mats, &diff), sols));
    }
    Ok(out)
}

/// Reconstruct the mean part (continuous, piecewise linear in time) and the
/// slab-wise mean-free parts of a solution.
pub struct SplitSolution {
    /// Mean values at the N+1 slice times (t_0 seeded from the initial data).
    pub mean_values: Vec<f64>,
    /// Per-slab coefficients of the mean-free part.
    pub meanfree: Vec<DVector<f64>>,
}

pub fn reconstruct_split(
    spaces: &[SlabSpace],
    mats: &[SlabMatrices],
    track: &MeanTrack,
    solutions: &[SlabSolution],
) -> Result<SplitSolution> {
    let n_slabs = solutions.len();
    let mut mean_values = Vec::with_capacity(n_slabs + 1);
    for n in 0..=n_slabs {
        if track.measures[n] <= 0.0 {
            return Err(Error::VanishingSliceMeasure { t: f64::NAN });
        }
        mean_values.push(track.totals[n] / track.measures[n]);
    }
    let mut meanfree = Vec::with_capacity(n_slabs);
    for n in 0..n_slabs {
        let space = &spaces[n];
        let (t0, t1) = (space.t_begin, space.t_end);
        let (m0, m1) = (mean_values[n], mean_values[n + 1]);
        let bar_values: Vec<f64> = space
            .time_basis
            .nodes
            .iter()
            .map(|&t| m0 + (m1 - m0) * (t - t0) / (t1 - t0))
            .collect();
        let bar = space.constant_in_space(&bar_values);
        meanfree.push(&solutions[n].coeffs - bar);
    }
    // the mean-free part must have zero total at every slab end
    for n in 0..n_slabs {
        let total = mats[n].constraint.dot(&meanfree[n]);
        debug_assert!(
            total.abs() <= 1e-9 * (1.0 + track.totals[n + 1].abs()),
            "mean-free residual {total}"
        );
    }
    Ok(SplitSolution {
        mean_values,
        meanfree,
    })
}

/// Value of a slab solution at a physical point (preimage through the
/// mapping, then reference evaluation).
pub fn eval_solution(
    space: &SlabSpace,
    mesh: &BackgroundMesh,
    geo: &SlabGeometry,
    coeffs: &DVector<f64>,
    x: f64,
    t: f64,
) -> Result<f64> {
    let xi = geo.mapping.preimage(x, t)?;
    let e = mesh.element_of(xi);
    Ok(space.value_ref(coeffs, e, xi, t))
}

/// Split of a single slab solution into top-trace mean and mean-free part.
pub fn slab_mean_split(
    space: &SlabSpace,
    mats: &SlabMatrices,
    coeffs: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    mean_split(space, &mats.constraint, mats.measure_top, coeffs)
}
