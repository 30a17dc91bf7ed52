//! Command-line harness: convergence studies, conservation tables, geometry
//! checks and stability probes for the space-time unfitted solver.

mod config;
mod report;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use report::{Reporter, Verdict};
use stcut::mapping::build_lifting;
use stcut::meshtime::{build_mesh, build_time_partition};
use stcut::norms::error_vs_exact;
use stcut::solver::{solve, Variant};
use stcut::study::{
    last_eoc, run_conservation, run_convergence, run_geometry_check, run_gp_probe_study,
    run_identity_probe, run_infsup_study, run_trace_study, Ladder,
};

#[derive(Parser)]
#[command(
    name = "stcut",
    about = "Space-time unfitted FEM solver for moving-domain convection-diffusion (1D)",
    version
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    problem: Option<String>,
    #[arg(long, global = true)]
    variant: Option<String>,
    #[arg(long, global = true)]
    ks: Option<usize>,
    #[arg(long, global = true)]
    kt: Option<usize>,
    #[arg(long, global = true)]
    qs: Option<usize>,
    #[arg(long, global = true)]
    qt: Option<usize>,
    /// Base number of elements.
    #[arg(long = "n-elems", global = true)]
    n_elems: Option<usize>,
    /// Base number of slabs (0 = derive from --dt-over-h).
    #[arg(long = "n-slabs", global = true)]
    n_slabs: Option<usize>,
    #[arg(long = "dt-over-h", global = true)]
    dt_over_h: Option<f64>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long = "gamma-j", global = true)]
    gamma_j: Option<f64>,
    /// Penalty parameter K for the penalty variant.
    #[arg(long, global = true)]
    penalty: Option<f64>,
    #[arg(long = "quad-order", global = true)]
    quad_order: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Reference-geometry mode: force the identity deformation.
    #[arg(long = "no-deform", global = true)]
    no_deform: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once at the base resolution and export solution tables.
    Solve {
        /// Dump reference quadrature points to quadrature.csv.
        #[arg(long)]
        dump_quadrature: bool,
        /// Dump nodal deformation samples to deformation.csv.
        #[arg(long)]
        dump_deformation: bool,
        /// Dump slab system matrices in MatrixMarket form.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Refinement study of the error against the lifted exact solution.
    Converge,
    /// Conservation tables over a refinement ladder.
    Conserve,
    /// Ghost-penalty lemma constants over a refinement ladder.
    ProbeGp,
    /// Inf-sup constants of the stabilized form on the mean-free subspace.
    ProbeInfsup,
    /// Geometry approximation orders (interface residual, measures, velocity).
    GeomCheck,
    /// Symmetric-sum identity over all order combinations in {1,2}.
    ProbeIdentity,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {path}"))?;
            toml::from_str(&text).with_context(|| format!("parsing {path}"))?
        }
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = &o.problem {
        cfg.problem = v.clone();
    }
    if let Some(v) = &o.variant {
        cfg.variant = v.clone();
    }
    if let Some(v) = o.ks {
        cfg.ks = v;
    }
    if let Some(v) = o.kt {
        cfg.kt = v;
    }
    if let Some(v) = o.qs {
        cfg.qs = v;
    }
    if let Some(v) = o.qt {
        cfg.qt = v;
    }
    if let Some(v) = o.n_elems {
        cfg.n_elems = v;
    }
    if let Some(v) = o.n_slabs {
        cfg.n_slabs = v;
    }
    if let Some(v) = o.dt_over_h {
        cfg.dt_over_h = v;
    }
    if let Some(v) = o.levels {
        cfg.levels = v;
    }
    if let Some(v) = o.gamma_j {
        cfg.gamma_j = v;
    }
    if let Some(v) = o.penalty {
        cfg.penalty = v;
    }
    if let Some(v) = o.quad_order {
        cfg.quad_order = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if o.no_deform {
        cfg.deform = false;
    }
    Ok(cfg)
}

fn ladder(cfg: &RunConfig, problem: &stcut::levelset::ProblemData) -> Ladder {
    Ladder {
        base_elements: cfg.n_elems,
        base_slabs: cfg.base_slabs(problem),
        levels: cfg.levels,
    }
}

fn cmd_solve(
    cfg: &RunConfig,
    rep: &mut Reporter,
    dump_quadrature: bool,
    dump_deformation: bool,
    dump_matrices: bool,
) -> Result<(Vec<Verdict>, Vec<String>)> {
    let problem = cfg.problem_data()?;
    let mesh = build_mesh(problem.background.0, problem.background.1, cfg.n_elems)?;
    let tp = build_time_partition(problem.t_end, cfg.base_slabs(&problem))?;
    let disc = cfg.discretization();
    let res = solve(&problem, &mesh, &tp, &disc, &cfg.solve_config()?)?;
    let times: Vec<f64> = (0..=tp.n_slabs).map(|i| tp.time(i)).collect();
    rep.write("mass.csv", &report::mass_csv(&res, &times))?;
    rep.write("field.csv", &report::field_csv(&res, 4))?;
    if dump_quadrature {
        rep.write("quadrature.csv", &report::quadrature_csv(&res.geometry))?;
    }
    if dump_deformation {
        rep.write("deformation.csv", &report::deformation_csv(&res.geometry))?;
    }
    if dump_matrices {
        rep.write("matrices.mtx", &report::matrices_mm(&res.mats))?;
    }
    let mut verdicts = vec![Verdict::at_most(
        "linear-solve-residual",
        res.max_solve_residual,
        1e-8,
    )];
    if problem.exact.is_some() {
        let slabs: Vec<_> = res
            .geometry
            .iter()
            .map(|g| (&g.levelset, &g.topology, &g.mapping))
            .collect();
        let lifting = build_lifting(&problem, &mesh, slabs);
        let u = res.coeff_refs();
        let err = error_vs_exact(&res.spaces, &res.mats, &res.geometry, &lifting, &u)?;
        println!(
            "errors: |||e||| = {:.6e}, |||e|||_j = {:.6e}, final-time L2 = {:.6e}",
            err.triple(),
            err.triple_j(),
            err.final_time()
        );
        let rows = vec![vec![
            "0".to_string(),
            format!("{}", mesh.h),
            format!("{}", tp.dt),
            format!("{}", err.triple()),
            format!("{}", err.triple_j()),
            format!("{}", err.final_time()),
        ]];
        rep.write(
            "eoc.csv",
            &report::csv_table("level,h,dt,triple,triple_j,final_l2", &rows),
        )?;
    }
    if cfg.variant()? == Variant::MassConserving {
        let drift = res
            .track
            .drifts
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        verdicts.push(Verdict::at_most("mc-slab-drift", drift, 1e-9));
    }
    Ok((verdicts, res.warnings))
}

fn cmd_converge(cfg: &RunConfig, rep: &mut Reporter) -> Result<(Vec<Verdict>, Vec<String>)> {
    if cfg.levels < 2 {
        bail!("converge needs at least 2 levels");
    }
    let problem = cfg.problem_data()?;
    if problem.exact.is_none() {
        bail!("problem '{}' has no exact solution", cfg.problem);
    }
    let disc = cfg.discretization();
    let rows = run_convergence(&problem, &disc, &cfg.solve_config()?, &ladder(cfg, &problem))?;
    let mut csv = Vec::new();
    let triples: Vec<f64> = rows.iter().map(|r| r.error.triple()).collect();
    let triples_j: Vec<f64> = rows.iter().map(|r| r.error.triple_j()).collect();
    let finals: Vec<f64> = rows.iter().map(|r| r.error.final_time()).collect();
    for (i, r) in rows.iter().enumerate() {
        let eoc = |v: &Vec<f64>| {
            if i == 0 {
                String::new()
            } else {
                format!("{:.3}", (v[i - 1] / v[i]).log2())
            }
        };
        csv.push(vec![
            r.level.to_string(),
            r.n_elements.to_string(),
            r.n_slabs.to_string(),
            format!("{}", r.h),
            format!("{}", r.dt),
            format!("{}", triples[i]),
            eoc(&triples),
            format!("{}", triples_j[i]),
            eoc(&triples_j),
            format!("{}", finals[i]),
            eoc(&finals),
        ]);
    }
    rep.write(
        "eoc.csv",
        &report::csv_table(
            "level,n_elements,n_slabs,h,dt,triple,triple_eoc,triple_j,triple_j_eoc,final_l2,final_l2_eoc",
            &csv,
        ),
    )?;
    let mass_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.level.to_string(),
                format!("{}", r.h),
                format!("{}", r.dt),
                format!("{}", r.total_drift),
                format!("{}", r.abs_drift_sum),
            ]
        })
        .collect();
    rep.write(
        "mass.csv",
        &report::csv_table("level,h,dt,global_drift,abs_drift_sum", &mass_rows),
    )?;
    // expected triple-norm rate: min(q_s, q_t, k_s, k_t + 1/2) under dt ~ h
    let theoretical = (cfg.qs.min(cfg.ks) as f64).min(cfg.qt as f64).min(cfg.kt as f64 + 0.5);
    let verdicts = vec![
        Verdict::at_least("triple-norm-eoc", last_eoc(&triples), theoretical - 0.2),
        Verdict::at_least("final-l2-eoc", last_eoc(&finals), theoretical - 0.2),
    ];
    Ok((verdicts, Vec::new()))
}

fn cmd_conserve(cfg: &RunConfig, rep: &mut Reporter) -> Result<(Vec<Verdict>, Vec<String>)> {
    let problem = cfg.problem_data()?;
    let disc = cfg.discretization();
    let rows = run_conservation(&problem, &disc, &cfg.solve_config()?, &ladder(cfg, &problem))?;
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.level.to_string(),
                format!("{}", r.h),
                format!("{}", r.dt),
                format!("{}", r.global_drift),
                format!("{}", r.max_slab_drift),
                format!("{}", r.abs_drift_sum),
            ]
        })
        .collect();
    rep.write(
        "mass.csv",
        &report::csv_table(
            "level,h,dt,global_drift,max_slab_drift,abs_drift_sum",
            &csv,
        ),
    )?;
    let mut verdicts = Vec::new();
    match cfg.variant()? {
        Variant::MassConserving | Variant::Constrained => {
            let worst = rows.iter().map(|r| r.global_drift).fold(0.0f64, f64::max);
            verdicts.push(Verdict::at_most("global-drift", worst, 1e-9));
        }
        _ => {
            let drifts: Vec<f64> = rows.iter().map(|r| r.abs_drift_sum).collect();
            let target = cfg.qs.min(cfg.qt) as f64 - 0.2;
            verdicts.push(Verdict::at_least("drift-eoc", last_eoc(&drifts), target));
        }
    }
    Ok((verdicts, Vec::new()))
}

fn cmd_probe_gp(cfg: &RunConfig, rep: &mut Reporter) -> Result<(Vec<Verdict>, Vec<String>)> {
    let problem = cfg.problem_data()?;
    let disc = cfg.discretization();
    let lad = ladder(cfg, &problem);
    let gp = run_gp_probe_study(&problem, &disc, &lad)?;
    let trace = run_trace_study(&problem, &disc, &lad)?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut push_series = |name: &str, values: Vec<f64>, rows: &mut Vec<Vec<String>>| {
        for (lvl, v) in values.iter().enumerate() {
            rows.push(vec![lvl.to_string(), name.to_string(), format!("{v}")]);
        }
        let growth = values
            .windows(2)
            .map(|w| w[1] / w[0].max(1e-300))
            .fold(0.0f64, f64::max);
        verdicts.push(Verdict::at_most(&format!("{name}-growth"), growth, 1.5));
    };
    push_series(
        "gp-l2-active-vs-interior",
        gp.iter().map(|(_, v)| v.l2_active_vs_interior).collect(),
        &mut rows,
    );
    push_series(
        "gp-h1-active-vs-interior",
        gp.iter().map(|(_, v)| v.h1_active_vs_interior).collect(),
        &mut rows,
    );
    push_series(
        "gp-trace-vs-volume",
        gp.iter().map(|(_, v)| v.trace_vs_volume).collect(),
        &mut rows,
    );
    push_series(
        "gp-dt-vs-volume",
        gp.iter().map(|(_, v)| v.dt_vs_volume).collect(),
        &mut rows,
    );
    push_series(
        "gp-dt-gp",
        gp.iter().map(|(_, v)| v.gp_dt_vs_gp).collect(),
        &mut rows,
    );
    push_series(
        "trace-inequality",
        trace.iter().map(|(_, v)| *v).collect(),
        &mut rows,
    );
    rep.write("probes.csv", &report::csv_table("level,probe,value", &rows))?;
    Ok((verdicts, Vec::new()))
}

fn cmd_probe_infsup(cfg: &RunConfig, rep: &mut Reporter) -> Result<(Vec<Verdict>, Vec<String>)> {
    let problem = cfg.problem_data()?;
    let disc = cfg.discretization();
    let reports = run_infsup_study(&problem, &disc, &ladder(cfg, &problem), cfg.seed, 16)?;
    let mut rows = Vec::new();
    for (lvl, r) in &reports {
        for (name, v) in [
            ("infsup-meanfree", r.meanfree),
            ("infsup-full-space", r.full),
            ("infsup-constructive", r.constructive),
            ("pi-tilde-bound", r.pi_bound),
        ] {
            rows.push(vec![lvl.to_string(), name.to_string(), format!("{v}")]);
        }
    }
    rep.write("probes.csv", &report::csv_table("level,probe,value", &rows))?;
    let vals: Vec<f64> = reports.iter().map(|(_, r)| r.meanfree).collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / min;
    let pi: Vec<f64> = reports.iter().map(|(_, r)| r.pi_bound).collect();
    let verdicts = vec![
        Verdict::at_least("infsup-min", min, 1e-6),
        Verdict::at_most("infsup-spread", spread, 2.0),
        Verdict::at_most(
            "pi-tilde-growth",
            pi.windows(2)
                .map(|w| w[1] / w[0].max(1e-300))
                .fold(0.0f64, f64::max),
            1.5,
        ),
    ];
    Ok((verdicts, Vec::new()))
}

fn cmd_geom_check(cfg: &RunConfig, rep: &mut Reporter) -> Result<(Vec<Verdict>, Vec<String>)> {
    let problem = cfg.problem_data()?;
    let disc = cfg.discretization();
    let rows = run_geometry_check(&problem, &disc, &ladder(cfg, &problem))?;
    let iface: Vec<f64> = rows.iter().map(|r| r.interface_residual).collect();
    let meas: Vec<f64> = rows.iter().map(|r| r.measure_error).collect();
    let vel: Vec<f64> = rows.iter().map(|r| r.velocity_mismatch).collect();
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.level.to_string(),
                format!("{}", r.h),
                format!("{}", r.dt),
                format!("{}", r.interface_residual),
                format!("{}", r.measure_error),
                format!("{}", r.velocity_mismatch),
            ]
        })
        .collect();
    rep.write(
        "eoc.csv",
        &report::csv_table(
            "level,h,dt,interface_residual,measure_error,velocity_mismatch",
            &csv,
        ),
    )?;
    let has_interface = iface.iter().any(|&v| v > 1e-13);
    let mut verdicts = Vec::new();
    if has_interface {
        verdicts.push(Verdict::at_least(
            "interface-residual-eoc",
            last_eoc(&iface),
            cfg.qs as f64 + 1.0 - 0.2,
        ));
        verdicts.push(Verdict::at_least(
            "velocity-mismatch-eoc",
            last_eoc(&vel),
            cfg.qs.min(cfg.qt) as f64 - 0.2,
        ));
        verdicts.push(Verdict::at_least(
            "measure-error-eoc",
            last_eoc(&meas),
            cfg.qs.min(cfg.qt) as f64 - 0.2,
        ));
    }
    Ok((verdicts, Vec::new()))
}

fn cmd_probe_identity(cfg: &RunConfig, rep: &mut Reporter) -> Result<(Vec<Verdict>, Vec<String>)> {
    let problem = cfg.problem_data()?;
    let rows = run_identity_probe(
        &problem,
        cfg.n_elems.max(16),
        cfg.base_slabs(&problem),
        20,
        cfg.seed,
    )?;
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.0.to_string(),
                r.k.1.to_string(),
                r.q.0.to_string(),
                r.q.1.to_string(),
                r.deformed.to_string(),
                format!("{}", r.max_rel_violation),
            ]
        })
        .collect();
    rep.write(
        "probes.csv",
        &report::csv_table("ks,kt,qs,qt,deformed,max_rel_violation", &csv),
    )?;
    let worst = rows
        .iter()
        .map(|r| r.max_rel_violation)
        .fold(0.0f64, f64::max);
    Ok((
        vec![Verdict::at_most("symmetric-sum-identity", worst, 1e-10)],
        Vec::new(),
    ))
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let mut rep = Reporter::new(&cfg.out)?;
    let (name, (verdicts, warnings)) = match &cli.command {
        Command::Solve {
            dump_quadrature,
            dump_deformation,
            dump_matrices,
        } => (
            "solve",
            cmd_solve(&cfg, &mut rep, *dump_quadrature, *dump_deformation, *dump_matrices)?,
        ),
        Command::Converge => ("converge", cmd_converge(&cfg, &mut rep)?),
        Command::Conserve => ("conserve", cmd_conserve(&cfg, &mut rep)?),
        Command::ProbeGp => ("probe-gp", cmd_probe_gp(&cfg, &mut rep)?),
        Command::ProbeInfsup => ("probe-infsup", cmd_probe_infsup(&cfg, &mut rep)?),
        Command::GeomCheck => ("geom-check", cmd_geom_check(&cfg, &mut rep)?),
        Command::ProbeIdentity => ("probe-identity", cmd_probe_identity(&cfg, &mut rep)?),
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    rep.write_summary(name, &cfg, &verdicts, &warnings)
}
