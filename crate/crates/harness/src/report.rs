//! Table and summary writers plus the debug dumps.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;
use stcut::discretization::SlabGeometry;
use stcut::forms::SlabMatrices;
use stcut::solver::SolveResult;

/// One asserted check of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// "ge": value must be >= threshold, "le": <= threshold.
    pub sense: String,
    pub pass: bool,
}

impl Verdict {
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            sense: "ge".into(),
            pass: value >= threshold,
        }
    }

    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            sense: "le".into(),
            pass: value <= threshold,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    config: &'a RunConfig,
    verdicts: &'a [Verdict],
    all_pass: bool,
    warnings: &'a [String],
    outputs: &'a [String],
}

pub struct Reporter {
    pub dir: PathBuf,
    pub outputs: Vec<String>,
}

impl Reporter {
    pub fn new(out: &str) -> Result<Self> {
        let dir = PathBuf::from(out);
        fs::create_dir_all(&dir).with_context(|| format!("creating output dir {out}"))?;
        Ok(Self {
            dir,
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.display().to_string());
        Ok(path)
    }

    pub fn write_summary(
        &mut self,
        command: &str,
        config: &RunConfig,
        verdicts: &[Verdict],
        warnings: &[String],
    ) -> Result<bool> {
        let all_pass = verdicts.iter().all(|v| v.pass);
        let summary = Summary {
            command,
            config,
            verdicts,
            all_pass,
            warnings,
            outputs: &self.outputs.clone(),
        };
        let json = serde_json::to_string_pretty(&summary)?;
        self.write("summary.json", &json)?;
        for v in verdicts {
            println!(
                "[{}] {}: {:.6e} ({} {:.3e})",
                if v.pass { "ok" } else { "FAIL" },
                v.name,
                v.value,
                if v.sense == "ge" { ">=" } else { "<=" },
                v.threshold
            );
        }
        Ok(all_pass)
    }
}

/// CSV of the reference quadrature points of every slab: x, t, w, region.
pub fn quadrature_csv(geometry: &[SlabGeometry]) -> String {
    let mut s = String::from("slab,x,t,w,region\n");
    for (n, g) in geometry.iter().enumerate() {
        for p in &g.quad.volume {
            s += &format!("{n},{},{},{},volume\n", p.x, p.t, p.w);
        }
        for p in &g.quad.boundary {
            s += &format!("{n},{},{},{},boundary\n", p.x, p.t, p.w);
        }
        for p in &g.quad.slice_bottom {
            s += &format!("{n},{},{},{},slice-bottom\n", p.x, g.mapping.t_begin, p.w);
        }
        for p in &g.quad.slice_top {
            s += &format!("{n},{},{},{},slice-top\n", p.x, g.mapping.t_end, p.w);
        }
    }
    s
}

/// CSV of nodal displacements: slab, x, t, displacement.
pub fn deformation_csv(geometry: &[SlabGeometry]) -> String {
    let mut s = String::from("slab,x,t,displacement\n");
    for (n, g) in geometry.iter().enumerate() {
        for nodes in &g.levelset.elem_nodes {
            for &x in nodes {
                for &t in &g.mapping.time_basis.nodes {
                    let d = g.mapping.theta(x, t) - x;
                    s += &format!("{n},{x},{t},{d}\n");
                }
            }
        }
    }
    s
}

/// MatrixMarket coordinate dump of the stabilized system of each slab.
pub fn matrices_mm(mats: &[SlabMatrices]) -> String {
    let mut s = String::new();
    for (n, m) in mats.iter().enumerate() {
        let a = &m.a_conv + &m.a_grad + &m.m_bottom + &m.a_gp;
        let mut entries = Vec::new();
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                if a[(i, j)] != 0.0 {
                    entries.push((i + 1, j + 1, a[(i, j)]));
                }
            }
        }
        s += &format!("%% slab {n}\n%%MatrixMarket matrix coordinate real general\n");
        s += &format!("{} {} {}\n", a.nrows(), a.ncols(), entries.len());
        for (i, j, v) in entries {
            s += &format!("{i} {j} {v:.16e}\n");
        }
    }
    s
}

/// CSV of the mean track: n, t_n, measure, total, target, drift.
pub fn mass_csv(res: &SolveResult, times: &[f64]) -> String {
    let mut s = String::from("n,t,measure,total,target,drift\n");
    let t = &res.track;
    for n in 0..t.totals.len() {
        let drift = if n == 0 { 0.0 } else { t.drifts[n - 1] };
        s += &format!(
            "{n},{},{},{},{},{drift}\n",
            times[n], t.measures[n], t.totals[n], t.targets[n]
        );
    }
    s
}

/// CSV field dump on a sample grid of physical points: x, t, u_h.
pub fn field_csv(res: &SolveResult, samples: usize) -> String {
    let mut s = String::from("x,t,u\n");
    for (n, geo) in res.geometry.iter().enumerate() {
        let space = &res.spaces[n];
        let coeffs = &res.solutions[n].coeffs;
        let (t0, t1) = (space.t_begin, space.t_end);
        for it in 0..samples {
            let t = t0 + (t1 - t0) * (it as f64 + 1.0) / samples as f64;
            for (elem, nodes) in geo.levelset.elem_nodes.iter().enumerate() {
                if !geo.topology.is_active(elem) {
                    continue;
                }
                let (xl, xr) = (nodes[0], *nodes.last().unwrap());
                for &x in nodes {
                    if geo.levelset.eval_lin(elem, x, xl, xr, t) > 0.0 {
                        continue;
                    }
                    let xphys = geo.mapping.theta_on(elem, x, t);
                    let u = space.value_ref(coeffs, elem, x, t);
                    s += &format!("{xphys},{t},{u}\n");
                }
            }
        }
    }
    s
}

/// Write a CSV with a header and formatted rows.
pub fn csv_table(header: &str, rows: &[Vec<String>]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s += &r.join(",");
        s.push('\n');
    }
    s
}
