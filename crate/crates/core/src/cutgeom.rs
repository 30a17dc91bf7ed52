//! Per-slab cut topology (active/interior element sets, ghost facets) and
//! quadrature on the linear reference geometry: the cut space-time volume,
//! the lateral boundary, and fixed-time slices.

use crate::error::{Error, Result};
use crate::lagrange::{trace_range, trace_roots};
use crate::levelset::DiscreteLevelSet;
use crate::meshtime::BackgroundMesh;
use crate::quad1d::{gauss_count_for_degree, gauss_legendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementMarker {
    Exterior,
    Cut,
    Interior,
}

/// Classification of one slab: markers per element, the active set E
/// (elements meeting the cut region), the interior set I (elements fully
/// inside), and the ghost-penalty facet set.
#[derive(Debug, Clone)]
pub struct CutTopology {
    pub slab: usize,
    pub markers: Vec<ElementMarker>,
    /// E: elements with nonempty intersection with the cut region (sorted).
    pub active: Vec<usize>,
    /// I: elements whose full space-time prism lies inside (sorted).
    pub interior: Vec<usize>,
    /// Ghost facets: interior facets (vertex index) with at least one cut
    /// neighbor and both neighbors active.
    pub ghost_facets: Vec<usize>,
}

impl CutTopology {
    pub fn is_active(&self, e: usize) -> bool {
        self.markers[e] != ElementMarker::Exterior
    }
}

/// Classify the elements of a slab from the sign pattern of phi^lin.
///
/// phi^lin is affine in x on each element, so its range over the slab prism
/// is spanned by the two vertex traces. Elements where phi^lin vanishes
/// identically on the whole prism are rejected as unsupported input.
pub fn classify(
    levelset: &DiscreteLevelSet,
    mesh: &BackgroundMesh,
    slab: usize,
) -> Result<CutTopology> {
    let (t0, t1) = (levelset.t_begin, levelset.t_end);
    let scale = levelset
        .vertex_values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let tiny = 1e-14 * scale.max(1.0);
    let mut markers = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let (lo_l, hi_l) = trace_range(&levelset.time_basis, levelset.vertex_trace(e), t0, t1);
        let (lo_r, hi_r) = trace_range(&levelset.time_basis, levelset.vertex_trace(e + 1), t0, t1);
        if hi_l.abs().max((-lo_l).abs()) <= tiny && hi_r.abs().max((-lo_r).abs()) <= tiny {
            return Err(Error::DegenerateLevelSet {
                slab,
                element: e,
                reason: "phi^lin vanishes identically on the element".into(),
            });
        }
        let lo = lo_l.min(lo_r);
        let hi = hi_l.max(hi_r);
        let marker = if hi <= 0.0 {
            ElementMarker::Interior
        } else if lo >= 0.0 {
            ElementMarker::Exterior
        } else {
            ElementMarker::Cut
        };
        markers.push(marker);
    }
    let active: Vec<usize> = (0..mesh.n_elements())
        .filter(|&e| markers[e] != ElementMarker::Exterior)
        .collect();
    let interior: Vec<usize> = (0..mesh.n_elements())
        .filter(|&e| markers[e] == ElementMarker::Interior)
        .collect();
    let ghost_facets: Vec<usize> = mesh
        .interior_facets()
        .filter(|&f| {
            let (l, r) = mesh.facet_elements(f);
            let any_cut =
                markers[l] == ElementMarker::Cut || markers[r] == ElementMarker::Cut;
            let both_active = markers[l] != ElementMarker::Exterior
                && markers[r] != ElementMarker::Exterior;
            any_cut && both_active
        })
        .collect();
    Ok(CutTopology {
        slab,
        markers,
        active,
        interior,
        ghost_facets,
    })
}

/// Times inside the slab where some active vertex trace of phi^lin crosses
/// zero; between consecutive breakpoints the per-element cut pattern is
/// constant. Roots closer than 1e-12 * dt are merged.
pub fn temporal_breakpoints(
    levelset: &DiscreteLevelSet,
    mesh: &BackgroundMesh,
    topology: &CutTopology,
) -> Vec<f64> {
    let (t0, t1) = (levelset.t_begin, levelset.t_end);
    let dt = t1 - t0;
    let merge = 1e-12 * dt;
    let mut vset = vec![false; mesh.n_vertices()];
    for &e in &topology.active {
        vset[e] = true;
        vset[e + 1] = true;
    }
    let mut out: Vec<f64> = Vec::new();
    for (v, used) in vset.iter().enumerate() {
        if !used {
            continue;
        }
        for r in trace_roots(&levelset.time_basis, levelset.vertex_trace(v), t0, t1, merge) {
            if r > t0 + merge && r < t1 - merge {
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= merge);
    out
}

/// One point of a space-time volume rule on the reference (undeformed)
/// configuration. The weight carries the space-time measure dx dt; mapping
/// Jacobians are applied later.
#[derive(Debug, Clone, Copy)]
pub struct VolumePoint {
    pub elem: usize,
    pub x: f64,
    pub t: f64,
    pub w: f64,
}

/// One lateral-boundary point: the cut position of the reference interface
/// at a temporal Gauss point. In 1D the surface measure of a point is 1, so
/// the weight is the temporal weight alone.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub elem: usize,
    /// Reference interface position x_Gamma(t).
    pub x: f64,
    pub t: f64,
    pub w: f64,
    /// Outward spatial normal of the inside region (+1 or -1).
    pub normal: f64,
    /// Velocity of the reference interface, d x_Gamma / dt.
    pub xdot: f64,
}

/// One point of a fixed-time spatial slice rule.
#[derive(Debug, Clone, Copy)]
pub struct SlicePoint {
    pub elem: usize,
    pub x: f64,
    pub w: f64,
}

/// Quadrature data of one slab on the linear reference geometry.
#[derive(Debug, Clone)]
pub struct SpaceTimeQuadrature {
    pub slab: usize,
    pub order: usize,
    pub breakpoints: Vec<f64>,
    pub volume: Vec<VolumePoint>,
    pub boundary: Vec<BoundaryPoint>,
    pub slice_bottom: Vec<SlicePoint>,
    pub slice_top: Vec<SlicePoint>,
}

/// Inside part of an element at a fixed time, from the phi^lin endpoint
/// values: `None` when outside, otherwise the interval and, when cut, the
/// interface position and normal.
enum InsidePart {
    None,
    Whole,
    /// (x_gamma, normal): inside is left of x_gamma for normal = +1.
    CutLeftInside(f64),
    CutRightInside(f64),
}

fn inside_part(
    vl: f64,
    vr: f64,
    xl: f64,
    xr: f64,
    scale: f64,
) -> std::result::Result<InsidePart, String> {
    if vl <= 0.0 && vr <= 0.0 {
        if vl == 0.0 && vr == 0.0 {
            return Err("phi^lin vanishes on the whole element at a quadrature time".into());
        }
        return Ok(InsidePart::Whole);
    }
    if vl >= 0.0 && vr >= 0.0 {
        return Ok(InsidePart::None);
    }
    if (vr - vl).abs() < 1e-14 * scale.max(1.0) {
        return Err(format!(
            "spatially constant phi^lin on a cut element (|b| = {:.3e})",
            (vr - vl).abs() / (xr - xl)
        ));
    }
    let xg = xl + (xr - xl) * vl / (vl - vr);
    if vl < 0.0 {
        Ok(InsidePart::CutLeftInside(xg))
    } else {
        Ok(InsidePart::CutRightInside(xg))
    }
}

/// Build volume, boundary and slab-end slice rules for one slab.
///
/// For each temporal sub-interval between breakpoints a Gauss rule in time
/// is tensorized with per-time Gauss rules on the inside part of each active
/// element. Polynomials of degree `order` per direction integrate exactly on
/// fixed-topology sub-slabs whose cut position is polynomial in t.
pub fn build_quadrature(
    topology: &CutTopology,
    levelset: &DiscreteLevelSet,
    mesh: &BackgroundMesh,
    order: usize,
) -> Result<SpaceTimeQuadrature> {
    let (t0, t1) = (levelset.t_begin, levelset.t_end);
    let breakpoints = temporal_breakpoints(levelset, mesh, topology);
    let npts = gauss_count_for_degree(order);
    let gauss = gauss_legendre(npts);
    let scale = levelset
        .vertex_values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));

    let mut volume = Vec::new();
    let mut boundary = Vec::new();
    let mut edges = vec![t0];
    edges.extend_from_slice(&breakpoints);
    edges.push(t1);
    for win in edges.windows(2) {
        let trule = gauss.mapped(win[0], win[1]);
        for (&t, &wt) in trule.points.iter().zip(&trule.weights) {
            for &e in &topology.active {
                let (xl, xr) = mesh.element(e);
                let (vl, vr) = levelset.lin_endpoints(e, t);
                let part = inside_part(vl, vr, xl, xr, scale).map_err(|reason| {
                    Error::DegenerateLevelSet {
                        slab: topology.slab,
                        element: e,
                        reason,
                    }
                })?;
                let interval = match part {
                    InsidePart::None => None,
                    InsidePart::Whole => Some((xl, xr)),
                    InsidePart::CutLeftInside(xg) => Some((xl, xg)),
                    InsidePart::CutRightInside(xg) => Some((xg, xr)),
                };
                if let Some((a, b)) = interval {
                    if b > a {
                        let xrule = gauss.mapped(a, b);
                        for (&x, &wx) in xrule.points.iter().zip(&xrule.weights) {
                            volume.push(VolumePoint {
                                elem: e,
                                x,
                                t,
                                w: wt * wx,
                            });
                        }
                    }
                }
                match part {
                    InsidePart::CutLeftInside(xg) | InsidePart::CutRightInside(xg) => {
                        let (dvl, dvr) = levelset.lin_endpoints_dt(e, t);
                        let denom = vl - vr;
                        let xdot = (xr - xl) * (vl * dvr - dvl * vr) / (denom * denom);
                        let normal = if matches!(part, InsidePart::CutLeftInside(_)) {
                            1.0
                        } else {
                            -1.0
                        };
                        boundary.push(BoundaryPoint {
                            elem: e,
                            x: xg,
                            t,
                            w: wt,
                            normal,
                            xdot,
                        });
                    }
                    _ => {}
                }
            }
        }
    }
    let slice_bottom = slice_quadrature(topology, levelset, mesh, t0, order)?;
    let slice_top = slice_quadrature(topology, levelset, mesh, t1, order)?;
    Ok(SpaceTimeQuadrature {
        slab: topology.slab,
        order,
        breakpoints,
        volume,
        boundary,
        slice_bottom,
        slice_top,
    })
}

/// Gauss rule on the inside part of each active element at fixed time t.
pub fn slice_quadrature(
    topology: &CutTopology,
    levelset: &DiscreteLevelSet,
    mesh: &BackgroundMesh,
    t: f64,
    order: usize,
) -> Result<Vec<SlicePoint>> {
    let gauss = gauss_legendre(gauss_count_for_degree(order));
    let scale = levelset
        .vertex_values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = Vec::new();
    for &e in &topology.active {
        let (xl, xr) = mesh.element(e);
        let (vl, vr) = levelset.lin_endpoints(e, t);
        let part = inside_part(vl, vr, xl, xr, scale).map_err(|reason| {
            Error::DegenerateLevelSet {
                slab: topology.slab,
                element: e,
                reason,
            }
        })?;
        let interval = match part {
            InsidePart::None => None,
            InsidePart::Whole => Some((xl, xr)),
            InsidePart::CutLeftInside(xg) => Some((xl, xg)),
            InsidePart::CutRightInside(xg) => Some((xg, xr)),
        };
        if let Some((a, b)) = interval {
            if b > a {
                let xrule = gauss.mapped(a, b);
                for (&x, &wx) in xrule.points.iter().zip(&xrule.weights) {
                    out.push(SlicePoint { elem: e, x, w: wx });
                }
            }
        }
    }
    Ok(out)
}

/// Tensor Gauss rule over the full (uncut) prisms of the given elements;
/// used by the stability probes for norms on the active and interior sets.
pub fn full_prism_rule(
    elements: &[usize],
    mesh: &BackgroundMesh,
    t0: f64,
    t1: f64,
    order: usize,
) -> Vec<VolumePoint> {
    let gauss = gauss_legendre(gauss_count_for_degree(order));
    let trule = gauss.mapped(t0, t1);
    let mut out = Vec::new();
    for &e in elements {
        let (xl, xr) = mesh.element(e);
        let xrule = gauss.mapped(xl, xr);
        for (&t, &wt) in trule.points.iter().zip(&trule.weights) {
            for (&x, &wx) in xrule.points.iter().zip(&xrule.weights) {
                out.push(VolumePoint {
                    elem: e,
                    x,
                    t,
                    w: wt * wx,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::{custom_geometry, interpolate_levelset, ms1, ProblemData};
    use crate::meshtime::{build_mesh, build_time_partition, BackgroundMesh, TimePartition};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn setup(
        data: &ProblemData,
        mesh: &BackgroundMesh,
        tp: &TimePartition,
        q: (usize, usize),
        slab: usize,
    ) -> (DiscreteLevelSet, CutTopology) {
        let ls = interpolate_levelset(data, mesh, tp, q.0, q.1);
        let topo = classify(&ls[slab], mesh, slab).unwrap();
        (ls.into_iter().nth(slab).unwrap(), topo)
    }

    #[test]
    fn classify_static_interface() {
        let data = custom_geometry("s", (0.0, 3.0), 1.0, |x, _| x - 1.0, |_, _| 1.0, |_, _| 0.0);
        let mesh = build_mesh(0.0, 3.0, 4).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let (_, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        assert_eq!(
            topo.markers,
            vec![
                ElementMarker::Interior,
                ElementMarker::Cut,
                ElementMarker::Exterior,
                ElementMarker::Exterior
            ]
        );
        assert_eq!(topo.active, vec![0, 1]);
        assert_eq!(topo.interior, vec![0]);
        assert_eq!(topo.ghost_facets, vec![1]); // facet at x = 0.75
    }

    #[test]
    fn classify_ms1_first_slab() {
        let data = ms1();
        let mesh = build_mesh(0.0, 3.0, 4).unwrap();
        let tp = build_time_partition(0.5, 5).unwrap(); // slab (0, 0.1]
        let (_, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        assert_eq!(topo.active, vec![0, 1]);
        assert!(topo.interior.is_empty());
        assert_eq!(
            topo.markers[..2],
            [ElementMarker::Cut, ElementMarker::Cut]
        );
    }

    #[test]
    fn classify_uncut_domain() {
        let data = custom_geometry("neg", (0.0, 1.0), 1.0, |_, _| -1.0, |_, _| 0.0, |_, _| 0.0);
        let mesh = build_mesh(0.0, 1.0, 4).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let (_, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        assert!(topo.markers.iter().all(|&m| m == ElementMarker::Interior));
        assert_eq!(topo.active, topo.interior);
        assert!(topo.ghost_facets.is_empty());
    }

    #[test]
    fn degenerate_levelset_rejected() {
        // phi identically zero on element (1,2) x I_n
        let data = custom_geometry(
            "deg",
            (0.0, 3.0),
            1.0,
            |x, _| {
                if x <= 1.0 {
                    x - 1.0
                } else if x >= 2.0 {
                    x - 2.0
                } else {
                    0.0
                }
            },
            |_, _| 1.0,
            |_, _| 0.0,
        );
        let mesh = build_mesh(0.0, 3.0, 3).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let ls = interpolate_levelset(&data, &mesh, &tp, 1, 1);
        assert!(matches!(
            classify(&ls[0], &mesh, 0),
            Err(Error::DegenerateLevelSet { element: 1, .. })
        ));
    }

    #[test]
    fn breakpoint_of_linear_trace() {
        // vertex at x = 1.1 crosses zero at t = 0.2 for phi = x - 1 - 0.5 t
        let data = custom_geometry(
            "lin",
            (0.0, 2.2),
            0.4,
            |x, t| x - 1.0 - 0.5 * t,
            |_, _| 1.0,
            |_, _| 0.5,
        );
        let mesh = build_mesh(0.0, 2.2, 2).unwrap();
        let tp = build_time_partition(0.4, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let bps = temporal_breakpoints(&ls, &mesh, &topo);
        assert_eq!(bps.len(), 1);
        assert_relative_eq!(bps[0], 0.2, epsilon = 1e-10);
    }

    #[test]
    fn static_levelset_has_no_breakpoints() {
        let data = custom_geometry("s", (0.0, 3.0), 1.0, |x, _| x - 1.0, |_, _| 1.0, |_, _| 0.0);
        let mesh = build_mesh(0.0, 3.0, 4).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 2), 0);
        assert!(temporal_breakpoints(&ls, &mesh, &topo).is_empty());
    }

    #[test]
    fn quadratic_trace_two_breakpoints() {
        // vertex 1.1 trace: 0.1 - 4 (t-0.1)(t-0.3), roots 0.2 -+ sqrt(0.14)/2
        let data = custom_geometry(
            "quad",
            (0.0, 2.2),
            0.4,
            |x, t| x - 1.0 - 4.0 * (t - 0.1) * (t - 0.3),
            |_, _| 1.0,
            |_, _| 0.0,
        );
        let mesh = build_mesh(0.0, 2.2, 2).unwrap();
        let tp = build_time_partition(0.4, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 2), 0);
        let bps = temporal_breakpoints(&ls, &mesh, &topo);
        let r = (0.14f64).sqrt() / 2.0;
        assert_eq!(bps.len(), 2);
        assert_relative_eq!(bps[0], 0.2 - r, epsilon = 1e-10);
        assert_relative_eq!(bps[1], 0.2 + r, epsilon = 1e-10);
    }

    fn integrate_volume(q: &SpaceTimeQuadrature, f: impl Fn(f64, f64) -> f64) -> f64 {
        q.volume.iter().map(|p| p.w * f(p.x, p.t)).sum()
    }

    #[test]
    fn cut_volume_closed_form() {
        // phi = x - (1 + 0.5 t) on element (0.75, 1.5), slab (0, 0.2]:
        // measure = int_0^0.2 (0.25 + 0.5 t) dt = 0.06
        let data = custom_geometry(
            "mv",
            (0.0, 1.5),
            0.2,
            |x, t| x - 1.0 - 0.5 * t,
            |_, _| 1.0,
            |_, _| 0.5,
        );
        let mesh = build_mesh(0.0, 1.5, 2).unwrap();
        let tp = build_time_partition(0.2, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let q = build_quadrature(&topo, &ls, &mesh, 6).unwrap();
        let cut_measure: f64 = q
            .volume
            .iter()
            .filter(|p| p.elem == 1)
            .map(|p| p.w)
            .sum();
        assert_relative_eq!(cut_measure, 0.06, epsilon = 1e-13);
        // x * t over the cut part of element 1:
        // 1/2 int_0^0.2 t ((1+0.5t)^2 - 0.75^2) dt = 0.0057583333...
        let xt: f64 = q
            .volume
            .iter()
            .filter(|p| p.elem == 1)
            .map(|p| p.w * p.x * p.t)
            .sum();
        let exact = 0.5 * (0.4375 * 0.02 + 0.008 / 3.0 + 0.0625 * 0.0016);
        assert_relative_eq!(xt, exact, epsilon = 1e-13);
        // uncut element keeps the tensor measure dt * len
        let full: f64 = q
            .volume
            .iter()
            .filter(|p| p.elem == 0)
            .map(|p| p.w)
            .sum();
        assert_relative_eq!(full, 0.2 * 0.75, epsilon = 1e-13);
        // all weights positive
        assert!(q.volume.iter().all(|p| p.w > 0.0));
    }

    #[test]
    fn cut_volume_monte_carlo_oracle() {
        // same region, integrand x*t, against a seeded 2e6-point MC estimate
        let data = custom_geometry(
            "mv",
            (0.0, 1.5),
            0.2,
            |x, t| x - 1.0 - 0.5 * t,
            |_, _| 1.0,
            |_, _| 0.5,
        );
        let mesh = build_mesh(0.0, 1.5, 2).unwrap();
        let tp = build_time_partition(0.2, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let q = build_quadrature(&topo, &ls, &mesh, 6).unwrap();
        let quad_val = integrate_volume(&q, |x, t| x * t);
        let mut rng = StdRng::seed_from_u64(7);
        let n = 2_000_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        let vol_box = 1.5 * 0.2;
        for _ in 0..n {
            let x = rng.gen_range(0.0..1.5);
            let t = rng.gen_range(0.0..0.2);
            let v = if x - 1.0 - 0.5 * t < 0.0 { x * t } else { 0.0 };
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean).max(0.0);
        let mc = vol_box * mean;
        let sigma = vol_box * (var / n as f64).sqrt();
        assert!(
            (quad_val - mc).abs() < 3.0 * sigma,
            "quad {quad_val} vs mc {mc} +- {sigma}"
        );
    }

    #[test]
    fn random_affine_levelsets_match_reference() {
        // random affine-in-x, polynomial-in-t level sets: order-8 rule vs a
        // high-order reference for monomials x^i t^j
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..5 {
            let a0: f64 = rng.gen_range(-0.5..0.5);
            let a1: f64 = rng.gen_range(-1.0..1.0);
            let a2: f64 = rng.gen_range(-1.0..1.0);
            let b0: f64 = rng.gen_range(0.5..1.5);
            let data = custom_geometry(
                "rand",
                (0.0, 2.0),
                0.3,
                move |x, t| b0 * (x - 1.0) + a0 + a1 * t + a2 * t * t,
                move |_, _| b0,
                |_, _| 0.0,
            );
            let mesh = build_mesh(0.0, 2.0, 4).unwrap();
            let tp = build_time_partition(0.3, 1).unwrap();
            let (ls, topo) = setup(&data, &mesh, &tp, (1, 2), 0);
            let q8 = build_quadrature(&topo, &ls, &mesh, 8).unwrap();
            let q24 = build_quadrature(&topo, &ls, &mesh, 24).unwrap();
            for (i, j) in [(0, 0), (1, 0), (0, 1), (2, 1), (3, 2)] {
                let f = |x: f64, t: f64| x.powi(i) * t.powi(j);
                let v8 = integrate_volume(&q8, f);
                let v24 = integrate_volume(&q24, f);
                assert!(
                    (v8 - v24).abs() < 1e-10,
                    "monomial ({i},{j}): {v8} vs {v24}"
                );
            }
        }
    }

    #[test]
    fn boundary_rule_static_point() {
        let data = custom_geometry("s", (0.0, 3.0), 1.0, |x, _| x - 1.0, |_, _| 1.0, |_, _| 0.0);
        let mesh = build_mesh(0.0, 3.0, 4).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let q = build_quadrature(&topo, &ls, &mesh, 4).unwrap();
        // integrand u(x,t) = t at the single boundary point x = 1
        let val: f64 = q.boundary.iter().map(|p| p.w * p.t).sum();
        assert_relative_eq!(val, 0.5, epsilon = 1e-13);
        for p in &q.boundary {
            assert_relative_eq!(p.x, 1.0, epsilon = 1e-13);
            assert_relative_eq!(p.xdot, 0.0, epsilon = 1e-13);
            assert_relative_eq!(p.normal, 1.0);
        }
    }

    #[test]
    fn boundary_rule_moving_interface_velocity() {
        let data = custom_geometry(
            "mv",
            (0.0, 1.5),
            0.2,
            |x, t| x - 1.0 - 0.5 * t,
            |_, _| 1.0,
            |_, _| 0.5,
        );
        let mesh = build_mesh(0.0, 1.5, 2).unwrap();
        let tp = build_time_partition(0.2, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let q = build_quadrature(&topo, &ls, &mesh, 4).unwrap();
        assert!(!q.boundary.is_empty());
        for p in &q.boundary {
            assert_relative_eq!(p.xdot, 0.5, epsilon = 1e-12);
            assert_relative_eq!(p.x, 1.0 + 0.5 * p.t, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_boundary_points() {
        let data = custom_geometry(
            "two",
            (0.0, 2.0),
            0.2,
            |x, _| (x - 0.6) * (x - 1.4),
            |x, _| 2.0 * x - 2.0,
            |_, _| 0.0,
        );
        let mesh = build_mesh(0.0, 2.0, 5).unwrap();
        let tp = build_time_partition(0.2, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let q = build_quadrature(&topo, &ls, &mesh, 4).unwrap();
        let total: f64 = q.boundary.iter().map(|p| p.w).sum();
        assert_relative_eq!(total, 2.0 * 0.2, epsilon = 1e-13);
        // normals point out of the inside region
        for p in &q.boundary {
            if p.x < 1.0 {
                assert_relative_eq!(p.normal, -1.0);
            } else {
                assert_relative_eq!(p.normal, 1.0);
            }
        }
    }

    #[test]
    fn slice_rules() {
        let data = custom_geometry("s", (0.0, 3.0), 1.0, |x, _| x - 1.0, |_, _| 1.0, |_, _| 0.0);
        let mesh = build_mesh(0.0, 3.0, 4).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let sl = slice_quadrature(&topo, &ls, &mesh, 0.37, 4).unwrap();
        let meas: f64 = sl.iter().map(|p| p.w).sum();
        assert_relative_eq!(meas, 1.0, epsilon = 1e-13);

        // int x over (0, 1 + 0.5 t) at t = 0.2 is 1.1^2/2 = 0.605
        let data2 = custom_geometry(
            "mv",
            (0.0, 1.5),
            0.4,
            |x, t| x - 1.0 - 0.5 * t,
            |_, _| 1.0,
            |_, _| 0.5,
        );
        let mesh2 = build_mesh(0.0, 1.5, 2).unwrap();
        let tp2 = build_time_partition(0.4, 1).unwrap();
        let (ls2, topo2) = setup(&data2, &mesh2, &tp2, (1, 1), 0);
        let sl2 = slice_quadrature(&topo2, &ls2, &mesh2, 0.2, 4).unwrap();
        let xint: f64 = sl2.iter().map(|p| p.w * p.x).sum();
        assert_relative_eq!(xint, 0.605, epsilon = 1e-13);
    }

    #[test]
    fn ms1_slice_measure_near_exact() {
        let data = ms1();
        let mesh = build_mesh(0.0, 3.0, 4).unwrap();
        let tp = build_time_partition(0.5, 5).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        let sl = slice_quadrature(&topo, &ls, &mesh, 0.0, 4).unwrap();
        let meas: f64 = sl.iter().map(|p| p.w).sum();
        // phi^lin interpolates a quadratic: measure error O(h^2); at
        // h = 0.75 the error is still around 0.28
        assert!((meas - 1.0).abs() < 0.5, "measure {meas}");
        let mesh_fine = build_mesh(0.0, 3.0, 32).unwrap();
        let ls_f = interpolate_levelset(&data, &mesh_fine, &tp, 1, 1);
        let topo_f = classify(&ls_f[0], &mesh_fine, 0).unwrap();
        let sl_f = slice_quadrature(&topo_f, &ls_f[0], &mesh_fine, 0.0, 4).unwrap();
        let meas_f: f64 = sl_f.iter().map(|p| p.w).sum();
        assert!((meas_f - 1.0).abs() < (meas - 1.0).abs() / 16.0, "no h^2 decay");
    }

    #[test]
    fn fubini_consistency() {
        // |Q^lin,n| computed by the volume rule equals the time integral of
        // slice measures over the same temporal Gauss points
        let data = ms1();
        let mesh = build_mesh(0.0, 2.0, 8).unwrap();
        let tp = build_time_partition(0.5, 4).unwrap();
        let (ls, topo) = setup(&data, &mesh, &tp, (2, 2), 1);
        let q = build_quadrature(&topo, &ls, &mesh, 6).unwrap();
        let vol: f64 = q.volume.iter().map(|p| p.w).sum();
        // regroup the same points by time
        let mut by_time: std::collections::BTreeMap<u64, f64> = Default::default();
        for p in &q.volume {
            *by_time.entry(p.t.to_bits()).or_insert(0.0) += p.w;
        }
        let fubini: f64 = by_time.values().sum();
        assert_relative_eq!(vol, fubini, epsilon = 1e-12);
    }

    #[test]
    fn ghost_facets_empty_without_cuts() {
        let data = custom_geometry("neg", (0.0, 1.0), 1.0, |_, _| -1.0, |_, _| 0.0, |_, _| 0.0);
        let mesh = build_mesh(0.0, 1.0, 8).unwrap();
        let tp = build_time_partition(1.0, 1).unwrap();
        let (_, topo) = setup(&data, &mesh, &tp, (1, 1), 0);
        assert!(topo.ghost_facets.is_empty());
    }
}
