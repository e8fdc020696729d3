//! Intrinsic balls on a lattice over a chart, and the growth machinery.
//!
//! The lattice is regular in parameter space and contains the chart's base
//! point as a node. The intrinsic distance `ρ` is computed by a
//! label-correcting Dijkstra over the metric-weighted neighbour graph; for
//! two-dimensional charts each update also considers the eight lattice
//! triangles around a node, minimizing over the opposite edge with `ρ`
//! interpolated linearly. This removes most of the direction bias of
//! graph distances (pure 8-neighbour balls are octagons).
//!
//! Ball integrals use a smoothed indicator: node `i` counts with weight
//! `clamp((μ − ρ_i + w_i) / 2w_i)`, where `w_i` is half the spread of `ρ`
//! across the node's cell. Boundary integrals are obtained by
//! differentiating ball integrals in `μ`. Weighting the integrand by
//! `|∇ρ_D|` (the lattice gradient of `ρ`) makes this the exact discrete
//! counterpart of the coarea step, so `F`, `G` and the boundary flux all
//! carry that weight while `f` does not.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparison::{Alpha, ComparisonProfile, Curvature};
use crate::error::{Error, Result};
use crate::fields::OperatorField;
use crate::geometry::{Axis, ImmersionChart};

/// Minimum node count along any axis.
pub const MIN_RESOLUTION: usize = 32;

/// One lattice axis: nodes at `start + k · step`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeAxis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
    pub periodic: bool,
    /// Index of the base point.
    pub center: usize,
}

impl LatticeAxis {
    fn build(axis: &Axis, base: f64, step: f64) -> Self {
        if axis.periodic {
            let len = axis.length();
            let count = ((len / step).round() as usize).max(MIN_RESOLUTION);
            return Self {
                start: base,
                step: len / count as f64,
                count,
                periodic: true,
                center: 0,
            };
        }
        let fit = |step: f64| {
            let below = ((base - axis.lo) / step + 1e-9).floor() as usize;
            let above = ((axis.hi - base) / step + 1e-9).floor() as usize;
            (below, above)
        };
        let (mut below, mut above) = fit(step);
        let mut step = step;
        if below + above + 1 < MIN_RESOLUTION {
            step = axis.length() / (MIN_RESOLUTION + 1) as f64;
            (below, above) = fit(step);
        }
        Self {
            start: base - below as f64 * step,
            step,
            count: below + above + 1,
            periodic: false,
            center: below,
        }
    }

    fn coord(&self, k: usize, axis: &Axis) -> f64 {
        axis.wrap(self.start + k as f64 * self.step)
    }

    /// Neighbour index `k + d`, wrapping on periodic axes.
    fn offset(&self, k: usize, d: i64) -> Option<usize> {
        let j = k as i64 + d;
        if self.periodic {
            Some(j.rem_euclid(self.count as i64) as usize)
        } else if (0..self.count as i64).contains(&j) {
            Some(j as usize)
        } else {
            None
        }
    }
}

/// A lattice node.
#[derive(Debug, Clone)]
pub struct Node {
    pub u: Vec<f64>,
    pub index: Vec<usize>,
    /// `√det g · Π Δu_a`.
    pub area: f64,
    /// Ambient distance to the base point.
    pub r: f64,
    /// Discrete intrinsic distance to the base point.
    pub rho: f64,
    /// Lattice partials `∂_a ρ`.
    pub drho: DVector<f64>,
    /// `|∇ρ_D|_g`.
    pub grad_rho_norm: f64,
    /// Half the spread of `ρ` across the cell.
    pub width: f64,
    pub metric: DMatrix<f64>,
}

impl Node {
    /// Weight of this node in `B_μ`.
    pub fn fraction(&self, mu: f64) -> f64 {
        let lo = (self.rho - self.width).max(0.0);
        let hi = self.rho + self.width;
        if hi - lo <= f64::EPSILON * (1.0 + hi) {
            return if mu >= self.rho { 1.0 } else { 0.0 };
        }
        ((mu - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Discrete geodesic balls around the base point of a chart.
#[derive(Debug, Clone)]
pub struct MeshedBall {
    chart: ImmersionChart,
    lattice: Vec<LatticeAxis>,
    nodes: Vec<Node>,
    center: usize,
    spacing: f64,
    interior_radius: f64,
    radius_cap: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Neighbour offsets in counter-clockwise order, for two-dimensional
/// lattices; consecutive pairs span the lattice triangles.
const RING: [[i64; 2]; 8] = [
    [1, 0],
    [1, 1],
    [0, 1],
    [-1, 1],
    [-1, 0],
    [-1, -1],
    [0, -1],
    [1, -1],
];

fn quad_norm(g: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    (d.dot(&(g * d))).max(0.0).sqrt()
}

/// `min_{t∈[0,1]} T_a + t (T_b − T_a) + |e_a + t (e_b − e_a)|_g`.
fn triangle_update(g: &DMatrix<f64>, ea: &DVector<f64>, eb: &DVector<f64>, ta: f64, tb: f64) -> f64 {
    let w = eb - ea;
    let a = w.dot(&(g * &w));
    let b = ea.dot(&(g * &w));
    let c = ea.dot(&(g * ea));
    let delta = tb - ta;
    let phi = |t: f64| ta + t * delta + (a * t * t + 2.0 * b * t + c).max(0.0).sqrt();
    let mut best = phi(0.0).min(phi(1.0));
    let d = a * c - b * b;
    if a > delta * delta && d > 0.0 {
        let s = -delta.signum() * delta.abs() * (d / (a - delta * delta)).sqrt();
        let t = (s - b) / a;
        if (0.0..=1.0).contains(&t) {
            best = best.min(phi(t));
        }
    }
    best
}

impl MeshedBall {
    pub fn chart(&self) -> &ImmersionChart {
        &self.chart
    }

    pub fn lattice(&self) -> &[LatticeAxis] {
        &self.lattice
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Target metric lattice spacing at the base point.
    pub fn metric_spacing(&self) -> f64 {
        self.spacing
    }

    /// Smallest `ρ` on the non-periodic boundary of the box.
    pub fn interior_radius(&self) -> f64 {
        self.interior_radius
    }

    pub fn radius_cap(&self) -> f64 {
        self.radius_cap
    }

    /// Largest `μ` for which `B_μ` stays inside the box and the cap.
    pub fn usable_radius(&self) -> f64 {
        self.interior_radius.min(self.radius_cap)
    }

    /// `∫_{B_μ} v` by cell quadrature.
    pub fn integrate(&self, mu: f64, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        self.nodes
            .iter()
            .zip(values)
            .map(|(n, &v)| {
                let w = n.fraction(mu);
                if w == 0.0 {
                    0.0
                } else {
                    w * v * n.area
                }
            })
            .sum()
    }

    /// Nodes straddling `∂B_μ`.
    pub fn boundary_cells(&self, mu: f64) -> usize {
        self.nodes
            .iter()
            .filter(|n| {
                let w = n.fraction(mu);
                w > 0.0 && w < 1.0
            })
            .count()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.lattice)
            .fold(0, |acc, (&k, ax)| acc * ax.count + k)
    }

    /// Lattice neighbours of node `i` with their parameter displacements.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, DVector<f64>)> {
        let m = self.lattice.len();
        let idx = &self.nodes[i].index;
        let mut out = Vec::with_capacity(3usize.pow(m as u32) - 1);
        for code in 0..3usize.pow(m as u32) {
            let mut c = code;
            let mut off = vec![0i64; m];
            for o in off.iter_mut() {
                *o = (c % 3) as i64 - 1;
                c /= 3;
            }
            if off.iter().all(|&o| o == 0) {
                continue;
            }
            if let Some(j) = self.shifted(idx, &off) {
                let d = DVector::from_iterator(
                    m,
                    off.iter().zip(&self.lattice).map(|(&o, ax)| o as f64 * ax.step),
                );
                out.push((j, d));
            }
        }
        out
    }

    fn shifted(&self, idx: &[usize], off: &[i64]) -> Option<usize> {
        let mut v = Vec::with_capacity(idx.len());
        for ((&k, &o), ax) in idx.iter().zip(off).zip(&self.lattice) {
            v.push(ax.offset(k, o)?);
        }
        Some(self.flat_index(&v))
    }

    /// Metric length of the lattice edge from `i` along `d`.
    pub fn edge_length(&self, i: usize, j: usize, d: &DVector<f64>) -> f64 {
        0.5 * (quad_norm(&self.nodes[i].metric, d) + quad_norm(&self.nodes[j].metric, d))
    }

    /// Largest relative excess `(|ρ_a − ρ_b| − ℓ_ab) / ℓ_ab` over all edges.
    pub fn edge_triangle_excess(&self) -> f64 {
        (0..self.nodes.len())
            .map(|i| {
                self.neighbors(i)
                    .into_iter()
                    .map(|(j, d)| {
                        let l = self.edge_length(i, j, &d);
                        ((self.nodes[i].rho - self.nodes[j].rho).abs() - l) / l
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Node closest to parameter point `u` (by lattice rounding).
    pub fn nearest_node(&self, u: &[f64]) -> Option<usize> {
        let axes = self.chart.axes();
        let mut idx = Vec::with_capacity(u.len());
        for ((ax, a), &x) in self.lattice.iter().zip(axes).zip(u) {
            let k = ((x - ax.start) / ax.step).round() as i64;
            let k = if ax.periodic {
                let _ = a;
                k.rem_euclid(ax.count as i64)
            } else if (0..ax.count as i64).contains(&k) {
                k
            } else {
                return None;
            };
            idx.push(k as usize);
        }
        Some(self.flat_index(&idx))
    }

    fn relax(&self, j: usize, rho: &[f64]) -> f64 {
        let node = &self.nodes[j];
        let mut best = rho[j];
        for (k, d) in self.neighbors(j) {
            if rho[k].is_finite() {
                best = best.min(rho[k] + self.edge_length(j, k, &d));
            }
        }
        if self.lattice.len() == 2 {
            let idx = &node.index;
            let steps = [self.lattice[0].step, self.lattice[1].step];
            for t in 0..8 {
                let (oa, ob) = (RING[t], RING[(t + 1) % 8]);
                let (Some(a), Some(b)) = (self.shifted(idx, &oa), self.shifted(idx, &ob)) else {
                    continue;
                };
                if !(rho[a].is_finite() && rho[b].is_finite()) {
                    continue;
                }
                let ea = DVector::from_vec(vec![oa[0] as f64 * steps[0], oa[1] as f64 * steps[1]]);
                let eb = DVector::from_vec(vec![ob[0] as f64 * steps[0], ob[1] as f64 * steps[1]]);
                // Half the weight on the updated node, as in the edge rule; an
                // equal three-way split biases ρ low where the metric grows.
                let g = &node.metric * 0.5 + (&self.nodes[a].metric + &self.nodes[b].metric) * 0.25;
                best = best.min(triangle_update(&g, &ea, &eb, rho[a], rho[b]));
            }
        }
        best
    }

    fn solve_distance(&mut self) -> Result<()> {
        let n = self.nodes.len();
        let mut rho = vec![f64::INFINITY; n];
        rho[self.center] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Entry(0.0, self.center));
        while let Some(Entry(t, i)) = heap.pop() {
            if t > rho[i] {
                continue;
            }
            for (j, _) in self.neighbors(i) {
                if j == self.center {
                    continue;
                }
                let cand = self.relax(j, &rho);
                if cand < rho[j] * (1.0 - 1e-12) {
                    rho[j] = cand;
                    heap.push(Entry(cand, j));
                }
            }
        }
        let unreached = rho.iter().filter(|r| !r.is_finite()).count();
        if unreached > 0 {
            return Err(Error::MeshDisconnected { unreached });
        }
        for (node, r) in self.nodes.iter_mut().zip(rho) {
            node.rho = r;
        }
        Ok(())
    }

    fn finish_gradients(&mut self) {
        let m = self.lattice.len();
        let grads: Vec<DVector<f64>> = (0..self.nodes.len())
            .map(|i| {
                let idx = &self.nodes[i].index;
                DVector::from_iterator(
                    m,
                    (0..m).map(|a| {
                        let ax = &self.lattice[a];
                        let mut off = vec![0i64; m];
                        off[a] = 1;
                        let up = self.shifted(idx, &off);
                        off[a] = -1;
                        let down = self.shifted(idx, &off);
                        let here = self.nodes[i].rho;
                        match (up, down) {
                            (Some(p), Some(q)) => (self.nodes[p].rho - self.nodes[q].rho) / (2.0 * ax.step),
                            (Some(p), None) => (self.nodes[p].rho - here) / ax.step,
                            (None, Some(q)) => (here - self.nodes[q].rho) / ax.step,
                            (None, None) => 0.0,
                        }
                    }),
                )
            })
            .collect();
        for (node, d) in self.nodes.iter_mut().zip(grads) {
            let inv = node.metric.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(m, m));
            node.grad_rho_norm = d.dot(&(&inv * &d)).max(0.0).sqrt();
            node.width = 0.5
                * d.iter()
                    .zip(&self.lattice)
                    .map(|(g, ax)| g.abs() * ax.step)
                    .sum::<f64>();
            node.drho = d;
        }
    }
}

/// Builds the lattice over `chart` and computes `ρ` from the base point.
///
/// The metric spacing is the longest axis (in the base-point metric) divided
/// by `resolution − 1`; axes with fewer than [`MIN_RESOLUTION`] nodes at that
/// spacing are refined to exactly that many intervals plus one.
pub fn mesh_and_distance(chart: &ImmersionChart, resolution: usize, radius_cap: f64) -> Result<MeshedBall> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::Domain(format!(
            "resolution {resolution} is below the minimum of {MIN_RESOLUTION} nodes per axis"
        )));
    }
    if !(radius_cap > 0.0) {
        return Err(Error::Domain(format!("radius cap must be positive, got {radius_cap}")));
    }
    let base = chart.base_point().to_vec();
    let g0 = chart.frame_at(&base)?.metric;
    let axes = chart.axes();
    let scales: Vec<f64> = (0..axes.len()).map(|a| g0[(a, a)].sqrt()).collect();
    let longest = axes
        .iter()
        .zip(&scales)
        .map(|(ax, s)| ax.length() * s)
        .fold(0.0f64, f64::max);
    let spacing = longest / (resolution - 1) as f64;
    let lattice: Vec<LatticeAxis> = axes
        .iter()
        .zip(&base)
        .zip(&scales)
        .map(|((ax, &b), s)| LatticeAxis::build(ax, b, spacing / s))
        .collect();

    let m = lattice.len();
    let total: usize = lattice.iter().map(|a| a.count).product();
    let cell: f64 = lattice.iter().map(|a| a.step).product();
    let x0 = chart.base_position();
    let amb = *chart.ambient();
    let nodes: Vec<Node> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; m];
            let mut rest = flat;
            for a in (0..m).rev() {
                idx[a] = rest % lattice[a].count;
                rest /= lattice[a].count;
            }
            let u: Vec<f64> = idx
                .iter()
                .zip(&lattice)
                .zip(axes)
                .map(|((&k, la), ax)| la.coord(k, ax))
                .collect();
            let t = chart.tangents(&u);
            let metric = DMatrix::from_fn(m, m, |i, j| amb.inner(&t[i], &t[j]));
            let det = metric.determinant();
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::DegenerateChart {
                    location: u,
                    reason: format!("metric determinant {det}"),
                });
            }
            let r = amb.distance(&chart.eval(&u), &x0);
            Ok(Node {
                area: det.sqrt() * cell,
                r,
                rho: f64::INFINITY,
                drho: DVector::zeros(m),
                grad_rho_norm: 0.0,
                width: 0.0,
                metric,
                u,
                index: idx,
            })
        })
        .collect::<Result<_>>()?;

    let center_idx: Vec<usize> = lattice.iter().map(|a| a.center).collect();
    let center = center_idx
        .iter()
        .zip(&lattice)
        .fold(0, |acc, (&k, ax)| acc * ax.count + k);
    let mut ball = MeshedBall {
        chart: chart.clone(),
        lattice,
        nodes,
        center,
        spacing,
        interior_radius: f64::INFINITY,
        radius_cap,
    };
    ball.solve_distance()?;
    ball.finish_gradients();
    ball.interior_radius = ball
        .nodes
        .iter()
        .filter(|n| {
            n.index
                .iter()
                .zip(&ball.lattice)
                .any(|(&k, ax)| !ax.periodic && (k == 0 || k + 1 == ax.count))
        })
        .map(|n| n.rho)
        .fold(f64::INFINITY, f64::min);
    Ok(ball)
}

/// Field data needed by the growth machinery at one node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeSample {
    pub sampled: bool,
    pub tr_phi: f64,
    pub min_eigenvalue: f64,
    /// `|H_Φ + div Φ|`.
    pub mean_div_norm: f64,
    /// `|Φ∇r|`, zero at the base point.
    pub phi_grad_r: f64,
    /// `⟨Φ∇r, ∇ρ_D⟩`, zero at the base point.
    pub flux: f64,
    /// `λ` for scalar fields `λ^s I`.
    pub lambda: f64,
    pub grad_lambda_norm: f64,
    /// `|H|`.
    pub mean_curvature_norm: f64,
    /// `max |eigenvalue|` of `Φ`.
    pub phi_norm: f64,
}

/// Samples `field` at every node with `ρ ≤ radius`; other nodes get a
/// default (unsampled, zero) entry.
pub fn sample_nodes(ball: &MeshedBall, field: &OperatorField, radius: f64) -> Result<Vec<NodeSample>> {
    let x0 = ball.chart().base_position();
    let scalar = field.scalar();
    ball.nodes()
        .par_iter()
        .map(|node| {
            if node.rho > radius {
                return Ok(NodeSample::default());
            }
            let s = field.sample(&node.u)?;
            let frame = &s.frame;
            let amb = frame.ambient;
            let (phi_grad_r, flux) = match amb.radial_gradient(&frame.point, &x0) {
                Some((_, grad)) => {
                    let v = &s.phi_mixed * frame.tangent_coords(&grad);
                    (frame.g_norm(&v), v.dot(&node.drho))
                }
                None => (0.0, 0.0),
            };
            let (lambda, grad_lambda_norm) = match scalar {
                Some((l, _)) => {
                    let d = l.partials(&node.u, ball.chart().stencil());
                    (l.value(&node.u), d.dot(&(&frame.metric_inv * &d)).max(0.0).sqrt())
                }
                None => (0.0, 0.0),
            };
            let eig = s.phi.eigenvalues();
            Ok(NodeSample {
                sampled: true,
                tr_phi: s.trace,
                min_eigenvalue: s.min_eigenvalue,
                mean_div_norm: amb.norm(&s.mean_plus_divergence()),
                phi_grad_r,
                flux,
                lambda,
                grad_lambda_norm,
                mean_curvature_norm: amb.norm(&frame.mean_curvature_vector()),
                phi_norm: eig.iter().fold(0.0f64, |a, x| a.max(x.abs())),
            })
        })
        .collect()
}

/// Tail-window minima standing in for `liminf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRates {
    pub window: (f64, f64),
    /// `min f(μ) / ln μ` over window points with `μ > 1`.
    pub per_log: Option<f64>,
    /// `min f(μ) / μ`.
    pub per_linear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub dim: usize,
    pub mu: Vec<f64>,
    pub f: Vec<f64>,
    #[serde(rename = "F")]
    pub big_f: Vec<f64>,
    #[serde(rename = "G")]
    pub big_g: Vec<f64>,
    pub mu0: f64,
    pub g_mu0: f64,
    pub lambda: f64,
    pub tr_phi_q0: f64,
    pub rates: TailRates,
}

impl GrowthCurve {
    /// Slope of `f` between the grid points nearest to `a` and `b`.
    pub fn slope(&self, a: f64, b: f64) -> f64 {
        let near = |x: f64| {
            (0..self.mu.len())
                .min_by(|&i, &j| (self.mu[i] - x).abs().total_cmp(&(self.mu[j] - x).abs()))
                .unwrap_or(0)
        };
        let (i, j) = (near(a), near(b));
        (self.f[j] - self.f[i]) / (self.mu[j] - self.mu[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthOptions {
    pub mu_max: f64,
    /// Defaults to `0.1 · mu_max`.
    pub mu0: Option<f64>,
    /// Whether `Λ` is required, which needs `trΦ(q₀) > 0`.
    pub require_lambda: bool,
}

impl GrowthOptions {
    pub fn new(mu_max: f64) -> Self {
        Self {
            mu_max,
            mu0: None,
            require_lambda: true,
        }
    }

    pub fn mu0(&self) -> f64 {
        self.mu0.unwrap_or(0.1 * self.mu_max)
    }
}

fn check_samples(ball: &MeshedBall, samples: &[NodeSample], radius: f64) -> Result<()> {
    if samples.len() != ball.len() {
        return Err(Error::Domain(format!(
            "{} samples for a lattice of {} nodes",
            samples.len(),
            ball.len()
        )));
    }
    if let Some(n) = ball
        .nodes()
        .iter()
        .zip(samples)
        .find(|(n, s)| !s.sampled && n.rho - n.width < radius)
    {
        return Err(Error::Domain(format!(
            "node at {:?} (ρ = {}) is inside the requested radius {radius} but was not sampled",
            n.0.u, n.0.rho
        )));
    }
    Ok(())
}

/// `f`, `F`, `G` and `Λ` on a `μ`-grid with spacing close to twice the
/// lattice spacing.
pub fn growth_curve(
    ball: &MeshedBall,
    samples: &[NodeSample],
    profile: &ComparisonProfile,
    options: GrowthOptions,
) -> Result<GrowthCurve> {
    let mu_max = options.mu_max;
    let mu0 = options.mu0();
    if !(mu_max > 0.0 && mu0 > 0.0 && mu0 < mu_max) {
        return Err(Error::Domain(format!(
            "need 0 < mu0 < mu_max, got mu0 = {mu0}, mu_max = {mu_max}"
        )));
    }
    let steps = (mu_max / (2.0 * ball.metric_spacing())).ceil().max(2.0) as usize;
    let dmu = mu_max / steps as f64;
    let usable = ball.usable_radius();
    if mu_max + dmu > usable {
        return Err(Error::Domain(format!(
            "mu_max + dμ = {} exceeds the usable lattice radius {usable}",
            mu_max + dmu
        )));
    }
    let limit = profile.limit();
    if mu_max + 2.0 * dmu > limit {
        return Err(Error::ProfileDomain {
            r: mu_max + 2.0 * dmu,
            limit,
        });
    }
    check_samples(ball, samples, mu_max + dmu)?;

    let tr_phi_q0 = samples[ball.center()].tr_phi;
    if options.require_lambda && !(tr_phi_q0 > 0.0) {
        return Err(Error::HypothesisViolated {
            check: "trace at base point".into(),
            certificate: format!("trΦ(q₀) = {tr_phi_q0}"),
        });
    }

    let alpha = profile.alpha();
    let mut tr = Vec::with_capacity(samples.len());
    let mut hw = Vec::with_capacity(samples.len());
    let mut gw = Vec::with_capacity(samples.len());
    for (n, s) in ball.nodes().iter().zip(samples) {
        tr.push(s.tr_phi);
        if s.sampled && n.r < limit {
            let (h, dh) = (profile.h(n.r)?, profile.dh(n.r)?);
            hw.push(h * s.tr_phi * n.grad_rho_norm);
            gw.push((dh - alpha.value(n.r) * h) * s.tr_phi * n.grad_rho_norm);
        } else {
            hw.push(0.0);
            gw.push(0.0);
        }
    }

    let mu: Vec<f64> = (0..=steps).map(|k| k as f64 * dmu).collect();
    let rows: Vec<(f64, f64, f64)> = mu
        .par_iter()
        .map(|&m| {
            let f = ball.integrate(m, &tr);
            let big_f = if m == 0.0 {
                0.0
            } else {
                (ball.integrate(m + dmu, &hw) - ball.integrate(m - dmu, &hw)) / (2.0 * dmu)
            };
            (f, big_f, ball.integrate(m, &gw))
        })
        .collect();
    let g_mu0 = ball.integrate(mu0, &gw);
    let lambda = g_mu0 / profile.h(mu0)?;

    let window = (0.6 * mu_max, mu_max);
    let tail: Vec<(f64, f64)> = mu
        .iter()
        .zip(&rows)
        .filter(|(m, _)| **m >= window.0 - 1e-12)
        .map(|(&m, r)| (m, r.0))
        .collect();
    let per_linear = tail.iter().map(|(m, f)| f / m).fold(f64::INFINITY, f64::min);
    let logs: Vec<f64> = tail.iter().filter(|(m, _)| *m > 1.0).map(|(m, f)| f / m.ln()).collect();
    let per_log = if logs.is_empty() {
        None
    } else {
        Some(logs.into_iter().fold(f64::INFINITY, f64::min))
    };

    Ok(GrowthCurve {
        dim: ball.chart().dim(),
        mu,
        f: rows.iter().map(|r| r.0).collect(),
        big_f: rows.iter().map(|r| r.1).collect(),
        big_g: rows.iter().map(|r| r.2).collect(),
        mu0,
        g_mu0,
        lambda,
        tr_phi_q0,
        rates: TailRates {
            window,
            per_log,
            per_linear,
        },
    })
}

/// `m ∫₀^μ h(τ)^{m−1} e^{−m∫₀^τ α} dτ` by composite Simpson.
pub fn phi_r_integral(profile: &ComparisonProfile, m: usize, mu: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Ok(0.0);
    }
    let n = {
        let k = ((mu / profile.step()).ceil() as usize).max(64);
        k + k % 2
    };
    let dt = mu / n as f64;
    let alpha = profile.alpha();
    let weight = |t: f64| -> Result<f64> {
        Ok(profile.h(t)?.powi(m as i32 - 1) * (-(m as f64) * alpha.integral(0.0, t)).exp())
    };
    let mut sum = weight(0.0)? + weight(mu)?;
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += c * weight(k as f64 * dt)?;
    }
    Ok(m as f64 * sum * dt / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    /// `f ≥ Λ ∫_{μ₀}^μ e^{−∫_{μ₀}^τ α}` for any admissible profile.
    General,
    /// Flat profile with `α = 1/(t+ε)`: `Λ(μ₀+ε) log((μ+ε)/(μ₀+ε))`.
    Logarithmic,
    /// Flat profile with `α = 0`: `Λ(μ − μ₀)`.
    Linear,
    /// `f ≥ m trΦ(q₀) ∫₀^μ h^{m−1} e^{−m∫α}`.
    PhiR,
    /// `𝒦 = −c²`, `α = (m−1)c/m`:
    /// `(m/(2c)^{m−1}) trΦ(q₀) ∫₀^μ (1 − (m−1)e^{−2cτ}) dτ`.
    HyperbolicRate,
}

impl TheoremId {
    pub fn name(self) -> &'static str {
        match self {
            Self::General => "general",
            Self::Logarithmic => "logarithmic",
            Self::Linear => "linear",
            Self::PhiR => "phi_r",
            Self::HyperbolicRate => "hyperbolic_rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Self::General,
            Self::Logarithmic,
            Self::Linear,
            Self::PhiR,
            Self::HyperbolicRate,
        ]
        .into_iter()
        .find(|t| t.name() == s)
    }

    fn needs_gradient_bound(self) -> bool {
        matches!(self, Self::PhiR | Self::HyperbolicRate)
    }

    fn uses_mu0(self) -> bool {
        matches!(self, Self::General | Self::Logarithmic | Self::Linear)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub mu: f64,
    pub f: f64,
    #[serde(rename = "F")]
    pub big_f: f64,
    #[serde(rename = "G")]
    pub big_g: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem: TheoremId,
    /// Rows in the valid window only.
    pub rows: Vec<BoundRow>,
    pub satisfied: bool,
    pub min_margin: f64,
    pub tolerance: f64,
}

fn profile_mismatch(theorem: TheoremId, what: &str) -> Error {
    Error::Domain(format!("theorem `{}` needs {what}", theorem.name()))
}

/// Evaluates the lower bound of `theorem` on the curve's grid.
///
/// `hypotheses` must contain a passing [`HypothesisKind::AlphaBound`] report,
/// and also a passing [`HypothesisKind::GradientBound`] report for
/// [`TheoremId::PhiR`] and [`TheoremId::HyperbolicRate`].
pub fn theorem_bound(
    curve: &GrowthCurve,
    profile: &ComparisonProfile,
    theorem: TheoremId,
    hypotheses: &[HypothesisReport],
    tol: f64,
) -> Result<TheoremReport> {
    let mut required = vec![HypothesisKind::AlphaBound];
    if theorem.needs_gradient_bound() {
        required.push(HypothesisKind::GradientBound);
    }
    for kind in required {
        match hypotheses.iter().find(|h| h.kind == kind) {
            None => {
                return Err(Error::HypothesisViolated {
                    check: kind.name().into(),
                    certificate: "not evaluated".into(),
                })
            }
            Some(h) if !h.verdict => {
                return Err(Error::HypothesisViolated {
                    check: kind.name().into(),
                    certificate: h.certificate(),
                })
            }
            Some(_) => {}
        }
    }

    let m = curve.dim;
    let alpha = profile.alpha();
    let flat = profile.curvature().constant_value() == Some(0.0);
    match theorem {
        TheoremId::Logarithmic if !(flat && matches!(alpha, Alpha::InverseShifted(_))) => {
            return Err(profile_mismatch(theorem, "𝒦 = 0 and α = 1/(t+ε)"))
        }
        TheoremId::Linear if !(flat && matches!(alpha, Alpha::Zero)) => {
            return Err(profile_mismatch(theorem, "𝒦 = 0 and α = 0"))
        }
        _ => {}
    }
    let c = match theorem {
        TheoremId::HyperbolicRate => {
            let k = profile
                .curvature()
                .constant_value()
                .filter(|k| *k < 0.0)
                .ok_or_else(|| profile_mismatch(theorem, "𝒦 = −c² with c > 0"))?;
            let c = (-k).sqrt();
            let expected = (m as f64 - 1.0) * c / m as f64;
            let ok = match alpha {
                Alpha::Constant(a) => (a - expected).abs() <= 1e-12 * (1.0 + expected),
                Alpha::Zero => m == 1,
                Alpha::InverseShifted(_) => false,
            };
            if !ok {
                return Err(profile_mismatch(theorem, "α = (m−1)c/m"));
            }
            c
        }
        _ => 0.0,
    };

    let valid = profile.valid_radius();
    let mut rows = Vec::new();
    for (k, &mu) in curve.mu.iter().enumerate() {
        if !(mu < valid) || (theorem.uses_mu0() && mu < curve.mu0) || mu == 0.0 {
            continue;
        }
        let bound = match theorem {
            TheoremId::General | TheoremId::Logarithmic | TheoremId::Linear => {
                curve.lambda * alpha.integral_of_decay(curve.mu0, mu)
            }
            TheoremId::PhiR => curve.tr_phi_q0 * phi_r_integral(profile, m, mu)?,
            TheoremId::HyperbolicRate => {
                let mf = m as f64;
                mf / (2.0 * c).powi(m as i32 - 1)
                    * curve.tr_phi_q0
                    * (mu - (mf - 1.0) * (1.0 - (-2.0 * c * mu).exp()) / (2.0 * c))
            }
        };
        rows.push(BoundRow {
            mu,
            f: curve.f[k],
            big_f: curve.big_f[k],
            big_g: curve.big_g[k],
            bound,
            margin: curve.f[k] - bound,
        });
    }
    let satisfied = rows.iter().all(|r| r.f >= r.bound * (1.0 - tol));
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(TheoremReport {
        theorem,
        rows,
        satisfied,
        min_margin,
        tolerance: tol,
    })
}

/// On-grid checks of the inequalities between `f`, `F` and `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgReport {
    /// Smallest `F/G` over the window.
    pub f_over_g: f64,
    /// Smallest `F/(mG)`.
    pub f_over_mg: f64,
    /// Smallest `G / (Λ h e^{−∫_{μ₀}^μ α})`.
    pub g_over_lambda_bound: f64,
    /// Smallest `G / (trΦ(q₀) h^m e^{−m∫₀^μ α})`.
    pub g_over_trace_bound: f64,
    pub window: (f64, f64),
}

impl FgReport {
    pub fn f_geq_g(&self, slack: f64) -> bool {
        self.f_over_g >= 1.0 - slack
    }

    pub fn f_geq_mg(&self, slack: f64) -> bool {
        self.f_over_mg >= 1.0 - slack
    }

    pub fn g_geq_lambda_h(&self, slack: f64) -> bool {
        self.g_over_lambda_bound >= 1.0 - slack
    }

    pub fn g_geq_trace_h(&self, slack: f64) -> bool {
        self.g_over_trace_bound >= 1.0 - slack
    }
}

/// Ratios behind `F ≥ G`, `F ≥ mG` and the two lower bounds on `G`, over
/// grid points with `μ₀ ≤ μ` inside the profile's valid window. Near the
/// centre the discrete ball has too few cells for these to be meaningful.
pub fn fg_check(curve: &GrowthCurve, profile: &ComparisonProfile) -> Result<FgReport> {
    let m = curve.dim as f64;
    let alpha = profile.alpha();
    let valid = profile.valid_radius();
    let mut out = FgReport {
        f_over_g: f64::INFINITY,
        f_over_mg: f64::INFINITY,
        g_over_lambda_bound: f64::INFINITY,
        g_over_trace_bound: f64::INFINITY,
        window: (curve.mu0, curve.mu0),
    };
    for (k, &mu) in curve.mu.iter().enumerate() {
        if mu < curve.mu0 || !(mu < valid) {
            continue;
        }
        out.window.1 = mu;
        let (f, g) = (curve.big_f[k], curve.big_g[k]);
        let h = profile.h(mu)?;
        out.f_over_g = out.f_over_g.min(f / g);
        out.f_over_mg = out.f_over_mg.min(f / (m * g));
        let lb = curve.lambda * h * (-alpha.integral(curve.mu0, mu)).exp();
        out.g_over_lambda_bound = out.g_over_lambda_bound.min(g / lb);
        let tb = curve.tr_phi_q0 * h.powf(m) * (-m * alpha.integral(0.0, mu)).exp();
        out.g_over_trace_bound = out.g_over_trace_bound.min(g / tb);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisKind {
    /// `|H_Φ + div Φ| ≤ α(r) trΦ`, with `Φ ⪰ 0` and `K̄ ≤ 𝒦(r)`.
    AlphaBound,
    /// `m|Φ∇r| ≤ trΦ`.
    GradientBound,
    /// `|λH + p∇λ| ≤ κλ`.
    EndBall { p: f64, kappa: f64 },
}

impl HypothesisKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AlphaBound => "alpha_bound",
            Self::GradientBound => "gradient_bound",
            Self::EndBall { .. } => "end_ball",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub kind: HypothesisKind,
    pub verdict: bool,
    /// Smallest `rhs − lhs`.
    pub min_margin: f64,
    /// Smallest `(rhs − lhs) / (1 + |lhs| + |rhs|)`.
    pub min_relative_margin: f64,
    pub worst_location: Vec<f64>,
    pub nodes_checked: usize,
    pub positive_semidefinite: bool,
    pub curvature_bounded: bool,
    pub tolerance: f64,
    /// Per-node relative margins; `NaN` for nodes outside the radius.
    #[serde(skip)]
    pub margins: Vec<f64>,
}

impl HypothesisReport {
    pub fn certificate(&self) -> String {
        format!(
            "{}: min margin {:.3e} (relative {:.3e}) at {:?}; Φ ⪰ 0: {}; K̄ ≤ 𝒦: {}",
            self.kind.name(),
            self.min_margin,
            self.min_relative_margin,
            self.worst_location,
            self.positive_semidefinite,
            self.curvature_bounded
        )
    }
}

/// Evaluates a hypothesis inequality at every sampled node with `ρ ≤ radius`.
pub fn hypothesis_check(
    ball: &MeshedBall,
    samples: &[NodeSample],
    profile: &ComparisonProfile,
    kind: HypothesisKind,
    radius: f64,
    tol: f64,
) -> Result<HypothesisReport> {
    if samples.len() != ball.len() {
        return Err(Error::Domain(format!(
            "{} samples for a lattice of {} nodes",
            samples.len(),
            ball.len()
        )));
    }
    let m = ball.chart().dim() as f64;
    let alpha = profile.alpha();
    let ambient_k = ball.chart().ambient().curvature();
    let mut margins = vec![f64::NAN; samples.len()];
    let mut report = HypothesisReport {
        kind,
        verdict: true,
        min_margin: f64::INFINITY,
        min_relative_margin: f64::INFINITY,
        worst_location: vec![],
        nodes_checked: 0,
        positive_semidefinite: true,
        curvature_bounded: true,
        tolerance: tol,
        margins: vec![],
    };
    for (i, (n, s)) in ball.nodes().iter().zip(samples).enumerate() {
        if !s.sampled || n.rho > radius {
            continue;
        }
        let (lhs, rhs) = match kind {
            HypothesisKind::AlphaBound => {
                if s.min_eigenvalue < -tol * (1.0 + s.phi_norm) {
                    report.positive_semidefinite = false;
                }
                if ambient_k > profile.curvature().eval(n.r) + tol {
                    report.curvature_bounded = false;
                }
                (s.mean_div_norm, alpha.value(n.r) * s.tr_phi)
            }
            HypothesisKind::GradientBound => {
                if n.r <= 1e-12 {
                    continue;
                }
                (m * s.phi_grad_r, s.tr_phi)
            }
            HypothesisKind::EndBall { p, kappa } => {
                let lhs = ((s.lambda * s.mean_curvature_norm).powi(2) + (p * s.grad_lambda_norm).powi(2)).sqrt();
                (lhs, kappa * s.lambda)
            }
        };
        let margin = rhs - lhs;
        let rel = margin / (1.0 + lhs.abs() + rhs.abs());
        margins[i] = rel;
        report.nodes_checked += 1;
        report.min_margin = report.min_margin.min(margin);
        if rel < report.min_relative_margin {
            report.min_relative_margin = rel;
            report.worst_location = n.u.clone();
        }
    }
    report.verdict = report.positive_semidefinite
        && report.curvature_bounded
        && report.nodes_checked > 0
        && report.min_relative_margin >= -tol;
    report.margins = margins;
    Ok(report)
}

/// `Γ(μ) = m ∫₀^μ h^{m−1} e^{−m∫α}`; for `𝒦 = c²`, `α = κ` this is
/// `(m/c^{m−1}) ∫₀^μ sin(cτ)^{m−1} e^{−mκτ} dτ`.
pub fn gamma(profile: &ComparisonProfile, m: usize, mu: f64) -> Result<f64> {
    phi_r_integral(profile, m, mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndBallEstimate {
    pub mu: f64,
    pub lambda_q: f64,
    pub gamma: f64,
    pub bound: f64,
    /// `∫_{B_μ(q)} λ` on the lattice.
    pub measured: f64,
}

impl EndBallEstimate {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.measured >= self.bound * (1.0 - tol)
    }
}

/// `λ(q)Γ(μ)` against the measured `∫_{B_μ(q)} λ`, with `q` the base point.
pub fn end_ball_estimate(
    ball: &MeshedBall,
    samples: &[NodeSample],
    profile: &ComparisonProfile,
    mu: f64,
) -> Result<EndBallEstimate> {
    let limit = profile.valid_radius().min(ball.usable_radius());
    if !(mu > 0.0 && mu < limit) {
        return Err(Error::ProfileDomain { r: mu, limit });
    }
    check_samples(ball, samples, mu)?;
    let lambda_q = samples[ball.center()].lambda;
    let g = gamma(profile, ball.chart().dim(), mu)?;
    let values: Vec<f64> = samples.iter().map(|s| s.lambda).collect();
    Ok(EndBallEstimate {
        mu,
        lambda_q,
        gamma: g,
        bound: lambda_q * g,
        measured: ball.integrate(mu, &values),
    })
}

/// The flat profile with `α = 1/(t + ε)`.
pub fn logarithmic_profile(epsilon: f64, t_max: f64) -> Result<ComparisonProfile> {
    crate::comparison::solve_profile(Curvature::flat(), Alpha::InverseShifted(epsilon), t_max, 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::solve_profile;
    use crate::geometry::{cylinder, plane};
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangle_update_is_exact_for_planar_fronts() {
        let g = DMatrix::identity(2, 2);
        // Plane wave along x: T = x; points a = (−1, 0), b = (−1, 1) relative to x.
        let ea = DVector::from_vec(vec![-1.0, 0.0]);
        let eb = DVector::from_vec(vec![-1.0, 1.0]);
        let t = triangle_update(&g, &ea, &eb, 4.0, 4.0);
        assert_abs_diff_eq!(t, 5.0, epsilon = 1e-12);
        // Diagonal wave T = (x + y)/√2 arriving through the lower triangle.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let eb = DVector::from_vec(vec![-1.0, -1.0]);
        let t = triangle_update(&g, &ea, &eb, -s, -2.0 * s);
        assert_abs_diff_eq!(t, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lattice_contains_base_point() {
        let chart = plane(3.0).unwrap();
        let ball = mesh_and_distance(&chart, 61, f64::INFINITY).unwrap();
        let c = &ball.nodes()[ball.center()];
        assert_eq!(c.u, vec![0.0, 0.0]);
        assert_eq!(c.rho, 0.0);
    }

    #[test]
    fn flat_distance_is_nearly_euclidean() {
        let chart = plane(5.0).unwrap();
        let ball = mesh_and_distance(&chart, 101, f64::INFINITY).unwrap();
        let i = ball.nearest_node(&[3.0, 4.0]).unwrap();
        let rho = ball.nodes()[i].rho;
        assert!((5.0..=5.4).contains(&rho), "{rho}");
        assert_abs_diff_eq!(ball.interior_radius(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn cylinder_wraps_periodic_axis() {
        let chart = cylinder(1.0, 4.0).unwrap();
        let ball = mesh_and_distance(&chart, 64, f64::INFINITY).unwrap();
        let i = ball.nearest_node(&[std::f64::consts::PI - 1e-9, 0.0]).unwrap();
        let rho = ball.nodes()[i].rho;
        assert!(rho <= std::f64::consts::PI * 1.08, "{rho}");
    }

    #[test]
    fn low_resolution_is_rejected() {
        let chart = plane(1.0).unwrap();
        assert!(matches!(mesh_and_distance(&chart, 8, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_r_integral_in_flat_space() {
        let p = solve_profile(Curvature::flat(), Alpha::Zero, 3.0, 1e-3).unwrap();
        // 2 ∫₀^μ τ dτ = μ².
        assert_abs_diff_eq!(phi_r_integral(&p, 2, 1.5).unwrap(), 2.25, epsilon = 1e-9);
    }

    #[test]
    fn theorem_names_round_trip() {
        for t in [
            TheoremId::General,
            TheoremId::Logarithmic,
            TheoremId::Linear,
            TheoremId::PhiR,
            TheoremId::HyperbolicRate,
        ] {
            assert_eq!(TheoremId::parse(t.name()), Some(t));
        }
    }
}
