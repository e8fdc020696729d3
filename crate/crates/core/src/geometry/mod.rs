//! Parametrized immersions `f: U ⊂ ℝ^m → M̄` into model ambient spaces.
//!
//! Two ambient models are supported: Euclidean space `ℝⁿ` and hyperbolic space
//! `Hⁿ(−c²)` realized as the upper sheet of `{x : ⟨x, x⟩_L = −1/c²}` in
//! Minkowski space `ℝ^{1,n}`. Points of an immersion are always handled in
//! ambient coordinates; tangent vectors of `M̄` at `x` are ambient vectors
//! (for the hyperboloid, Minkowski vectors orthogonal to `x`).
//!
//! [`ImmersionChart::frame_at`] computes the first and second fundamental
//! forms by central differences of the chart map. Because the Levi-Civita
//! connection of the hyperboloid is the Minkowski derivative projected onto
//! `T_x H`, the normal components `⟨∂_i∂_j f, ν⟩` and the Christoffel symbols
//! `g^{kl}⟨∂_i∂_j f, ∂_l f⟩` are given by the same formulas in both models.

mod charts;

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::comparison::ComparisonProfile;
use crate::error::{Error, Result};
use crate::numdiff::{shifted, shifted2, Stencil};
use crate::symop::SymOp;

pub use charts::*;

/// Chart map `u ↦ f(u)` in ambient coordinates.
pub type ChartMap = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientSpace {
    Euclidean { n: usize },
    Hyperbolic { n: usize, c: f64 },
}

impl AmbientSpace {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("ambient dimension {n} < 2")));
        }
        Ok(Self::Euclidean { n })
    }

    pub fn hyperbolic(n: usize, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("ambient dimension {n} < 2")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("hyperbolic scale c = {c} must be positive")));
        }
        Ok(Self::Hyperbolic { n, c })
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        match *self {
            Self::Euclidean { n } | Self::Hyperbolic { n, .. } => n,
        }
    }

    /// Number of ambient coordinates: `n`, or `n + 1` for the hyperboloid.
    pub fn coordinate_dim(&self) -> usize {
        match *self {
            Self::Euclidean { n } => n,
            Self::Hyperbolic { n, .. } => n + 1,
        }
    }

    /// Constant sectional curvature: `0` or `−c²`.
    pub fn curvature(&self) -> f64 {
        match *self {
            Self::Euclidean { .. } => 0.0,
            Self::Hyperbolic { c, .. } => -c * c,
        }
    }

    pub fn curvature_profile(&self, _r: f64) -> f64 {
        self.curvature()
    }

    pub fn injectivity_radius(&self) -> f64 {
        f64::INFINITY
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match self {
            Self::Euclidean { .. } => a.dot(b),
            Self::Hyperbolic { .. } => a.dot(b) - 2.0 * a[0] * b[0],
        }
    }

    /// Norm of a spacelike (tangent) vector; timelike parts clamp to zero.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Residual of the model equation at `x` (zero for Euclidean points).
    pub fn model_residual(&self, x: &DVector<f64>) -> f64 {
        match *self {
            Self::Euclidean { .. } => 0.0,
            Self::Hyperbolic { c, .. } => {
                let q = self.inner(x, x) + 1.0 / (c * c);
                q.abs() / (1.0 + x.norm_squared())
            }
        }
    }

    pub fn distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match *self {
            Self::Euclidean { .. } => (x - y).norm(),
            Self::Hyperbolic { c, .. } => {
                let d = self.norm(&(x - y));
                2.0 / c * (0.5 * c * d).asinh()
            }
        }
    }

    /// `r = d(x, x0)` and the unit ambient gradient `∇̄r` at `x`, or `None`
    /// when the points coincide.
    pub fn radial_gradient(&self, x: &DVector<f64>, x0: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        let diff = x - x0;
        let r = self.distance(x, x0);
        if !(r > 1e-13 * (1.0 + x0.norm())) {
            return None;
        }
        let grad = match *self {
            Self::Euclidean { .. } => diff / r,
            Self::Hyperbolic { c, .. } => {
                // c (cosh(cr) x − x0) / sinh(cr), written without cancellation.
                let s = (0.5 * c * r).sinh();
                (diff + x * (2.0 * s * s)) * (c / (c * r).sinh())
            }
        };
        Some((r, grad))
    }

    /// Projection of an ambient vector onto `T_x M̄`.
    pub fn project_to_tangent(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            Self::Euclidean { .. } => v.clone(),
            Self::Hyperbolic { c, .. } => v + x * (c * c * self.inner(v, x)),
        }
    }
}

/// One parameter axis: `[lo, hi]`, or a period `[lo, hi)` when `periodic`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn bounded(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: false }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: true }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn wrap(&self, x: f64) -> f64 {
        if self.periodic {
            self.lo + (x - self.lo).rem_euclid(self.length())
        } else {
            x
        }
    }
}

/// An immersion chart. Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct ImmersionChart {
    name: String,
    ambient: AmbientSpace,
    axes: Vec<Axis>,
    map: ChartMap,
    base_point: Vec<f64>,
    stencil: Stencil,
    flip_normal: bool,
}

impl fmt::Debug for ImmersionChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionChart")
            .field("name", &self.name)
            .field("ambient", &self.ambient)
            .field("axes", &self.axes)
            .field("base_point", &self.base_point)
            .field("stencil", &self.stencil)
            .field("flip_normal", &self.flip_normal)
            .finish_non_exhaustive()
    }
}

impl ImmersionChart {
    /// Builds and validates a chart; the frame at the base point must exist.
    pub fn new(
        name: impl Into<String>,
        ambient: AmbientSpace,
        axes: Vec<Axis>,
        map: ChartMap,
        base_point: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let m = axes.len();
        if m == 0 || m > ambient.dim() {
            return Err(Error::Domain(format!(
                "chart `{name}`: dimension {m} not in 1..={}",
                ambient.dim()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.lo.is_finite() && a.hi.is_finite() && a.lo < a.hi) {
                return Err(Error::Domain(format!(
                    "chart `{name}`: axis {i} has empty range [{}, {}]",
                    a.lo, a.hi
                )));
            }
        }
        if base_point.len() != m {
            return Err(Error::Domain(format!(
                "chart `{name}`: base point has {} coordinates, expected {m}",
                base_point.len()
            )));
        }
        let chart = Self {
            name,
            ambient,
            axes,
            map,
            base_point,
            stencil: Stencil::default(),
            flip_normal: false,
        };
        if !chart.contains(&chart.base_point) {
            return Err(Error::Domain(format!(
                "chart `{}`: base point {:?} outside the parameter domain",
                chart.name, chart.base_point
            )));
        }
        let x0 = chart.eval(&chart.base_point);
        if x0.len() != ambient.coordinate_dim() {
            return Err(Error::Domain(format!(
                "chart `{}`: map returns {} coordinates, ambient needs {}",
                chart.name,
                x0.len(),
                ambient.coordinate_dim()
            )));
        }
        if chart.ambient.model_residual(&x0) > 1e-8 {
            return Err(Error::Domain(format!(
                "chart `{}`: base point image is off the hyperboloid",
                chart.name
            )));
        }
        chart.frame_at(&chart.base_point)?;
        Ok(chart)
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    /// Reverses the default orientation of the unit normal (codimension 1).
    pub fn with_flipped_normal(mut self, flip: bool) -> Self {
        self.flip_normal = flip;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient(&self) -> &AmbientSpace {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn codim(&self) -> usize {
        self.ambient.dim() - self.dim()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn normal_flipped(&self) -> bool {
        self.flip_normal
    }

    pub fn eval(&self, u: &[f64]) -> DVector<f64> {
        (self.map)(u)
    }

    pub fn base_position(&self) -> DVector<f64> {
        self.eval(&self.base_point)
    }

    /// Whether `u` lies in the box (periodic axes are unconstrained).
    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(u)
                .all(|(a, &x)| a.periodic || (a.lo..=a.hi).contains(&x))
    }

    /// Jacobian columns `∂_i f(u)`.
    pub fn tangents(&self, u: &[f64]) -> Vec<DVector<f64>> {
        self.stencil.gradient_columns(u, |v| self.eval(v))
    }

    /// Second partials `∂_i∂_j f(u)`, indexed `[i][j]`.
    fn second_partials(&self, u: &[f64]) -> Vec<Vec<DVector<f64>>> {
        let m = self.dim();
        let f0 = self.eval(u);
        let at = |hs: &[f64]| -> Vec<Vec<DVector<f64>>> {
            let mut d = vec![vec![DVector::zeros(f0.len()); m]; m];
            for i in 0..m {
                let h = hs[i];
                let fp = self.eval(&shifted(u, i, h));
                let fm = self.eval(&shifted(u, i, -h));
                d[i][i] = (fp + fm - &f0 * 2.0) / (h * h);
                for j in 0..i {
                    let k = hs[j];
                    let pp = self.eval(&shifted2(u, i, h, j, k));
                    let pm = self.eval(&shifted2(u, i, h, j, -k));
                    let mp = self.eval(&shifted2(u, i, -h, j, k));
                    let mm = self.eval(&shifted2(u, i, -h, j, -k));
                    let v = (pp - pm - mp + mm) / (4.0 * h * k);
                    d[i][j] = v.clone();
                    d[j][i] = v;
                }
            }
            d
        };
        let hs: Vec<f64> = u.iter().map(|&x| self.stencil.absolute(x)).collect();
        if self.stencil.richardson {
            let coarse = at(&hs);
            let half: Vec<f64> = hs.iter().map(|h| 0.5 * h).collect();
            let fine = at(&half);
            fine.into_iter()
                .zip(coarse)
                .map(|(fr, cr)| {
                    fr.into_iter()
                        .zip(cr)
                        .map(|(f, c)| (f * 4.0 - c) / 3.0)
                        .collect()
                })
                .collect()
        } else {
            at(&hs)
        }
    }

    pub fn frame_at(&self, u: &[f64]) -> Result<FrameData> {
        if u.len() != self.dim() {
            return Err(Error::Domain(format!(
                "chart `{}`: parameter has {} coordinates, expected {}",
                self.name,
                u.len(),
                self.dim()
            )));
        }
        let m = self.dim();
        let amb = self.ambient;
        let point = self.eval(u);
        let cols = self.tangents(u);
        let tangents = DMatrix::from_columns(&cols);

        let metric = DMatrix::from_fn(m, m, |i, j| amb.inner(&cols[i], &cols[j]));
        let metric = (&metric + metric.transpose()) * 0.5;
        let degenerate = |reason: String| Error::DegenerateChart {
            location: u.to_vec(),
            reason,
        };
        if metric.iter().any(|x| !x.is_finite()) {
            return Err(degenerate("non-finite metric".into()));
        }
        let min_eig = metric
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if !(min_eig > 0.0 && min_eig.sqrt() > 1e-6) {
            return Err(degenerate(format!(
                "differential is rank deficient (smallest singular value {:.3e})",
                min_eig.max(0.0).sqrt()
            )));
        }
        let chol = Cholesky::new(metric.clone())
            .ok_or_else(|| degenerate("metric is not positive definite".into()))?;
        let metric_inv = chol.inverse();
        let chol_l = chol.l();

        let second = self.second_partials(u);
        let christoffel: Vec<DMatrix<f64>> = {
            // ⟨∂_i∂_j f, ∂_l f⟩ lowered, then raised with g⁻¹.
            let lowered: Vec<DMatrix<f64>> = (0..m)
                .map(|l| DMatrix::from_fn(m, m, |i, j| amb.inner(&second[i][j], &cols[l])))
                .collect();
            (0..m)
                .map(|k| {
                    DMatrix::from_fn(m, m, |i, j| {
                        (0..m).map(|l| metric_inv[(k, l)] * lowered[l][(i, j)]).sum()
                    })
                })
                .collect()
        };

        let normals = self.normal_frame(&point, &tangents, &chol_l)?;
        let second_form: Vec<DMatrix<f64>> = normals
            .iter()
            .map(|nu| {
                let s = DMatrix::from_fn(m, m, |i, j| amb.inner(&second[i][j], nu));
                (&s + s.transpose()) * 0.5
            })
            .collect();
        let mean_curvature = DVector::from_iterator(
            normals.len(),
            second_form.iter().map(|s| metric_inv.component_mul(s).sum()),
        );

        Ok(FrameData {
            u: u.to_vec(),
            ambient: amb,
            point,
            tangents,
            metric,
            metric_inv,
            chol_l,
            christoffel,
            normals,
            second_form,
            mean_curvature,
        })
    }

    fn normal_frame(
        &self,
        x: &DVector<f64>,
        tangents: &DMatrix<f64>,
        chol_l: &DMatrix<f64>,
    ) -> Result<Vec<DVector<f64>>> {
        let amb = self.ambient;
        let big_n = amb.coordinate_dim();
        let codim = self.codim();
        // Orthonormal tangent frame E = F L^{-T}.
        let e = orthonormal_columns(tangents, chol_l);
        let mut basis: Vec<(DVector<f64>, f64)> =
            e.column_iter().map(|c| (c.into_owned(), 1.0)).collect();
        if let AmbientSpace::Hyperbolic { c, .. } = amb {
            basis.push((x * c, -1.0));
        }
        let project = |v: &DVector<f64>, basis: &[(DVector<f64>, f64)]| {
            let mut w = v.clone();
            for _ in 0..2 {
                for (b, s) in basis {
                    let coef = amb.inner(&w, b) / s;
                    w -= b * coef;
                }
            }
            w
        };
        let mut normals = Vec::with_capacity(codim);
        for _ in 0..codim {
            let best = (0..big_n)
                .map(|k| project(&DVector::from_fn(big_n, |i, _| f64::from(u8::from(i == k))), &basis))
                .map(|w| (amb.inner(&w, &w), w))
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .expect("ambient has coordinates");
            if !(best.0 > 1e-20) {
                return Err(Error::DegenerateChart {
                    location: vec![],
                    reason: "could not complete the normal frame".into(),
                });
            }
            let nu = best.1 / best.0.sqrt();
            basis.push((nu.clone(), 1.0));
            normals.push(nu);
        }
        if codim == 1 {
            let mut cols: Vec<DVector<f64>> = Vec::with_capacity(big_n);
            if matches!(amb, AmbientSpace::Hyperbolic { .. }) {
                cols.push(x.clone());
            }
            cols.extend(tangents.column_iter().map(|c| c.into_owned()));
            cols.push(normals[0].clone());
            let det = DMatrix::from_columns(&cols).determinant();
            if (det < 0.0) != self.flip_normal {
                normals[0] = -normals[0].clone();
            }
        }
        Ok(normals)
    }

    /// `r`, `∇̄r` and its splitting along `f(M)` relative to the base point.
    pub fn radial(&self, u: &[f64]) -> Result<RadialData> {
        let frame = self.frame_at(u)?;
        radial_at(&frame, &self.base_position())
    }
}

/// Differential-geometric data of a chart at one parameter point.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub u: Vec<f64>,
    pub ambient: AmbientSpace,
    /// `f(u)` in ambient coordinates.
    pub point: DVector<f64>,
    /// Columns `∂_i f`.
    pub tangents: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// Lower Cholesky factor, `g = L Lᵀ`.
    pub chol_l: DMatrix<f64>,
    /// `christoffel[k][(i, j)] = Γ^k_ij`.
    pub christoffel: Vec<DMatrix<f64>>,
    /// Orthonormal normal frame `ν_a` of `T_x M̄ ⊖ T M`.
    pub normals: Vec<DVector<f64>>,
    /// `second_form[a][(i, j)] = ⟨II(∂_i, ∂_j), ν_a⟩`.
    pub second_form: Vec<DMatrix<f64>>,
    /// Components of `H = tr II` along `ν_a`.
    pub mean_curvature: DVector<f64>,
}

impl FrameData {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn codim(&self) -> usize {
        self.normals.len()
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.ambient.inner(a, b)
    }

    pub fn sqrt_det(&self) -> f64 {
        self.chol_l.diagonal().product()
    }

    pub fn tangent(&self, i: usize) -> DVector<f64> {
        self.tangents.column(i).into_owned()
    }

    /// Coordinates of the tangential part of an ambient vector.
    pub fn tangent_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        let lowered = DVector::from_iterator(
            self.dim(),
            self.tangents.column_iter().map(|c| self.inner(&c.into_owned(), v)),
        );
        &self.metric_inv * lowered
    }

    pub fn tangent_vector(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.tangents * coords
    }

    pub fn tangent_part(&self, v: &DVector<f64>) -> DVector<f64> {
        self.tangent_vector(&self.tangent_coords(v))
    }

    /// Component of a vector of `T_x M̄` normal to `f(M)`.
    pub fn normal_part(&self, v: &DVector<f64>) -> DVector<f64> {
        self.normals
            .iter()
            .fold(DVector::zeros(v.len()), |acc, nu| acc + nu * self.inner(v, nu))
    }

    pub fn normal_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.codim(), self.normals.iter().map(|nu| self.inner(v, nu)))
    }

    pub fn from_normal_coords(&self, c: &DVector<f64>) -> DVector<f64> {
        self.normals
            .iter()
            .zip(c.iter())
            .fold(DVector::zeros(self.point.len()), |acc, (nu, &x)| acc + nu * x)
    }

    /// `|v|_g` for coordinates `v`.
    pub fn g_norm(&self, v: &DVector<f64>) -> f64 {
        (v.transpose() * &self.metric * v)[(0, 0)].max(0.0).sqrt()
    }

    pub fn g_inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.metric * b)[(0, 0)]
    }

    /// `II(∂_i, ∂_j)` as an ambient vector.
    pub fn second_form_vector(&self, i: usize, j: usize) -> DVector<f64> {
        let c = DVector::from_iterator(self.codim(), self.second_form.iter().map(|s| s[(i, j)]));
        self.from_normal_coords(&c)
    }

    pub fn mean_curvature_vector(&self) -> DVector<f64> {
        self.from_normal_coords(&self.mean_curvature)
    }

    /// Columns of a g-orthonormal tangent frame.
    pub fn orthonormal_frame(&self) -> DMatrix<f64> {
        orthonormal_columns(&self.tangents, &self.chol_l)
    }

    /// Mixed (coordinate) operator to its matrix in the orthonormal frame:
    /// `Lᵀ Φ L^{-T}`.
    pub fn to_orthonormal(&self, mixed: &DMatrix<f64>) -> DMatrix<f64> {
        let lt = self.chol_l.transpose();
        let lt_inv = lower_inverse(&self.chol_l).transpose();
        lt * mixed * lt_inv
    }

    /// Inverse of [`FrameData::to_orthonormal`].
    pub fn from_orthonormal(&self, on: &DMatrix<f64>) -> DMatrix<f64> {
        let lt = self.chol_l.transpose();
        let lt_inv = lower_inverse(&self.chol_l).transpose();
        lt_inv * on * lt
    }

    fn unit_normal(&self) -> Result<&DVector<f64>> {
        if self.codim() != 1 {
            return Err(Error::Unsupported(format!(
                "shape operator needs codimension 1, got {}",
                self.codim()
            )));
        }
        Ok(&self.normals[0])
    }

    /// `A = g⁻¹ h` in coordinates, for the chosen unit normal.
    pub fn shape_operator_mixed(&self) -> Result<DMatrix<f64>> {
        self.unit_normal()?;
        Ok(&self.metric_inv * &self.second_form[0])
    }

    /// Shape operator in the orthonormal frame: `L⁻¹ h L^{-T}`.
    pub fn shape_operator(&self) -> Result<SymOp> {
        self.unit_normal()?;
        let li = lower_inverse(&self.chol_l);
        SymOp::new(&li * &self.second_form[0] * li.transpose())
    }
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("Cholesky factor has a positive diagonal")
}

fn orthonormal_columns(tangents: &DMatrix<f64>, chol_l: &DMatrix<f64>) -> DMatrix<f64> {
    tangents * lower_inverse(chol_l).transpose()
}

/// Radial data `r = d_M̄(f(u), f(q₀))` at a frame.
#[derive(Debug, Clone)]
pub struct RadialData {
    pub r: f64,
    /// Unit ambient gradient `∇̄r`.
    pub grad_ambient: DVector<f64>,
    /// Coordinates of `∇r = (∇̄r)^T`.
    pub grad_coords: DVector<f64>,
    /// `∇r` as an ambient vector.
    pub grad_tangent: DVector<f64>,
    pub grad_normal: DVector<f64>,
}

impl RadialData {
    /// `|∇r|`, which never exceeds 1 up to rounding.
    pub fn tangent_norm(&self, amb: &AmbientSpace) -> f64 {
        amb.norm(&self.grad_tangent)
    }
}

pub(crate) fn radial_at(frame: &FrameData, x0: &DVector<f64>) -> Result<RadialData> {
    let (r, grad) = frame
        .ambient
        .radial_gradient(&frame.point, x0)
        .ok_or_else(|| Error::SingularRadialField {
            location: frame.u.clone(),
        })?;
    let grad_coords = frame.tangent_coords(&grad);
    let grad_tangent = frame.tangent_vector(&grad_coords);
    let grad_normal = frame.normal_part(&grad);
    Ok(RadialData {
        r,
        grad_ambient: grad,
        grad_coords,
        grad_tangent,
        grad_normal,
    })
}

pub fn frame_at(chart: &ImmersionChart, u: &[f64]) -> Result<FrameData> {
    chart.frame_at(u)
}

pub fn ambient_radial(chart: &ImmersionChart, u: &[f64]) -> Result<RadialData> {
    chart.radial(u)
}

/// `X = h(r) ∇̄r` at `f(u)`, computed without a frame.
pub fn radial_vector_field(
    chart: &ImmersionChart,
    u: &[f64],
    profile: &ComparisonProfile,
) -> Result<DVector<f64>> {
    radial_field_at(chart.ambient(), &chart.eval(u), &chart.base_position(), profile)
        .map_err(|e| match e {
            Error::SingularRadialField { .. } => Error::SingularRadialField { location: u.to_vec() },
            other => other,
        })
}

pub(crate) fn radial_field_at(
    amb: &AmbientSpace,
    x: &DVector<f64>,
    x0: &DVector<f64>,
    profile: &ComparisonProfile,
) -> Result<DVector<f64>> {
    let (r, grad) = amb
        .radial_gradient(x, x0)
        .ok_or(Error::SingularRadialField { location: vec![] })?;
    Ok(grad * profile.h(r)?)
}
