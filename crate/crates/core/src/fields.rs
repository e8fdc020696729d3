//! Operator fields and their first-order calculus.
//!
//! An [`OperatorField`] assigns to each chart point a `g`-symmetric operator
//! `Φ`, stored as its mixed coordinate matrix `Φ^k_j`. From it this module
//! derives
//!
//! - the covariant derivative `(∇_i Φ)^k_j = ∂_i Φ^k_j + Γ^k_il Φ^l_j − Φ^k_l Γ^l_ij`;
//! - `div Φ = tr ∇Φ`, as the vector dual to `ω_j = (∇_i Φ)^i_j`;
//! - the Φ-mean curvature `H_Φ = g^{ij} II(Φ∂_i, ∂_j)`;
//! - the Φ-divergence `D_Φ X = tr(Z ↦ Φ(∇̄_Z X)^T)` of ambient vector fields.
//!
//! Derivatives of `Φ` and of vector fields use the field's outer stencil,
//! which is coarser than the chart stencil and Richardson-extrapolated: the
//! differentiated quantities already carry the chart's finite-difference
//! noise.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FrameData, ImmersionChart, Axis};
use crate::numdiff::{shifted, Stencil};
use crate::symop::{newton_operator, SymOp};

/// Ambient vector field along a chart, `(u, f(u)) ↦ X`.
pub type AmbientVectorField = Arc<dyn Fn(&[f64], &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;

/// Tangent vector field given by its coordinate components.
pub type CoordVectorField = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// Mixed operator matrix computed from frame data.
pub type MixedTensorFn = Arc<dyn Fn(&FrameData) -> Result<DMatrix<f64>> + Send + Sync>;

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PartialsFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// A scalar function on the chart, optionally with analytic partials.
#[derive(Clone)]
pub struct ScalarField {
    value: ScalarFn,
    partials: Option<PartialsFn>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("analytic_gradient", &self.partials.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            partials: None,
        }
    }

    /// Attaches analytic partial derivatives `∂_i λ`.
    pub fn with_partials(mut self, partials: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c).with_partials(|u| DVector::zeros(u.len()))
    }

    /// `λ = exp(−k r)` with `r` the ambient distance to the chart's base
    /// point. On totally geodesic charts `r` is also the intrinsic distance.
    /// The gradient is set to zero at the base point.
    pub fn exp_neg_distance(chart: &ImmersionChart, rate: f64) -> Self {
        let amb = *chart.ambient();
        let x0 = chart.base_position();
        let c1 = chart.clone();
        let x1 = x0.clone();
        let c2 = chart.clone();
        Self::new(move |u| (-rate * amb.distance(&c1.eval(u), &x1)).exp()).with_partials(move |u| {
            let x = c2.eval(u);
            match amb.radial_gradient(&x, &x0) {
                None => DVector::zeros(u.len()),
                Some((r, grad)) => {
                    let lam = (-rate * r).exp();
                    DVector::from_iterator(
                        u.len(),
                        c2.tangents(u).iter().map(|t| -rate * lam * amb.inner(&grad, t)),
                    )
                }
            }
        })
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        (self.value)(u)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.partials.is_some()
    }

    /// `∂_i λ(u)`, by finite differences with `stencil` when no analytic
    /// partials are attached.
    pub fn partials(&self, u: &[f64], stencil: Stencil) -> DVector<f64> {
        match &self.partials {
            Some(p) => p(u),
            None => stencil.gradient(u, |v| (self.value)(v)),
        }
    }
}

/// Presets for `Φ`.
#[derive(Clone)]
pub enum FieldKind {
    Identity,
    /// `λ^s I`.
    ScalarIdentity { lambda: ScalarField, exponent: f64 },
    /// `P_j(A)` for the shape operator of a hypersurface.
    Newton { j: usize },
    ShapeOperator,
    /// `g`-orthogonal projection onto the span of the given fields.
    Distribution { spanning: Vec<CoordVectorField> },
    Custom(MixedTensorFn),
}

impl std::fmt::Debug for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::ScalarIdentity { exponent, .. } => write!(f, "ScalarIdentity {{ exponent: {exponent} }}"),
            Self::Newton { j } => write!(f, "Newton {{ j: {j} }}"),
            Self::ShapeOperator => write!(f, "ShapeOperator"),
            Self::Distribution { spanning } => write!(f, "Distribution {{ rank: {} }}", spanning.len()),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorField {
    chart: ImmersionChart,
    kind: FieldKind,
    positivity_required: bool,
    outer: Stencil,
}

/// Default stencil for derivatives of derived quantities.
pub const OUTER_STENCIL: Stencil = Stencil {
    step: 2e-3,
    richardson: true,
};

impl OperatorField {
    pub fn new(chart: ImmersionChart, kind: FieldKind) -> Self {
        Self {
            chart,
            kind,
            positivity_required: false,
            outer: OUTER_STENCIL,
        }
    }

    pub fn identity(chart: ImmersionChart) -> Self {
        Self::new(chart, FieldKind::Identity)
    }

    pub fn scalar_identity(chart: ImmersionChart, lambda: ScalarField, exponent: f64) -> Self {
        Self::new(chart, FieldKind::ScalarIdentity { lambda, exponent })
    }

    pub fn newton(chart: ImmersionChart, j: usize) -> Self {
        Self::new(chart, FieldKind::Newton { j })
    }

    pub fn shape_operator(chart: ImmersionChart) -> Self {
        Self::new(chart, FieldKind::ShapeOperator)
    }

    pub fn distribution(chart: ImmersionChart, spanning: Vec<CoordVectorField>) -> Self {
        Self::new(chart, FieldKind::Distribution { spanning })
    }

    pub fn custom(chart: ImmersionChart, f: MixedTensorFn) -> Self {
        Self::new(chart, FieldKind::Custom(f))
    }

    pub fn with_positivity(mut self, required: bool) -> Self {
        self.positivity_required = required;
        self
    }

    pub fn with_outer_stencil(mut self, stencil: Stencil) -> Self {
        self.outer = stencil;
        self
    }

    pub fn chart(&self) -> &ImmersionChart {
        &self.chart
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn outer_stencil(&self) -> Stencil {
        self.outer
    }

    pub fn positivity_required(&self) -> bool {
        self.positivity_required
    }

    /// `λ` for scalar presets.
    pub fn scalar(&self) -> Option<(&ScalarField, f64)> {
        match &self.kind {
            FieldKind::ScalarIdentity { lambda, exponent } => Some((lambda, *exponent)),
            _ => None,
        }
    }

    /// Mixed matrix `Φ^k_j` at a frame.
    pub fn mixed(&self, frame: &FrameData) -> Result<DMatrix<f64>> {
        let m = frame.dim();
        match &self.kind {
            FieldKind::Identity => Ok(DMatrix::identity(m, m)),
            FieldKind::ScalarIdentity { lambda, exponent } => {
                Ok(DMatrix::identity(m, m) * lambda.value(&frame.u).powf(*exponent))
            }
            FieldKind::Newton { j } => {
                let a = frame.shape_operator()?;
                let p = newton_operator(&a, *j)?;
                Ok(frame.from_orthonormal(p.matrix()))
            }
            FieldKind::ShapeOperator => frame.shape_operator_mixed(),
            FieldKind::Distribution { spanning } => distribution_projection(frame, spanning),
            FieldKind::Custom(f) => f(frame),
        }
    }

    pub fn mixed_at(&self, u: &[f64]) -> Result<(FrameData, DMatrix<f64>)> {
        let frame = self.chart.frame_at(u)?;
        let phi = self.mixed(&frame)?;
        Ok((frame, phi))
    }

    /// Coordinate partials `∂_i Φ^k_j`, indexed `[i]`.
    fn partials(&self, frame: &FrameData) -> Result<Vec<DMatrix<f64>>> {
        let u = &frame.u;
        let m = frame.dim();
        match &self.kind {
            FieldKind::Identity => Ok(vec![DMatrix::zeros(m, m); m]),
            FieldKind::ScalarIdentity { lambda, exponent } if lambda.has_analytic_gradient() => {
                let lam = lambda.value(u);
                let d = lambda.partials(u, self.chart.stencil());
                let factor = if *exponent == 1.0 {
                    1.0
                } else {
                    exponent * lam.powf(exponent - 1.0)
                };
                Ok((0..m).map(|i| DMatrix::identity(m, m) * (factor * d[i])).collect())
            }
            _ => {
                let mut out = Vec::with_capacity(m);
                for i in 0..m {
                    let h = self.outer.absolute(u[i]);
                    let d = self.outer.try_derivative(h, |t| {
                        let (_, p) = self.mixed_at(&shifted(u, i, t))?;
                        Ok::<_, Error>(DVector::from_column_slice(p.as_slice()))
                    })?;
                    out.push(DMatrix::from_column_slice(m, m, d.as_slice()));
                }
                Ok(out)
            }
        }
    }

    /// All pointwise field data at `u`.
    pub fn sample(&self, u: &[f64]) -> Result<FieldSample> {
        let (frame, phi_mixed) = self.mixed_at(u)?;
        let m = frame.dim();
        let phi = SymOp::new(frame.to_orthonormal(&phi_mixed))?;
        let spectrum = phi.eigenvalues();
        let min_eigenvalue = spectrum[0];
        let scale = spectrum.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if self.positivity_required && min_eigenvalue < -1e-9 * scale {
            return Err(Error::NotPositiveSemidefinite {
                location: u.to_vec(),
                min_eigenvalue,
            });
        }

        let partials = self.partials(&frame)?;
        let gamma = &frame.christoffel;
        let nabla: Vec<DMatrix<f64>> = (0..m)
            .map(|i| {
                // Γ_i as the matrix (k, l) ↦ Γ^k_il.
                let gi = DMatrix::from_fn(m, m, |k, l| gamma[k][(i, l)]);
                &partials[i] + &gi * &phi_mixed - &phi_mixed * &gi
            })
            .collect();
        let omega = DVector::from_fn(m, |j, _| (0..m).map(|i| nabla[i][(i, j)]).sum());
        let divergence = &frame.metric_inv * &omega;
        let divergence_ambient = frame.tangent_vector(&divergence);

        let hc = DVector::from_iterator(
            frame.codim(),
            frame.second_form.iter().map(|s| {
                let b = phi_mixed.transpose() * s;
                frame.metric_inv.component_mul(&b).sum()
            }),
        );
        let mean_curvature = frame.from_normal_coords(&hc);

        Ok(FieldSample {
            trace: phi_mixed.trace(),
            phi,
            phi_mixed,
            min_eigenvalue,
            nabla,
            divergence,
            divergence_ambient,
            mean_curvature,
            frame,
        })
    }
}

fn distribution_projection(frame: &FrameData, spanning: &[CoordVectorField]) -> Result<DMatrix<f64>> {
    let m = frame.dim();
    if spanning.is_empty() || spanning.len() > m {
        return Err(Error::Domain(format!(
            "distribution needs between 1 and {m} spanning fields, got {}",
            spanning.len()
        )));
    }
    let cols: Vec<DVector<f64>> = spanning.iter().map(|v| v(&frame.u)).collect();
    if cols.iter().any(|c| c.len() != m) {
        return Err(Error::Domain(format!("spanning fields must have {m} components")));
    }
    let v = DMatrix::from_columns(&cols);
    let gram = v.transpose() * &frame.metric * &v;
    let scale = gram.diagonal().iter().fold(0.0f64, |a, &x| a.max(x));
    let min_eig = gram
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &x| a.min(x));
    if !(scale > 0.0 && min_eig > 1e-10 * scale) {
        return Err(Error::DegenerateDistribution {
            location: frame.u.clone(),
        });
    }
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::DegenerateDistribution { location: frame.u.clone() })?;
    Ok(&v * inv * v.transpose() * &frame.metric)
}

/// Pointwise data of an operator field.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub frame: FrameData,
    /// `Φ` in the orthonormal frame.
    pub phi: SymOp,
    pub phi_mixed: DMatrix<f64>,
    pub trace: f64,
    pub min_eigenvalue: f64,
    /// `nabla[i][(k, j)] = (∇_i Φ)^k_j`.
    pub nabla: Vec<DMatrix<f64>>,
    /// Coordinates of `div Φ`.
    pub divergence: DVector<f64>,
    pub divergence_ambient: DVector<f64>,
    /// `H_Φ` as an ambient vector.
    pub mean_curvature: DVector<f64>,
}

impl FieldSample {
    /// `H_Φ + div Φ` as an ambient vector.
    pub fn mean_plus_divergence(&self) -> DVector<f64> {
        &self.mean_curvature + &self.divergence_ambient
    }

    pub fn divergence_norm(&self) -> f64 {
        self.frame.g_norm(&self.divergence)
    }

    /// `(∇_X Φ) Y` in coordinates.
    pub fn covariant_derivative(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.nabla
            .iter()
            .zip(x.iter())
            .fold(DVector::zeros(y.len()), |acc, (n, &xi)| acc + n * y * xi)
    }
}

pub fn sample(field: &OperatorField, u: &[f64]) -> Result<FieldSample> {
    field.sample(u)
}

/// Columns: tangent coordinates of `∂_i X` at the frame point.
fn ambient_jacobian(
    field: &OperatorField,
    frame: &FrameData,
    x: &AmbientVectorField,
) -> Result<DMatrix<f64>> {
    let chart = field.chart();
    let u = &frame.u;
    let m = frame.dim();
    let stencil = field.outer;
    let cols = (0..m)
        .map(|i| {
            let h = stencil.absolute(u[i]);
            let d = stencil.try_derivative(h, |t| {
                let v = shifted(u, i, t);
                x(&v, &chart.eval(&v))
            })?;
            Ok(frame.tangent_coords(&d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

fn phi_divergence_at(
    field: &OperatorField,
    frame: &FrameData,
    phi: &DMatrix<f64>,
    x: &AmbientVectorField,
) -> Result<f64> {
    let jac = ambient_jacobian(field, frame, x)?;
    Ok((phi * jac).trace())
}

/// `D_Φ X = Σ_i ⟨Φ(∇̄_{e_i} X)^T, e_i⟩`.
///
/// On the hyperboloid the ambient connection is the Minkowski derivative
/// projected onto `T_x H`; the projection does not change tangential parts.
pub fn phi_divergence(field: &OperatorField, x: &AmbientVectorField, u: &[f64]) -> Result<f64> {
    let (frame, phi) = field.mixed_at(u)?;
    phi_divergence_at(field, &frame, &phi, x)
}

/// Tangential part `X^T` of an ambient field.
pub fn tangential_part(chart: &ImmersionChart, x: AmbientVectorField) -> AmbientVectorField {
    let chart = chart.clone();
    Arc::new(move |u: &[f64], p: &DVector<f64>| {
        let frame = chart.frame_at(u)?;
        Ok(frame.tangent_part(&x(u, p)?))
    })
}

/// Absolute residuals of the three Φ-divergence identities, with the largest
/// magnitude among their terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropositionResiduals {
    /// `D_Φ X − (D_Φ X^T − ⟨H_Φ, X⟩)`
    pub r_a: f64,
    /// `D_Φ(fX) − (f D_Φ X + ⟨Φ(X^T), ∇f⟩)`
    pub r_b: f64,
    /// `D_Φ X − (div_M Φ(X^T) − ⟨H_Φ + div Φ, X⟩)`
    pub r_c: f64,
    pub scale: f64,
}

impl PropositionResiduals {
    pub fn max_relative(&self) -> f64 {
        self.r_a.max(self.r_b).max(self.r_c) / (1.0 + self.scale)
    }
}

/// `div_M Y = (1/√g) ∂_i(√g Y^i)` for coordinate components `Y`.
fn coordinate_divergence<F>(chart: &ImmersionChart, u: &[f64], stencil: Stencil, y: F) -> Result<f64>
where
    F: Fn(&FrameData) -> Result<DVector<f64>>,
{
    let m = u.len();
    let sqrt_det_at = chart.frame_at(u)?.sqrt_det();
    let mut total = 0.0;
    for i in 0..m {
        let h = stencil.absolute(u[i]);
        total += stencil.try_derivative_scalar(h, |t| {
            let f = chart.frame_at(&shifted(u, i, t))?;
            Ok::<_, Error>(f.sqrt_det() * y(&f)?[i])
        })?;
    }
    Ok(total / sqrt_det_at)
}

pub fn proposition_residuals(
    field: &OperatorField,
    x: &AmbientVectorField,
    f: &ScalarField,
    u: &[f64],
) -> Result<PropositionResiduals> {
    let chart = field.chart();
    let s = field.sample(u)?;
    let frame = &s.frame;
    let amb = frame.ambient;
    let xu = x(u, &frame.point)?;

    let d = phi_divergence_at(field, frame, &s.phi_mixed, x)?;

    let xt = tangential_part(chart, x.clone());
    let d_t = phi_divergence_at(field, frame, &s.phi_mixed, &xt)?;
    let h_x = amb.inner(&s.mean_curvature, &xu);
    let r_a = (d - (d_t - h_x)).abs();

    let fx: AmbientVectorField = {
        let x = x.clone();
        let f = f.clone();
        Arc::new(move |v: &[f64], p: &DVector<f64>| Ok(x(v, p)? * f.value(v)))
    };
    let d_f = phi_divergence_at(field, frame, &s.phi_mixed, &fx)?;
    let phi_xt = &s.phi_mixed * frame.tangent_coords(&xu);
    let df = f.partials(u, chart.stencil());
    let coupling = phi_xt.dot(&df);
    let fu = f.value(u);
    let r_b = (d_f - (fu * d + coupling)).abs();

    let div_y = coordinate_divergence(chart, u, field.outer, |fr| {
        let phi = field.mixed(fr)?;
        Ok(phi * fr.tangent_coords(&x(&fr.u, &fr.point)?))
    })?;
    let hd_x = amb.inner(&s.mean_plus_divergence(), &xu);
    let r_c = (d - (div_y - hd_x)).abs();

    let scale = [d, d_t, h_x, d_f, fu * d, coupling, div_y, hd_x]
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(PropositionResiduals { r_a, r_b, r_c, scale })
}

/// Intrinsic gradient `∇f` lifted to an ambient field.
pub fn gradient_field(chart: &ImmersionChart, f: &ScalarField) -> AmbientVectorField {
    let chart = chart.clone();
    let f = f.clone();
    Arc::new(move |u: &[f64], _p: &DVector<f64>| {
        let frame = chart.frame_at(u)?;
        let df = f.partials(u, chart.stencil());
        Ok(frame.tangent_vector(&(&frame.metric_inv * df)))
    })
}

/// Cheng–Yau operator `□_Φ f = D_Φ(∇f)`.
pub fn cheng_yau(field: &OperatorField, f: &ScalarField, u: &[f64]) -> Result<f64> {
    phi_divergence(field, &gradient_field(field.chart(), f), u)
}

/// `|(∇_X B)Y − (∇_Y B)X|_g` for coordinate vectors `X`, `Y`.
pub fn codazzi_residual(field: &OperatorField, u: &[f64], x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let s = field.sample(u)?;
    let d = s.covariant_derivative(x, y) - s.covariant_derivative(y, x);
    Ok(s.frame.g_norm(&d))
}

/// `|div P_j(A)|_g` for a hypersurface chart.
pub fn newton_divergence_check(chart: &ImmersionChart, j: usize, u: &[f64]) -> Result<f64> {
    if chart.codim() != 1 {
        return Err(Error::Unsupported(format!(
            "Newton operators of the shape operator need codimension 1, chart `{}` has {}",
            chart.name(),
            chart.codim()
        )));
    }
    if j == 0 || j >= chart.dim() {
        return Err(Error::Domain(format!(
            "Newton divergence check needs 1 <= j <= m - 1, got {j}"
        )));
    }
    let s = OperatorField::newton(chart.clone(), j).sample(u)?;
    Ok(s.divergence_norm())
}

/// Both sides of `tr ĨĨ = div P_D + H_{P_D}` at one point.
#[derive(Debug, Clone)]
pub struct FoliationResidual {
    /// Mean curvature vector of the leaf through `u`, in `M̄`.
    pub leaf_mean_curvature: DVector<f64>,
    /// `div P_D + H_{P_D}`.
    pub operator_side: DVector<f64>,
    pub residual: f64,
}

const FLOW_SUBSTEPS: usize = 4;

fn flow(v: &CoordVectorField, u: &[f64], t: f64) -> Vec<f64> {
    let n = FLOW_SUBSTEPS;
    let dt = t / n as f64;
    let mut y = DVector::from_column_slice(u);
    for _ in 0..n {
        let k1 = v(y.as_slice());
        let k2 = v((&y + &k1 * (0.5 * dt)).as_slice());
        let k3 = v((&y + &k2 * (0.5 * dt)).as_slice());
        let k4 = v((&y + &k3 * dt).as_slice());
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    y.as_slice().to_vec()
}

/// Leaf mean curvature from a leaf parametrization `s ↦ f(φ_k^{s_k} ∘ … ∘ φ_1^{s_1}(u))`
/// built from RK4 flows of the spanning fields, compared with the operator
/// side sampled from `P_D`.
pub fn foliation_identity_residual(field: &OperatorField, u: &[f64]) -> Result<FoliationResidual> {
    let spanning = match field.kind() {
        FieldKind::Distribution { spanning } => spanning.clone(),
        other => {
            return Err(Error::Unsupported(format!(
                "foliation identity needs a distribution field, got {other:?}"
            )))
        }
    };
    let s = field.sample(u)?;
    let chart = field.chart().clone();
    let k = spanning.len();
    let base = u.to_vec();
    let leaf_map = {
        let chart = chart.clone();
        Arc::new(move |s: &[f64]| {
            let p = spanning
                .iter()
                .zip(s)
                .fold(base.clone(), |p, (v, &t)| flow(v, &p, t));
            chart.eval(&p)
        })
    };
    let leaf = ImmersionChart::new(
        "leaf",
        *chart.ambient(),
        vec![Axis::bounded(-1.0, 1.0); k],
        leaf_map,
        vec![0.0; k],
    )?
    .with_stencil(Stencil::new(1e-3, true));
    let lhs = leaf.frame_at(&vec![0.0; k])?.mean_curvature_vector();
    let rhs = s.mean_plus_divergence();
    let residual = s.frame.ambient.norm(&(&lhs - &rhs));
    Ok(FoliationResidual {
        leaf_mean_curvature: lhs,
        operator_side: rhs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{catenoid, cylinder, parabolic_graph, plane, sphere};
    use approx::assert_abs_diff_eq;

    fn const_field(v: Vec<f64>) -> CoordVectorField {
        Arc::new(move |_| DVector::from_vec(v.clone()))
    }

    #[test]
    fn identity_field_reproduces_mean_curvature() {
        let chart = sphere(2.0).unwrap();
        let s = OperatorField::identity(chart.clone()).sample(&[0.3, 1.1]).unwrap();
        let h = chart.frame_at(&[0.3, 1.1]).unwrap().mean_curvature_vector();
        assert!((s.mean_curvature - h).norm() < 1e-8);
        assert!(s.divergence.norm() == 0.0);
        assert_abs_diff_eq!(s.trace, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cylinder_newton_one() {
        let chart = cylinder(1.0, 5.0).unwrap();
        let s = OperatorField::newton(chart, 1).sample(&[0.4, 0.7]).unwrap();
        assert!(s.mean_curvature.norm() < 1e-5);
        assert_abs_diff_eq!(s.trace, 1.0, epsilon = 1e-6);
        assert!(s.divergence_norm() < 1e-5);
    }

    #[test]
    fn scalar_divergence_is_gradient() {
        let chart = sphere(1.5).unwrap();
        let lambda = ScalarField::new(|u| 2.0 + u[0].sin() * u[1]);
        let field = OperatorField::scalar_identity(chart.clone(), lambda.clone(), 1.0);
        let u = [0.5, 1.2];
        let s = field.sample(&u).unwrap();
        let grad = &s.frame.metric_inv * DVector::from_vec(vec![u[0].cos() * u[1], u[0].sin()]);
        assert!((s.divergence - grad).norm() < 1e-5);
    }

    #[test]
    fn distribution_projection_is_idempotent() {
        let chart = parabolic_graph(2.0).unwrap();
        let field = OperatorField::distribution(chart, vec![const_field(vec![1.0, 0.3])]);
        let (frame, p) = field.mixed_at(&[0.5, -0.2]).unwrap();
        assert!((&p * &p - &p).norm() < 1e-10);
        assert_abs_diff_eq!(p.trace(), 1.0, epsilon = 1e-10);
        let gp = &frame.metric * &p;
        assert!((&gp - gp.transpose()).norm() < 1e-10);
    }

    #[test]
    fn dependent_spanning_fields_are_rejected() {
        let chart = plane(3.0).unwrap();
        let field = OperatorField::distribution(
            chart,
            vec![const_field(vec![1.0, 1.0]), const_field(vec![2.0, 2.0])],
        );
        assert!(matches!(
            field.sample(&[0.1, 0.2]),
            Err(Error::DegenerateDistribution { .. })
        ));
    }

    #[test]
    fn newton_divergence_rejects_codim_two() {
        use crate::geometry::{term_chart, AmbientSpace, Axis, Term};
        let coord = |a: usize, p: u32| {
            let mut powers = vec![0, 0];
            powers[a] = p;
            vec![Term { coef: 1.0, powers, factors: vec![] }]
        };
        let chart = term_chart(
            "surface_in_r4",
            AmbientSpace::euclidean(4).unwrap(),
            vec![Axis::bounded(-1.0, 1.0); 2],
            vec![coord(0, 1), coord(1, 1), coord(0, 2), coord(1, 2)],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            newton_divergence_check(&chart, 1, &[0.1, 0.1]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn catenoid_shape_operator_is_codazzi() {
        let chart = catenoid(2.0).unwrap();
        let field = OperatorField::shape_operator(chart);
        let r = codazzi_residual(
            &field,
            &[0.3, 0.4],
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        assert!(r < 1e-4, "{r}");
    }
}
