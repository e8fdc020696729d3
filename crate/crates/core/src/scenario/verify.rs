//! Randomized identity suites for the operator algebra and operator fields.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fields::{
    codazzi_residual, newton_divergence_check, proposition_residuals, AmbientVectorField, OperatorField,
    ScalarField,
};
use crate::geometry::{self as charts, ImmersionChart};
use crate::symop::{
    eigen_identity_residual, numeric_rank, rank_bound_witness, sampling, semidefinite_class,
    symmetric_polynomials, trace_identities, Definiteness, SymOp,
};

use super::report::{CheckRecord, Provenance, Report};
use super::run::sample_points;

/// Algebraic identities are exact; this only absorbs rounding.
pub const ALGEBRA_TOL: f64 = 1e-9;
/// Field identities go through nested finite differences.
pub const FIELD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random operators per dimension.
    pub count: usize,
    pub dims: Vec<usize>,
    /// Points per chart for the field suites.
    pub field_points: usize,
}

impl VerifyOptions {
    pub fn new(seed: u64, count: usize, dims: Vec<usize>) -> Self {
        Self {
            seed,
            count,
            dims,
            field_points: 10,
        }
    }
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self::new(1, 1000, (2..=6).collect())
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct AlgebraStats {
    trace: f64,
    eigen: f64,
    operators: usize,
    indefinite: usize,
    constructed: usize,
    rank_failures: usize,
    rank_cases: usize,
}

/// Trace and eigenvector identities of every `P_j(T)`.
fn identities_of(t: &SymOp, stats: &mut AlgebraStats) -> Result<()> {
    let m = t.dim();
    for j in 0..m {
        stats.eigen = stats.eigen.max(eigen_identity_residual(t, j)?);
        if j >= 1 {
            stats.trace = stats.trace.max(trace_identities(t, j)?.max());
        }
    }
    stats.operators += 1;
    Ok(())
}

fn algebra_suite(rng: &mut ChaCha8Rng, opts: &VerifyOptions, fixed: Option<&SymOp>) -> Result<AlgebraStats> {
    let mut stats = AlgebraStats::default();
    for &m in &opts.dims {
        if m < 2 {
            return Err(Error::Domain(format!("identity suites need m >= 2, got {m}")));
        }
        for _ in 0..opts.count {
            let t = match fixed {
                Some(t) if t.dim() == m => t.clone(),
                Some(_) => continue,
                None => sampling::random_symmetric(rng, m),
            };
            identities_of(&t, &mut stats)?;

            // P_j is semidefinite whenever S_{j+1} vanishes.
            for j in 1..m {
                let c = match fixed {
                    Some(t) => t.clone(),
                    None => sampling::operator_with_vanishing(rng, m, j + 1),
                };
                if fixed.is_some() && symmetric_polynomials(&c.eigenvalues())[j + 1].abs() > ALGEBRA_TOL {
                    continue;
                }
                let p = crate::symop::newton_operator(&c, j)?;
                stats.constructed += 1;
                if semidefinite_class(&p, ALGEBRA_TOL) == Definiteness::Indefinite {
                    stats.indefinite += 1;
                }
            }

            // Rank bound: random operators exercise the contrapositive,
            // rank-deficient ones satisfy the hypothesis outright.
            for j in 2..=m {
                let low = match fixed {
                    Some(t) => t.clone(),
                    None => {
                        let k = rng.random_range(0..=j - 2);
                        let mut values = vec![0.0; m];
                        for v in values.iter_mut().take(k) {
                            *v = rng.random_range(0.2..=1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                        }
                        // S_{j-1} = S_j = 0 needs fewer than j - 1 nonzero values.
                        SymOp::from_spectrum(&values, &sampling::random_orthogonal(rng, m))
                    }
                };
                for op in [&low, &t] {
                    stats.rank_cases += 1;
                    if !rank_bound_witness(op, j, ALGEBRA_TOL)? {
                        stats.rank_failures += 1;
                    }
                }
                if fixed.is_none() && numeric_rank(&low, ALGEBRA_TOL) > j - 2 {
                    stats.rank_failures += 1;
                }
            }
        }
    }
    Ok(stats)
}

struct FieldStats {
    propositions: f64,
    codazzi: f64,
    newton: f64,
    points: usize,
}

fn field_suite(rng: &mut ChaCha8Rng, points: usize) -> Result<FieldStats> {
    let mut stats = FieldStats {
        propositions: 0.0,
        codazzi: 0.0,
        newton: 0.0,
        points: 0,
    };
    let hyper = charts::hyperbolic_normal_plane(1.0, 2.0)?;
    let fields: Vec<OperatorField> = vec![
        OperatorField::identity(charts::plane(3.0)?),
        OperatorField::newton(charts::catenoid(1.5)?, 1),
        OperatorField::shape_operator(charts::helicoid(3.0, 1.5)?),
        OperatorField::scalar_identity(hyper.clone(), ScalarField::exp_neg_distance(&hyper, 1.0), 1.0),
    ];
    for field in &fields {
        let chart = field.chart().clone();
        let amb = *chart.ambient();
        let n = amb.coordinate_dim();
        let v0 = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.0..=1.0)));
        let x: AmbientVectorField =
            Arc::new(move |_u: &[f64], p: &DVector<f64>| Ok(amb.project_to_tangent(p, &v0)));
        let cc = chart.clone();
        let f = ScalarField::new(move |u| 1.0 + 0.25 * cc.eval(u).iter().skip(1).sum::<f64>().sin());
        for u in sample_points(&chart, rng, points, |_| true)? {
            let r = proposition_residuals(field, &x, &f, &u)?;
            stats.propositions = stats.propositions.max(r.max_relative());
            stats.points += 1;
        }
    }

    let hypersurfaces: Vec<ImmersionChart> = vec![
        charts::cylinder(1.0, 3.0)?,
        charts::sphere(1.0)?,
        charts::catenoid(1.5)?,
        charts::helicoid(3.0, 1.5)?,
    ];
    for chart in &hypersurfaces {
        let shape = OperatorField::shape_operator(chart.clone());
        let m = chart.dim();
        for u in sample_points(chart, rng, points, |_| true)? {
            let a = shape.sample(&u)?;
            let grad = a.nabla.iter().map(|n| n.norm_squared()).sum::<f64>().sqrt();
            for i in 0..m {
                for k in i + 1..m {
                    let (ei, ek) = (unit(m, i), unit(m, k));
                    let c = codazzi_residual(&shape, &u, &ei, &ek)?;
                    let scale = 1.0 + grad * a.frame.g_norm(&ei) * a.frame.g_norm(&ek);
                    stats.codazzi = stats.codazzi.max(c / scale);
                }
            }
            for j in 1..m {
                let d = newton_divergence_check(chart, j, &u)?;
                stats.newton = stats.newton.max(d / (1.0 + a.phi.norm() * grad));
            }
        }
    }
    Ok(stats)
}

fn unit(m: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(m);
    e[i] = 1.0;
    e
}

/// Runs the algebraic and field identity suites with a fixed seed and
/// collects their worst residuals. Identical options give identical reports.
pub fn verify_identities(opts: &VerifyOptions) -> Result<Report> {
    verify_with(opts, None)
}

/// Algebraic suites on a single operator (repeated `count` times) in its
/// own dimension; the field suites run as usual.
pub fn verify_operator(opts: &VerifyOptions, t: &SymOp) -> Result<Report> {
    verify_with(opts, Some(t))
}

fn verify_with(opts: &VerifyOptions, fixed: Option<&SymOp>) -> Result<Report> {
    if opts.count == 0 {
        return Err(Error::Domain("verify needs count >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let a = algebra_suite(&mut rng, opts, fixed)?;
    let f = field_suite(&mut rng, opts.field_points)?;

    let checks = vec![
        CheckRecord::new(
            "symop:trace_identities",
            a.trace <= ALGEBRA_TOL,
            format!("max relative residual of tr P_j, tr(T P_j), tr(T² P_j) = {:.2e} over {} operators", a.trace, a.operators),
            json!({ "max_relative": a.trace, "operators": a.operators }),
        ),
        CheckRecord::new(
            "symop:eigen_identity",
            a.eigen <= ALGEBRA_TOL,
            format!("max |P_j e_k − S_j(T_k) e_k| / ‖P_j‖ = {:.2e}", a.eigen),
            json!({ "max_relative": a.eigen }),
        ),
        CheckRecord::new(
            "symop:semidefinite",
            a.indefinite == 0,
            format!("{} indefinite of {} operators with S_(j+1) = 0", a.indefinite, a.constructed),
            json!({ "indefinite": a.indefinite, "constructed": a.constructed }),
        ),
        CheckRecord::new(
            "symop:rank_witness",
            a.rank_failures == 0,
            format!("{} rank-bound violations in {} cases", a.rank_failures, a.rank_cases),
            json!({ "failures": a.rank_failures, "cases": a.rank_cases }),
        ),
        CheckRecord::new(
            "fields:propositions",
            f.propositions <= FIELD_TOL,
            format!("max relative residual of the Φ-divergence identities = {:.2e}", f.propositions),
            json!({ "max_relative": f.propositions, "points": f.points }),
        ),
        CheckRecord::new(
            "fields:codazzi",
            f.codazzi <= 1e-3,
            format!("max |(∇_X A)Y − (∇_Y A)X| / scale = {:.2e}", f.codazzi),
            json!({ "max_relative": f.codazzi }),
        ),
        CheckRecord::new(
            "fields:newton_divergence",
            f.newton <= 1e-3,
            format!("max |div P_j(A)|_g / scale = {:.2e}", f.newton),
            json!({ "max_relative": f.newton }),
        ),
    ];
    let dims = opts.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    let config = format!("verify seed={} count={} dims={dims} points={}", opts.seed, opts.count, opts.field_points);
    Ok(Report {
        scenario: "verify".into(),
        provenance: Provenance {
            config_hash: super::config::sha256_hex(config.as_bytes()),
            resolution: 0,
            seed: opts.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        checks,
        curves: vec![],
        runtimes: None,
    })
}
