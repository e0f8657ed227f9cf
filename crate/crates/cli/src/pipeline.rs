//! In-memory pipelines: solve, build, verify and the oracle comparison.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use tlmls::frame::{
    build_coordinate_mc, build_general_mc, build_minimal_mc, compute_l_integral, flatness_probes, flatness_residual,
    integrate_frame, FrameField, McForm, Order,
};
use tlmls::gaussmap::{alpha_from_connection, primitive_check};
use tlmls::grid::Field;
use tlmls::linalg::{max_abs, max_abs_vec, re, u21_residual, ComplexMat3, I};
use tlmls::loop_algebra::{epsilon, twisting_defect, LoopKind};
use tlmls::surface::oracle::{clifford_f0, clifford_f0_matrix, closure_check_clifford, closure_defect, oracle_clifford, oracle_rp};
use tlmls::surface::{lift_from_frame, recover_invariants, verify_lift, LiftField};
use tlmls::tzitzeica::{residual_with_lm, rp_omega, solve_goursat, GoursatData, SolutionField};

use crate::config::{lambda_label, RunConfig};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct Solved {
    pub data: GoursatData,
    pub sol: SolutionField,
    pub residual: f64,
    /// Max deviation from the closed-form `omega` of a preset, if there is one.
    pub oracle_error: Option<f64>,
}

pub fn solve(cfg: &RunConfig) -> Result<Solved, CliError> {
    let data = cfg.goursat_data()?;
    let sol = solve_goursat(&data).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(finish_solve(cfg, data, sol))
}

/// Wraps an existing `omega` field with the residual and oracle diagnostics.
pub fn finish_solve(cfg: &RunConfig, data: GoursatData, sol: SolutionField) -> Solved {
    let lm = cfg.inject.map_or(0.0, |i| i.l_im * i.m_im);
    let residual = residual_with_lm(&sol, data.q(), data.r(), lm).max_abs;
    let oracle_error = match cfg.preset() {
        Some("rp") => Some(sol.max_error(rp_omega)),
        Some("clifford") => Some(sol.max_error(|_, _| 0.0)),
        _ => None,
    };
    Solved { data, sol, residual, oracle_error }
}

/// Maurer-Cartan form of the configured data at `lambda`: minimal, or general when a mean
/// curvature form is injected.
pub fn mc_form(cfg: &RunConfig, solved: &Solved, lambda: Complex64) -> Result<McForm, CliError> {
    let g = *solved.sol.grid();
    let q = solved.data.q();
    let r = solved.data.r();
    let form = match cfg.inject {
        None => build_minimal_mc(&solved.sol, q, r, lambda),
        Some(inj) => {
            let l = Field::filled(g, inj.l_im);
            let m = Field::filled(g, inj.m_im);
            let tol = cfg.tol("closedness");
            compute_l_integral(&l, &m, tol)
                .and_then(|integral| build_general_mc(&solved.sol, q, r, &l, &m, &integral, lambda, tol))
        }
    };
    form.map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct Built {
    pub lambda: Complex64,
    pub frame: FrameField,
    pub lift: LiftField,
}

/// Integrates one frame per configured lambda. With injected data the coordinate frame is used.
pub fn build(cfg: &RunConfig, solved: &Solved) -> Result<Vec<Built>, CliError> {
    cfg.lambda_values()
        .into_par_iter()
        .map(|lambda| {
            let frame = match cfg.inject {
                None => {
                    let mc = mc_form(cfg, solved, lambda)?;
                    integrate_frame(&mc, Order::UFirst)
                }
                Some(inj) => {
                    let g = *solved.sol.grid();
                    let (l, m) = (Field::filled(g, inj.l_im), Field::filled(g, inj.m_im));
                    build_coordinate_mc(&solved.sol, solved.data.q(), solved.data.r(), &l, &m)
                        .and_then(|mc| integrate_frame(&mc, Order::UFirst))
                }
            }
            .map_err(|e| CliError::Numerical(e.to_string()))?;
            let lift = lift_from_frame(&frame);
            Ok(Built { lambda, frame, lift })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(value: f64, tolerance: f64) -> Self {
        Self { max_residual: value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: BTreeMap<String, Check>,
    /// Interior means of recovered quantities, as `[re, im]`.
    pub recovered: BTreeMap<String, [f64; 2]>,
    pub overall: bool,
}

impl VerifyReport {
    fn new() -> Self {
        Self { checks: BTreeMap::new(), recovered: BTreeMap::new(), overall: true }
    }

    fn push(&mut self, name: impl Into<String>, check: Check) {
        self.overall &= check.pass;
        self.checks.insert(name.into(), check);
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, c)| !c.pass).map(|(n, _)| n.as_str()).collect()
    }
}

fn interior_mean(field: &Field<Complex64>, margin: usize) -> [f64; 2] {
    let g = *field.grid();
    let (mut sum, mut count) = (Complex64::new(0.0, 0.0), 0usize);
    for (i, j) in g.interior(margin) {
        sum += field.at(i, j);
        count += 1;
    }
    let mean = sum / count.max(1) as f64;
    [mean.re, mean.im]
}

/// Runs every check on the frames and lifts of one build.
pub fn verify(cfg: &RunConfig, solved: &Solved, built: &[Built]) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport::new();
    let g = *solved.sol.grid();
    let (l_im, m_im) = cfg.inject.map_or((0.0, 0.0), |i| (i.l_im, i.m_im));

    for b in built {
        let tag = lambda_label(b.lambda);
        let drift = if b.lambda.im == 0.0 {
            b.frame.frames.max_over(0, u21_residual)
        } else {
            b.frame.frames.max_over(0, |f| (f.determinant() - 1.0).norm())
        };
        report.push(format!("drift@{tag}"), Check::at_most(drift, cfg.tol("drift")));
        if cfg.inject.is_none() {
            let det = b.frame.frames.max_over(0, |f| (f.determinant() - 1.0).norm());
            report.push(format!("det@{tag}"), Check::at_most(det, cfg.tol("det")));
        }

        if b.lambda.im != 0.0 {
            continue;
        }
        let lift = verify_lift(&b.lift);
        report.push(format!("lift_norm@{tag}"), Check::at_most(lift.norm, cfg.tol("lift_norm")));
        let identities = [lift.null_u, lift.null_v, lift.metric_imag, lift.horizontal_u, lift.horizontal_v]
            .into_iter()
            .fold(0.0, f64::max);
        report.push(format!("lift_identities@{tag}"), Check::at_most(identities, cfg.tol("lift_identities")));
        report.push(
            format!("metric_positive@{tag}"),
            Check { max_residual: -lift.min_metric, tolerance: 0.0, pass: lift.min_metric > 0.0 },
        );
        let inv = match recover_invariants(&b.lift) {
            Ok(inv) => inv,
            Err(_) => continue,
        };
        let exp_omega = inv
            .exp_omega
            .map_indexed(|i, j, e| {
                let want = solved.sol.omega.at(i, j).exp();
                ((e - want) / want).abs()
            })
            .max_over(0, |x| *x);
        report.push(format!("exp_omega@{tag}"), Check::at_most(exp_omega, cfg.tol("exp_omega_rel")));
        let lambda = b.lambda.re;
        let q = solved.data.q();
        let r = solved.data.r();
        let q_err = inv.q.map_indexed(|i, _, z| (z - I * q[i] * lambda.powi(-3)).norm()).max_over(2, |x| *x);
        let r_err = inv.r.map_indexed(|_, j, z| (z - I * r[j] * lambda.powi(3)).norm()).max_over(2, |x| *x);
        report.push(format!("cubic_q@{tag}"), Check::at_most(q_err, cfg.tol("cubic")));
        report.push(format!("cubic_r@{tag}"), Check::at_most(r_err, cfg.tol("cubic")));
        let lm = inv
            .l
            .map_indexed(|i, j, z| (z - I * l_im).norm().max((inv.m.at(i, j) - I * m_im).norm()))
            .max_over(0, |x| *x);
        report.push(format!("mean_curvature@{tag}"), Check::at_most(lm, cfg.tol("mean_curvature")));
        report.push(format!("spurious_real@{tag}"), Check::at_most(inv.spurious_real_part(2), cfg.tol("spurious_real")));
        report.recovered.insert(format!("q@{tag}"), interior_mean(&inv.q, 2));
        report.recovered.insert(format!("r@{tag}"), interior_mean(&inv.r, 2));
        report.recovered.insert(format!("l@{tag}"), interior_mean(&inv.l, 0));
        report.recovered.insert(format!("m@{tag}"), interior_mean(&inv.m, 0));
    }

    let base = mc_form(cfg, solved, re(1.0))?;
    let scale = flatness_residual(&base).max_abs.max(g.hu * g.hv);
    let bound = cfg.tol("flatness_factor") * scale;
    let flat = |lambda: Complex64| -> Result<f64, CliError> {
        Ok(flatness_residual(&base.with_lambda(lambda).map_err(|e| CliError::Usage(e.to_string()))?).max_abs)
    };
    let e = epsilon();
    let roots = [re(1.0), e * e, e.powi(4)].into_iter().map(flat).collect::<Result<Vec<_>, _>>()?;
    report.push("flatness_cube_roots", Check::at_most(roots.into_iter().fold(0.0, f64::max), bound));
    let probes = flatness_probes().into_iter().map(flat).collect::<Result<Vec<_>, _>>()?;
    let family = Check::at_most(probes.iter().copied().fold(0.0, f64::max), bound);
    report.push("flatness_probes", family);
    report.push("flatness_0.7", Check::at_most(flat(re(0.7))?, bound));

    let twist = g
        .nodes()
        .map(|(i, j)| {
            twisting_defect(&base.u_loop(i, j), LoopKind::Algebra)
                .max()
                .max(twisting_defect(&base.v_loop(i, j), LoopKind::Algebra).max())
        })
        .fold(0.0, f64::max);
    report.push("twisting", Check::at_most(twist, cfg.tol("twisting")));

    let primitive = primitive_check(&alpha_from_connection(&base), cfg.tol("primitive"))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let primitive = Check::at_most(primitive.offending(), primitive.tol * primitive.scale.max(1.0));
    report.push("primitive", primitive);

    let vanishing = l_im.abs().max(m_im.abs()) <= cfg.tol("mean_curvature");
    let statements = [vanishing, primitive.pass, family.pass];
    let disagreements = statements.iter().filter(|s| **s != statements[0]).count();
    report.push("equivalence", Check::at_most(disagreements as f64, 0.0));
    Ok(report)
}

/// Deviations from the closed forms of a preset example at `lambda = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDiff {
    pub example: String,
    pub omega_max_error: f64,
    pub frame_max_error: f64,
    pub lift_max_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<Closure>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Closure {
    pub a0: f64,
    pub a1_5: f64,
    pub pi_shift: f64,
}

/// Closed-form frame and lift of the preset on the configured grid.
pub fn oracle_fields(name: &str, cfg: &RunConfig) -> Result<(Field<ComplexMat3>, LiftField), CliError> {
    let g = cfg.grid_spec()?;
    let frames = match name {
        "rp" => {
            let mut out = Vec::with_capacity(g.len());
            for (i, j) in g.nodes() {
                out.push(oracle_rp(g.u(i), g.v(j), re(1.0)).map_err(|e| CliError::Numerical(e.to_string()))?.0);
            }
            Field::from_vec(g, out).map_err(|e| CliError::Numerical(e.to_string()))?
        }
        "clifford" => Field::from_fn(g, |i, j| oracle_clifford(g.u(i), g.v(j), re(1.0)).0),
        other => return Err(CliError::Usage(format!("unknown example {other:?}"))),
    };
    let lift = LiftField { lambda: re(1.0), values: frames.map(|f| f.column(2).into_owned()) };
    Ok((frames, lift))
}

pub fn oracle_diff(name: &str, cfg: &RunConfig, solved: &Solved, built: &Built) -> Result<OracleDiff, CliError> {
    let (frames, lift) = oracle_fields(name, cfg)?;
    let frame_max_error =
        built.frame.frames.map_indexed(|i, j, f| max_abs(&(f - frames.at(i, j)))).max_over(0, |x| *x);
    let lift_max_error = match name {
        "clifford" => {
            let g = *lift.grid();
            let f0 = clifford_f0_matrix();
            built.lift.values.map_indexed(|i, j, f| max_abs_vec(&(f - f0 * clifford_f0(g.u(i), g.v(j))))).max_over(0, |x| *x)
        }
        _ => built.lift.values.map_indexed(|i, j, f| max_abs_vec(&(f - lift.at(i, j)))).max_over(0, |x| *x),
    };
    let closure = (name == "clifford")
        .then(|| -> Result<Closure, CliError> {
            let c = |a| closure_check_clifford(a, 64).map_err(|e| CliError::Numerical(e.to_string()));
            Ok(Closure { a0: c(0.0)?, a1_5: c(1.5)?, pi_shift: closure_defect(0.0, 64, std::f64::consts::PI) })
        })
        .transpose()?;
    let omega_max_error = solved.oracle_error.unwrap_or(f64::NAN);
    let frame_tol = if name == "clifford" { 1e-8 } else { cfg.tol("oracle_frame") };
    let pass = omega_max_error <= cfg.tol("oracle_omega")
        && frame_max_error <= frame_tol
        && lift_max_error <= frame_tol
        && closure.as_ref().is_none_or(|c| {
            c.a0 <= cfg.tol("closure") && c.a1_5 <= cfg.tol("closure") && c.pi_shift >= 0.5
        });
    Ok(OracleDiff { example: name.into(), omega_max_error, frame_max_error, lift_max_error, closure, pass })
}
