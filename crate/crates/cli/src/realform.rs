//! Report of `classify-realform`: algebra identities and the five real form involutions.

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;
use tlmls::gaussmap::{quasi_symmetric_check, QuasiSymmetricReport};
use tlmls::linalg::{c, diag};
use tlmls::loop_algebra::{random_loop, real_form_apply, relation_check, LoopMatrix, RealForm, RelationReport};

/// Identity tolerance of the algebra checks.
pub const IDENTITY_TOL: f64 = 1e-12;
pub const SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealFormRow {
    pub case: u8,
    pub form: RealForm,
    pub almost_compact: bool,
    /// Max distance of `rho(rho(g))` from `g` over random loops.
    pub involution_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealFormReport {
    pub seed: u64,
    pub relations: RelationReport,
    pub real_forms: Vec<RealFormRow>,
    /// Distance of `diag(0.4i, 0.4i, -0.8i)` from its image under the timelike real form.
    pub timelike_fixed_point: f64,
    pub quasi_symmetric: QuasiSymmetricReport,
    pub pass: bool,
}

pub fn classify(seed: u64) -> RealFormReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let relations = relation_check(&mut rng, SAMPLES);
    let loops: Vec<LoopMatrix> = (0..20).map(|_| random_loop(&mut rng, 2)).collect();
    let real_forms: Vec<RealFormRow> = RealForm::ALL
        .into_iter()
        .map(|form| {
            let involution_defect = loops
                .iter()
                .map(|g| real_form_apply(form, &real_form_apply(form, g)).distance(g))
                .fold(0.0, f64::max);
            RealFormRow { case: form.index(), form, almost_compact: form.almost_compact(), involution_defect }
        })
        .collect();
    let fixed = LoopMatrix::constant(diag(c(0.0, 0.4), c(0.0, 0.4), c(0.0, -0.8)));
    let timelike_fixed_point = real_form_apply(RealForm::TimelikeMinimalLagrangian, &fixed).distance(&fixed);
    let quasi_symmetric = quasi_symmetric_check(&mut rng, SAMPLES).expect("stabilizer samples are invertible");
    let pass = relations.max_identity_deviation() <= IDENTITY_TOL
        && relations.sigma_cubed_witness > 0.5
        && real_forms.iter().all(|r| r.involution_defect <= IDENTITY_TOL)
        && timelike_fixed_point <= IDENTITY_TOL
        && quasi_symmetric.holds(IDENTITY_TOL);
    RealFormReport { seed, relations, real_forms, timelike_fixed_point, quasi_symmetric, pass }
}
