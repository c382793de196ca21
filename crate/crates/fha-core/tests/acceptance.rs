//! The build gate. Each test runs one of the nine corpus checks and prints
//! its one-line verdict; a failing check fails the build. The checks are
//! deterministic given the seed, so a failure here reproduces exactly with
//! `cargo test --test acceptance`.

use fha_core::corpus::{self, CriterionReport, DEFAULT_SEED};

fn gate(report: CriterionReport) {
    println!("{report}");
    assert!(report.pass, "{report}");
}

#[test]
fn criterion_1_consistency() {
    gate(corpus::criterion_1());
}

#[test]
fn criterion_2_canonicity() {
    gate(corpus::criterion_2(DEFAULT_SEED));
}

#[test]
fn criterion_3_extraction_totality() {
    gate(corpus::criterion_3(DEFAULT_SEED));
}

#[test]
fn criterion_4_backend_agreement() {
    gate(corpus::criterion_4(DEFAULT_SEED));
}

#[test]
fn criterion_5_computation_laws() {
    gate(corpus::criterion_5(DEFAULT_SEED));
}

#[test]
fn criterion_6_exception_goldens() {
    gate(corpus::criterion_6());
}

#[test]
fn criterion_7_recursion_and_fuel() {
    gate(corpus::criterion_7());
}

#[test]
fn criterion_8_no_sequencing_law_through_handlers() {
    gate(corpus::criterion_8());
}

#[test]
fn criterion_9_parametricity_smoke_test() {
    gate(corpus::criterion_9(DEFAULT_SEED));
}
