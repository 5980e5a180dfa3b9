//! Finite-difference gradient checks; the bodies live in `support` so the
//! acceptance run can share them.

mod support;

use support::gradient_suite as suite;
use triad_coref_core::model::ModelKind;

#[test]
fn matmul() {
    suite::matmul();
}

#[test]
fn add_sub_mul_with_broadcasting() {
    suite::add_sub_mul_with_broadcasting();
}

#[test]
fn elementwise_activations() {
    suite::elementwise_activations();
}

#[test]
fn softmax_and_masked_softmax() {
    suite::softmax_and_masked_softmax();
}

#[test]
fn concatenation_and_sum() {
    suite::concatenation_and_sum();
}

#[test]
fn reshaping_ops() {
    suite::reshaping_ops();
}

#[test]
fn dropout_with_fixed_mask() {
    suite::dropout_with_fixed_mask();
}

#[test]
fn binary_cross_entropy() {
    suite::binary_cross_entropy();
}

#[test]
fn composite_attention_block() {
    suite::composite_attention_block();
}

#[test]
fn bilstm_with_masked_steps() {
    suite::bilstm_with_masked_steps();
}

#[test]
fn full_triad_model() {
    suite::full_model(ModelKind::Triad);
}

#[test]
fn full_dyad_model() {
    suite::full_model(ModelKind::Dyad);
}
