mod common;

use common::suites;

#[test]
fn clifford_sets_anticommute_to_machine_precision() {
    suites::clifford_sets_anticommute_to_machine_precision();
}

#[test]
fn contraction_squares_to_the_norm() {
    suites::contraction_squares_to_the_norm();
}

#[test]
fn regular_value_perturbations_leave_the_degree_unchanged() {
    suites::regular_value_perturbations_leave_the_degree_unchanged();
}

#[test]
fn degree_of_a_product_is_the_product_of_degrees() {
    suites::degree_of_a_product_is_the_product_of_degrees();
}

#[test]
fn constant_linear_maps_multiply_by_the_determinant_sign() {
    suites::constant_linear_maps_multiply_by_the_determinant_sign();
}

#[test]
fn winding_pair_product_matches_the_gauss_map() {
    suites::winding_pair_product_matches_the_gauss_map();
}

#[test]
fn every_stage_of_a_chain_has_the_base_degree() {
    suites::every_stage_of_a_chain_has_the_base_degree();
}

#[test]
fn interleaved_orientation_differs_by_the_block_sign() {
    suites::interleaved_orientation_differs_by_the_block_sign();
}

#[test]
fn charges_do_not_depend_on_the_regularization_scale() {
    suites::charges_do_not_depend_on_the_regularization_scale();
}

#[test]
fn charges_do_not_depend_on_the_inverse_mass() {
    suites::charges_do_not_depend_on_the_inverse_mass();
}

#[test]
fn gauss_map_agrees_with_root_counting_in_low_dimension() {
    suites::gauss_map_agrees_with_root_counting_in_low_dimension();
}
