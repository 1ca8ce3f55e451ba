//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use bcov_core::{generate_model, DGBVModel, HodgeData, ZooParams};

/// A zoo model with its Hodge data; panics on unknown names.
pub fn fixture(name: &str) -> (Arc<DGBVModel>, HodgeData) {
    let spec = generate_model(name, &ZooParams::default()).expect("zoo model");
    let model = Arc::new(DGBVModel::from_spec(&spec).expect("zoo models validate"));
    let hodge = HodgeData::new(&model).expect("zoo models have Hodge data");
    (model, hodge)
}
