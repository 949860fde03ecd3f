use crate::qmatrix::QMatrix;
use crate::rng::{gaussian_qmatrix, rng_from_seed};

pub(crate) fn random_qmatrix(rows: usize, cols: usize, seed: u64) -> QMatrix {
    gaussian_qmatrix(rows, cols, 1.0, &mut rng_from_seed(seed)).expect("valid shape")
}
