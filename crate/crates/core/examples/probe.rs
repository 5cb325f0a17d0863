//! Scratch probe for scenario-level magnitudes.

use gridlearn::grid::{build_compound_plant, GridParams};
use gridlearn::lifted::build_p_matrix;
use nalgebra::{DMatrix, DVector};

fn main() {
    let one = GridParams::new(
        DVector::from_element(1, 5.0),
        DVector::from_element(1, 400.0),
        DVector::from_element(1, 0.05),
        DVector::from_element(1, 0.04),
        DMatrix::zeros(1, 1),
    )
    .unwrap();
    let small = build_compound_plant(&one).unwrap();
    let sys1 = build_p_matrix(&small, 435).unwrap();
    for m in 0..6 {
        println!("lag {m}: {:+.6e}", sys1.blocks[m][(0, 0)]);
    }
    println!("lag 23: {:+.6e}", sys1.blocks[23][(0, 0)]);
}
