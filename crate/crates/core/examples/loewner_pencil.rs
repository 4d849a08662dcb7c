//! Smallest generalized eigenvalue of `A - λB*B`, including singular `B`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use objstab::pencil::lambda_min;
use objstab::tolerance::ToleranceConfig;

fn c(rows: usize, cols: usize, v: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(rows, cols, v).map(|x| Complex64::new(x, 0.0))
}

fn main() -> objstab::Result<()> {
    let tol = ToleranceConfig::default();
    let cases = [
        ("full rank", c(2, 2, &[2.0, 0.0, 0.0, 3.0]), c(2, 2, &[1.0, 0.0, 0.0, 1.0])),
        ("kernel of B inside kernel of A", c(2, 2, &[2.0, 0.0, 0.0, 0.0]), c(1, 2, &[1.0, 0.0])),
        ("A > 0 on kernel of B", c(2, 2, &[2.0, 0.0, 0.0, 1.0]), c(1, 2, &[1.0, 0.0])),
        ("A indefinite on kernel of B", c(2, 2, &[2.0, 0.0, 0.0, -1.0]), c(1, 2, &[1.0, 0.0])),
        ("coupled kernel", c(2, 2, &[1.0, 1.0, 1.0, 1.0]), c(1, 2, &[1.0, 0.0])),
    ];
    for (name, a, b) in cases {
        let r = lambda_min(&a, &b, &tol)?;
        println!("{name:>32}: λ = {:?}  rank B = {}/{}  {}", r.value, r.rank, r.cols, r.reason.unwrap_or_default());
    }
    Ok(())
}
