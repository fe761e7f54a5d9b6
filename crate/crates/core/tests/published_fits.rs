//! The fit routines against published convergence tables.

use approx::assert_relative_eq;
use trustdyn::stats::{power_law_fit, quadratic_fit};

const USERS: [f64; 14] = [
    20.0, 40.0, 60.0, 80.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0,
];
const I2C: [f64; 14] = [
    64.61, 78.29, 88.96, 95.00, 101.03, 123.85, 138.81, 159.41, 164.58, 181.74, 188.29, 192.70,
    198.71, 208.01,
];

/// Converged runs out of 100 at phi = 1.40, 1.41, ..., 1.60.
const FINE_COUNTS: [f64; 21] = [
    100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 94.0, 85.0, 86.0, 60.0, 54.0, 34.0, 26.0, 30.0,
    22.0, 13.0, 11.0, 4.0, 7.0, 3.0,
];

#[test]
fn published_power_law() {
    let pts: Vec<_> = USERS.into_iter().zip(I2C).collect();
    let fit = power_law_fit(&pts).unwrap();
    assert_relative_eq!(fit.coefficients[0], 25.586, max_relative = 1e-3);
    assert_relative_eq!(fit.coefficients[1], 0.3021, max_relative = 1e-3);
    assert_relative_eq!(fit.r_squared, 0.9977, max_relative = 1e-3);
}

#[test]
fn published_quadratic_window() {
    // The published curve is fitted from phi = 1.46 onward, where counts start to fall.
    let pts: Vec<_> = FINE_COUNTS
        .iter()
        .enumerate()
        .skip(6)
        .map(|(i, &c)| (1.40 + 0.01 * i as f64, c))
        .collect();
    let fit = quadratic_fit(&pts).unwrap();
    assert_relative_eq!(fit.coefficients[0], 4226.7, max_relative = 1e-3);
    assert_relative_eq!(fit.coefficients[1], -13689.0, max_relative = 1e-3);
    assert_relative_eq!(fit.coefficients[2], 11084.0, max_relative = 1e-3);
    assert_relative_eq!(fit.r_squared, 0.973, max_relative = 1e-3);
}

#[test]
fn full_fine_grid_fits_worse() {
    let pts: Vec<_> = FINE_COUNTS
        .iter()
        .enumerate()
        .map(|(i, &c)| (1.40 + 0.01 * i as f64, c))
        .collect();
    let full = quadratic_fit(&pts).unwrap();
    assert!(full.r_squared > 0.9);
    assert!((full.coefficients[0] - 4226.7).abs() > 100.0);
}
