//! Sizing probe: stepper accuracy and contour cost at the wavenumbers
//! the cross-validation exercises.

use std::time::Instant;

use modesweep::bounds::norm_h;
use modesweep::evolve::{contour_semigroup, step_mode, ContourSettings};
use modesweep::grid::{Domain, Grid};
use modesweep::shearflow::{FlowKind, ShearFlow};
use modesweep::tripledeck::DataFamily;

use num_complex::Complex64;

fn main() {
    let flow = ShearFlow::new(FlowKind::ExpConcave);
    let t = 0.1;
    for (k, n) in [(16.0_f64, 256), (64.0, 256)] {
        let grid = Grid::build(Domain::HalfLine, n, 40.0, 0.12).unwrap();
        let omega = DataFamily::Gaussian.profile(&grid);
        let a = grid.mean_u(&omega);
        let mut reference: Option<(Vec<Complex64>, Complex64)> = None;
        for margin in [0.05, 0.025, 0.0125] {
            let dt = margin / (k * (grid.y_max() + 1.0));
            let start = Instant::now();
            let traj = step_mode(&flow, k, &grid, &omega, a, t, dt).unwrap();
            let fin = traj.final_sample();
            let scale = fin.log_offset.exp();
            let state: Vec<Complex64> = fin.omega.iter().map(|v| v * scale).collect();
            let a_fin = fin.a * scale;
            let ratio = norm_h(&grid, &state, a_fin) / norm_h(&grid, &omega, a);
            let gap = match &reference {
                Some((po, pa)) => {
                    let diff: Vec<Complex64> =
                        state.iter().zip(po).map(|(x, y)| x - y).collect();
                    norm_h(&grid, &diff, a_fin - pa) / norm_h(&grid, po, *pa)
                }
                None => f64::NAN,
            };
            println!(
                "k={k} N={n} stepper margin={margin}: ratio={ratio:.6} drift={:.2e} \
                 gap-vs-prev={gap:.3e} ({:?})",
                traj.max_drift,
                start.elapsed()
            );
            reference = Some((state, a_fin));
        }
        let (ref_omega, ref_a) = reference.unwrap();
        let ref_norm = norm_h(&grid, &ref_omega, ref_a);
        for k_star in [10.0, 2.0] {
            let settings = ContourSettings {
                k_star,
                tolerance: 1e-4,
                ..ContourSettings::default()
            };
            let start = Instant::now();
            match contour_semigroup(&flow, k, &grid, &omega, a, t, &settings) {
                Ok(rec) => {
                    let diff: Vec<Complex64> = rec
                        .omega
                        .iter()
                        .zip(&ref_omega)
                        .map(|(x, y)| x - y)
                        .collect();
                    let gap = norm_h(&grid, &diff, rec.a - ref_a) / ref_norm;
                    let ratio = norm_h(&grid, &rec.omega, rec.a) / norm_h(&grid, &omega, a);
                    println!(
                        "  k_star={k_star}: gap={gap:.3e} ratio={ratio:.6} m={} \
                         s_max={:.0} tail={:.1e} ({:?})",
                        rec.intervals,
                        rec.lambda_max,
                        rec.tail_estimate,
                        start.elapsed()
                    );
                }
                Err(err) => println!("  k_star={k_star}: ERROR {err} ({:?})", start.elapsed()),
            }
        }
    }
}
