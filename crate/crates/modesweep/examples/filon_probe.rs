//! Scratch probe for the product-rule panel weights. Not part of the library.

use num_complex::Complex64;

type C64 = Complex64;

fn panel_weights(z: C64) -> (C64, C64, C64) {
    let (m0, m1, m2) = if z.norm() < 0.5 {
        let mut m = [Complex64::new(0.0, 0.0); 3];
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..16 {
            for (j, acc) in m.iter_mut().enumerate() {
                *acc += term / (n + j + 1) as f64;
            }
            term *= z / (n + 1) as f64;
        }
        (m[0], m[1], m[2])
    } else {
        let ez = z.exp();
        let m0 = (ez - 1.0) / z;
        let m1 = (ez * (z - 1.0) + 1.0) / (z * z);
        let m2 = (ez * (z * z - 2.0 * z + 2.0) - 2.0) / (z * z * z);
        (m0, m1, m2)
    };
    (2.0 * m2 - 3.0 * m1 + m0, 4.0 * (m1 - m2), 2.0 * m2 - m1)
}

fn main() {
    // Check the weights against brute-force integration of e^{zu} times
    // the quadratic through (0, f0), (1/2, fm), (1, f1).
    for z in [
        Complex64::new(0.3, -0.2),
        Complex64::new(-1.0, 5.0),
        Complex64::new(-0.04, -3.0),
        Complex64::new(0.0, 12.0),
    ] {
        let (c0, cm, c1) = panel_weights(z);
        // f(u) = 2u^2 - u + 0.5 (arbitrary quadratic), exact integral by basis.
        let f = |u: f64| 2.0 * u * u - u + 0.5;
        let n = 2_000_000;
        let mut brute = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            brute += (z * u).exp() * f(u) / n as f64;
        }
        let filon = c0 * f(0.0) + cm * f(0.5) + c1 * f(1.0);
        println!("z={z}: filon={filon}, brute={brute}, diff={:.3e}", (filon - brute).norm());
    }

    // Full scalar contour against e^{t a} for a pole inside the wedge.
    let apex = 10.0 * 16.0_f64.powf(2.0 / 3.0);
    let theta = 0.2;
    let t = 0.1;
    let pole = Complex64::new(0.5 * apex, 3.0);
    let f = |lambda: C64| 1.0 / (lambda - pole) - 1.0 / lambda;

    let s_max = 952.0;
    for m in [64usize, 128, 256, 512, 1024, 2048] {
        let h = s_max / m as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        for (mu, weight) in [
            (Complex64::new(-theta, 1.0), Complex64::new(-theta, 1.0)),
            (Complex64::new(-theta, -1.0), Complex64::new(theta, 1.0)),
        ] {
            let w = weight / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
            let (c0, cm, c1) = panel_weights(2.0 * t * h * mu);
            let mut ray = Complex64::new(0.0, 0.0);
            for p in 0..m / 2 {
                let s0 = 2.0 * p as f64 * h;
                let envelope = (t * (apex + mu * s0)).exp() * 2.0 * h;
                let nodes = [
                    f(apex + mu * s0),
                    f(apex + mu * (s0 + h)),
                    f(apex + mu * (s0 + 2.0 * h)),
                ];
                ray += envelope * (c0 * nodes[0] + cm * nodes[1] + c1 * nodes[2]);
            }
            sum += w * ray;
        }
        let answer = sum + 1.0;
        let expect = (t * pole).exp();
        println!(
            "m={m:5}: answer={answer}, expect={expect}, rel={:.3e}",
            (answer - expect).norm() / expect.norm()
        );
    }
}
