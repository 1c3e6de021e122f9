use crate::error::{Error, Result};

/// All angles `theta = theta_1 - theta_2` in `(-pi/2, pi/2)` solving
/// `P1 = g V1^2 - g V1 V2 cos(theta) + b V1 V2 sin(theta)`.
///
/// With `psi = sin(theta)` the equation becomes
/// `g V1 V2 sqrt(1 - psi^2) = b V1 V2 psi - P1 + g V1^2`, a quadratic in
/// `psi` after squaring. Roots that make the right side negative are dropped.
pub fn two_bus_closed_form(g: f64, b: f64, v1: f64, v2: f64, p1: f64) -> Result<Vec<f64>> {
    if !(b > 0.0) || !(v1 > 0.0) || !(v2 > 0.0) {
        return Err(Error::InvalidNetwork(format!(
            "two-bus closed form needs b, V1, V2 > 0 (got {b}, {v1}, {v2})"
        )));
    }
    let a = g * v1 * v2;
    let bb = b * v1 * v2;
    let q = g * v1 * v1 - p1;
    let mut psis = Vec::new();
    if a == 0.0 {
        psis.push(-q / bb);
    } else {
        let s = a * a + bb * bb;
        let mut disc = s - q * q;
        if disc < 0.0 && disc > -4.0 * f64::EPSILON * s {
            disc = 0.0;
        }
        if disc >= 0.0 {
            let r = a.abs() * disc.sqrt();
            for root in [(-bb * q - r) / s, (-bb * q + r) / s] {
                if !psis.contains(&root) {
                    psis.push(root);
                }
            }
        }
    }
    let tol = 1e-12 * bb.max(1.0);
    let mut thetas: Vec<f64> = psis
        .into_iter()
        .filter(|p| p.abs() < 1.0)
        .map(f64::asin)
        .filter(|th| {
            let r = p1 - (g * v1 * v1 - a * th.cos() + bb * th.sin());
            r.abs() <= tol
        })
        .collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    Ok(thetas)
}
