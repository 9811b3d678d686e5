//! Direct least-squares ellipse fitting on image points.
//!
//! Solves the constrained conic fit of Fitzgibbon, Pilu and Fisher: the
//! conic `A x^2 + B xy + C y^2 + D x + E y + F = 0` is found by minimizing
//! the algebraic residual subject to `4AC - B^2 = 1`, which forces the
//! solution to be an ellipse and rejects hyperbolic and parabolic fits by
//! construction. Points are shifted to their centroid and isotropically
//! scaled before the solve for numerical conditioning; the recovered
//! geometric parameters are mapped back through the same similarity.

use nalgebra::{Matrix3, Vector3};

use super::{CameraError, PixelPoint};

/// Geometric ellipse parameters in pixel coordinates.
///
/// `orientation` is the angle of the major axis from +u, normalized to
/// (-PI/2, PI/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseParams {
    pub center: PixelPoint,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub orientation: f64,
}

impl EllipseParams {
    /// Samples `n` boundary points uniformly in the parametric angle.
    pub fn sample_points(&self, n: usize) -> Vec<PixelPoint> {
        let (sin_o, cos_o) = self.orientation.sin_cos();
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
                let px = self.semi_major * t.cos();
                let py = self.semi_minor * t.sin();
                PixelPoint {
                    u: self.center.u + cos_o * px - sin_o * py,
                    v: self.center.v + sin_o * px + cos_o * py,
                }
            })
            .collect()
    }

    /// General conic coefficients `[A, B, C, D, E, F]` of this ellipse.
    pub fn conic_coefficients(&self) -> [f64; 6] {
        let (sin_o, cos_o) = self.orientation.sin_cos();
        let a2 = self.semi_major * self.semi_major;
        let b2 = self.semi_minor * self.semi_minor;
        let ca = cos_o * cos_o / a2 + sin_o * sin_o / b2;
        let cb = 2.0 * cos_o * sin_o * (1.0 / a2 - 1.0 / b2);
        let cc = sin_o * sin_o / a2 + cos_o * cos_o / b2;
        let cd = -2.0 * ca * self.center.u - cb * self.center.v;
        let ce = -cb * self.center.u - 2.0 * cc * self.center.v;
        let cf = ca * self.center.u * self.center.u
            + cb * self.center.u * self.center.v
            + cc * self.center.v * self.center.v
            - 1.0;
        [ca, cb, cc, cd, ce, cf]
    }

    /// Algebraic residual of a point against this ellipse's conic, with the
    /// coefficient vector normalized to unit Euclidean norm so residuals are
    /// comparable across ellipses.
    pub fn algebraic_residual(&self, p: &PixelPoint) -> f64 {
        let c = self.conic_coefficients();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let val = c[0] * p.u * p.u
            + c[1] * p.u * p.v
            + c[2] * p.v * p.v
            + c[3] * p.u
            + c[4] * p.v
            + c[5];
        (val / norm).abs()
    }
}

/// Fits an ellipse to image points by the direct least-squares method.
///
/// Needs at least 6 points that are not all collinear. Fails with
/// `DegenerateInput` for under-determined or collinear input and with
/// `NotAnEllipse` when no ellipse satisfies the constraint (e.g. samples of
/// a hyperbola).
pub fn fit_ellipse(points: &[PixelPoint]) -> Result<EllipseParams, CameraError> {
    if points.len() < 6 {
        return Err(CameraError::DegenerateInput(format!(
            "conic fit needs at least 6 points, got {}",
            points.len()
        )));
    }

    // Similarity normalization: centroid shift, uniform scale to mean
    // distance sqrt(2).
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.u).sum::<f64>() / n;
    let my = points.iter().map(|p| p.v).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p.u - mx).powi(2) + (p.v - my).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-12 {
        return Err(CameraError::DegenerateInput(
            "all points coincide".to_string(),
        ));
    }
    let scale = std::f64::consts::SQRT_2 / mean_dist;

    // Scatter blocks of the design matrix [x^2 xy y^2 | x y 1].
    let mut s11 = Matrix3::zeros();
    let mut s12 = Matrix3::zeros();
    let mut s22 = Matrix3::zeros();
    for p in points {
        let x = (p.u - mx) * scale;
        let y = (p.v - my) * scale;
        let q = Vector3::new(x * x, x * y, y * y);
        let l = Vector3::new(x, y, 1.0);
        s11 += q * q.transpose();
        s12 += q * l.transpose();
        s22 += l * l.transpose();
    }

    // S22 is singular exactly when the points are collinear.
    let s22_inv = s22.try_inverse().ok_or_else(|| {
        CameraError::DegenerateInput("points are collinear or rank-deficient".to_string())
    })?;

    let reduced = s11 - s12 * s22_inv * s12.transpose();

    // Constraint matrix for 4AC - B^2 = 1 and its inverse.
    let c1_inv = Matrix3::new(0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0);
    let system = c1_inv * reduced;

    // The quadratic coefficients are the eigenvector of `system` whose
    // constraint value 4*a0*a2 - a1^2 is positive; exactly one eigenvalue
    // yields it for non-degenerate data.
    let eigenvalues = system.complex_eigenvalues();
    let mut quad: Option<Vector3<f64>> = None;
    for ev in eigenvalues.iter() {
        if ev.im.abs() > 1e-7 * (1.0 + ev.re.abs()) {
            continue;
        }
        let shifted = system - Matrix3::identity() * ev.re;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("3x3 svd requested v_t");
        let v = Vector3::new(v_t[(2, 0)], v_t[(2, 1)], v_t[(2, 2)]);
        let constraint = 4.0 * v[0] * v[2] - v[1] * v[1];
        if constraint > 0.0 {
            quad = Some(v / constraint.sqrt());
            break;
        }
    }
    let a1 = quad.ok_or(CameraError::NotAnEllipse)?;
    let a2 = -s22_inv * s12.transpose() * a1;

    // Geometric parameters in the normalized frame, then undo the
    // similarity: the orientation is unchanged, lengths divide by the
    // scale, and the center shifts back to the centroid.
    let e = conic_to_geometric(a1[0], a1[1], a1[2], a2[0], a2[1], a2[2])
        .ok_or(CameraError::NotAnEllipse)?;
    Ok(EllipseParams {
        center: PixelPoint {
            u: mx + e.center.u / scale,
            v: my + e.center.v / scale,
        },
        semi_major: e.semi_major / scale,
        semi_minor: e.semi_minor / scale,
        orientation: e.orientation,
    })
}

/// Converts general conic coefficients to geometric ellipse parameters.
/// Returns `None` when the conic is not a real, bounded ellipse.
fn conic_to_geometric(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Option<EllipseParams> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        return None;
    }

    // Center solves the gradient system 2A*cx + B*cy + D = 0,
    // B*cx + 2C*cy + E = 0.
    let denom = -disc;
    let cx = (b * e - 2.0 * c * d) / denom;
    let cy = (b * d - 2.0 * a * e) / denom;

    // Eigenvalues of the quadratic part; the angle points along the
    // eigenvector of the larger one.
    let sum = a + c;
    let diff = ((a - c).powi(2) + b * b).sqrt();
    let lambda1 = 0.5 * (sum + diff);
    let lambda2 = 0.5 * (sum - diff);
    let angle = if (a - c).abs() < 1e-15 && b.abs() < 1e-15 {
        0.0
    } else {
        0.5 * b.atan2(a - c)
    };

    // Conic value at the center fixes the axis lengths.
    let f0 = a * cx * cx + b * cx * cy + c * cy * cy + d * cx + e * cy + f;
    let sq_along = -f0 / lambda1;
    let sq_across = -f0 / lambda2;
    if !(sq_along > 0.0 && sq_across > 0.0) {
        return None;
    }
    let semi_along = sq_along.sqrt();
    let semi_across = sq_across.sqrt();

    let (semi_major, semi_minor, mut orientation) = if semi_along >= semi_across {
        (semi_along, semi_across, angle)
    } else {
        (semi_across, semi_along, angle + std::f64::consts::FRAC_PI_2)
    };
    // Normalize to (-PI/2, PI/2].
    while orientation > std::f64::consts::FRAC_PI_2 {
        orientation -= std::f64::consts::PI;
    }
    while orientation <= -std::f64::consts::FRAC_PI_2 {
        orientation += std::f64::consts::PI;
    }

    Some(EllipseParams {
        center: PixelPoint { u: cx, v: cy },
        semi_major,
        semi_minor,
        orientation,
    })
}
