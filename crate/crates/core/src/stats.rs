use crate::math;

/// Least-squares slope of `ln y` against `ln x`.
///
/// Returns `None` with fewer than two points or any non-positive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (math::ln(x), math::ln(y));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: [(f64, f64); 4] = [(128.0, 3.0 / 128.0), (256.0, 3.0 / 256.0), (512.0, 3.0 / 512.0), (1024.0, 3.0 / 1024.0)];
        assert!((loglog_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        let quad: std::vec::Vec<(f64, f64)> = (1..5).map(|k| (k as f64, 0.5 / (k * k) as f64)).collect();
        assert!((loglog_slope(&quad).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(1.0, 1.0), (2.0, 0.0)]), None);
    }
}
