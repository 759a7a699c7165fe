use crate::scalar::Real;

/// Normalized Gaussian taps for standard deviation `sigma` (pixels), radius `⌈4σ⌉`.
fn gaussian_kernel<T: Real>(sigma: T) -> Vec<T> {
    let radius = (sigma * T::lit(4.0)).ceil().to_usize().unwrap_or(0).max(1);
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let taps: Vec<T> = (0..=2 * radius)
        .map(|k| {
            let d = T::from_usize_lossy(k) - T::from_usize_lossy(radius);
            (-(d * d) / two_s2).exp()
        })
        .collect();
    let sum: T = taps.iter().copied().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with replicated borders. `sigma ≤ 0` is the identity.
pub fn gaussian_blur<T: Real>(values: &[T], width: usize, height: usize, sigma: T) -> Vec<T> {
    if !(sigma > T::zero()) {
        return values.to_vec();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() - 1) / 2;
    let clamp = |k: isize, n: usize| k.clamp(0, n as isize - 1) as usize;

    let mut rows = vec![T::zero(); values.len()];
    for j in 0..height {
        for i in 0..width {
            let mut acc = T::zero();
            for (k, &w) in kernel.iter().enumerate() {
                let ii = clamp(i as isize + k as isize - radius as isize, width);
                acc = acc + w * values[j * width + ii];
            }
            rows[j * width + i] = acc;
        }
    }
    let mut out = vec![T::zero(); values.len()];
    for j in 0..height {
        for i in 0..width {
            let mut acc = T::zero();
            for (k, &w) in kernel.iter().enumerate() {
                let jj = clamp(j as isize + k as isize - radius as isize, height);
                acc = acc + w * rows[jj * width + i];
            }
            out[j * width + i] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_constants_and_mass() {
        let flat = vec![0.7f64; 30];
        for v in gaussian_blur(&flat, 6, 5, 1.3) {
            assert!((v - 0.7).abs() < 1e-14);
        }
        let mut spike = vec![0.0; 21 * 21];
        spike[10 * 21 + 10] = 1.0;
        let out = gaussian_blur(&spike, 21, 21, 1.0);
        let mass: f64 = out.iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(out[10 * 21 + 10] < 1.0 && out[10 * 21 + 11] > 0.0);
    }

    #[test]
    fn zero_sigma_is_identity() {
        let v: Vec<f64> = (0..12).map(f64::from).collect();
        assert_eq!(gaussian_blur(&v, 4, 3, 0.0), v);
    }
}
