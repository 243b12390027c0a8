/// Separable Gaussian blur of a row-major `width × height` grid with
/// clamp-to-edge borders. The kernel is truncated at `3σ` and renormalized.
pub fn gaussian_blur(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    assert_eq!(values.len(), width * height);
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; values.len()];
    for row in 0..height {
        let line = &values[row * width..(row + 1) * width];
        for col in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * line[clamp(col as isize + k as isize - radius, width)];
            }
            tmp[row * width + col] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for row in 0..height {
        for (k, w) in kernel.iter().enumerate() {
            let src = clamp(row as isize + k as isize - radius, height);
            let src_line = &tmp[src * width..(src + 1) * width];
            let dst = &mut out[row * width..(row + 1) * width];
            for (d, s) in dst.iter_mut().zip(src_line) {
                *d += w * s;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_constant_and_mass_interior() {
        let v = vec![2.0; 30 * 20];
        let b = gaussian_blur(&v, 30, 20, 2.0);
        assert!(b.iter().all(|x| (x - 2.0).abs() < 1e-12));

        let mut imp = vec![0.0; 41 * 41];
        imp[20 * 41 + 20] = 1.0;
        let b = gaussian_blur(&imp, 41, 41, 2.0);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let peak = b.iter().cloned().fold(0.0, f64::max);
        assert_eq!(b[20 * 41 + 20], peak);
        assert!((b[20 * 41 + 22] - b[22 * 41 + 20]).abs() < 1e-15);
    }
}
