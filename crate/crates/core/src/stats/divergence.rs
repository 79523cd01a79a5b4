use super::{Result, StatError, UnitHistogram};

fn kl_bits(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, mi)| pi * (pi / mi).log2())
        .sum()
}

/// Jensen–Shannon divergence in bits, so the result lies in `[0, 1]`.
pub fn jsd(p: &UnitHistogram, q: &UnitHistogram) -> Result<f64> {
    p.check_compatible(q)?;
    let (p, q) = (p.probabilities(), q.probabilities());
    if p == q {
        return Ok(0.0);
    }
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let value = 0.5 * kl_bits(p, &m) + 0.5 * kl_bits(q, &m);
    Ok(value.clamp(0.0, 1.0))
}

/// Wasserstein-1 distance between two histograms placed on their bin centers.
pub fn emd1d(p: &UnitHistogram, q: &UnitHistogram) -> Result<f64> {
    p.check_compatible(q)?;
    let width = p.bin_width();
    let bins = p.bin_count();
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    // both CDFs reach 1 at the last bin, so only the first bins-1 gaps count
    for (a, b) in p.probabilities()[..bins - 1].iter().zip(q.probabilities()) {
        cdf_gap += a - b;
        total += cdf_gap.abs();
    }
    Ok(total * width)
}

/// Sample-based 1-D Wasserstein-1 distance (area between empirical CDFs).
pub fn wasserstein1_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(StatError::EmptySample);
    }
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = xs.iter().chain(ys.iter()).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    for w in all.windows(2) {
        while i < xs.len() && xs[i] <= w[0] {
            i += 1;
        }
        while j < ys.len() && ys[j] <= w[0] {
            j += 1;
        }
        total += (i as f64 / na - j as f64 / nb).abs() * (w[1] - w[0]);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(p: &[f64]) -> UnitHistogram {
        UnitHistogram::from_probabilities(p.to_vec()).unwrap()
    }

    #[test]
    fn jsd_examples() {
        assert_eq!(jsd(&h(&[0.3, 0.7]), &h(&[0.3, 0.7])).unwrap(), 0.0);
        assert!((jsd(&h(&[1.0, 0.0]), &h(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        // 0.5*(0.5*log2(2/3) + 0.5*log2(2)) + 0.5*log2(4/3)
        let expected = 0.5 * (0.5 * (2.0f64 / 3.0).log2() + 0.5) + 0.5 * (4.0f64 / 3.0).log2();
        let got = jsd(&h(&[0.5, 0.5]), &h(&[1.0, 0.0])).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.31128).abs() < 1e-5);
    }

    #[test]
    fn emd_examples() {
        assert_eq!(emd1d(&h(&[0.2, 0.8]), &h(&[0.2, 0.8])).unwrap(), 0.0);
        assert!((emd1d(&h(&[1.0, 0.0]), &h(&[0.0, 1.0])).unwrap() - 0.5).abs() < 1e-12);
        assert!((emd1d(&h(&[0.5, 0.5]), &h(&[1.0, 0.0])).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bin_mismatch_is_an_error() {
        let a = h(&[0.5, 0.5]);
        let b = h(&[0.2, 0.3, 0.5]);
        assert_eq!(jsd(&a, &b), Err(StatError::BinMismatch(2, 3)));
        assert_eq!(emd1d(&a, &b), Err(StatError::BinMismatch(2, 3)));
    }

    #[test]
    fn sample_wasserstein_point_masses() {
        let d = wasserstein1_samples(&[0.0, 0.0], &[1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let d = wasserstein1_samples(&[0.0, 1.0], &[0.5]).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }
}
