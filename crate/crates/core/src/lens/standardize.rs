use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Column moments (population sd) estimated on a reference sample.
#[derive(Debug, Clone)]
pub struct Standardizer {
    pub means: Array1<f64>,
    pub sds: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let means = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
        let sds = x.std_axis(Axis(0), 0.0);
        Self { means, sds }
    }

    /// Zero-variance columns map to all zeros.
    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = &x - &self.means;
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let sd = self.sds[j];
            if sd > 1e-12 {
                col /= sd;
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

pub fn standardize(x: ArrayView2<f64>) -> Array2<f64> {
    Standardizer::fit(x).transform(x)
}
