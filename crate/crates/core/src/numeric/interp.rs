/// Piecewise cubic Hermite interpolant on a uniform grid, built from values and
/// slopes at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    /// Panics if the lengths differ or fewer than two nodes are given.
    pub fn new(x0: f64, dx: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), slopes.len());
        assert!(values.len() >= 2 && dx > 0.0);
        Self { x0, dx, values, slopes }
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.dx * (self.values.len() - 1) as f64)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Value and first derivative at `x`; `None` outside the node range
    /// (a relative slack of 1e-12 of a cell is tolerated at the ends).
    pub fn eval(&self, x: f64) -> Option<(f64, f64)> {
        let n = self.values.len();
        let t = (x - self.x0) / self.dx;
        let last = (n - 1) as f64;
        if !(t >= -1e-12 && t <= last + 1e-12) {
            return None;
        }
        let cell = (t.floor().max(0.0) as usize).min(n - 2);
        let s = t - cell as f64;
        let (y0, y1) = (self.values[cell], self.values[cell + 1]);
        let (m0, m1) = (self.slopes[cell] * self.dx, self.slopes[cell + 1] * self.dx);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let slope = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / self.dx;
        Some((value, slope))
    }
}
