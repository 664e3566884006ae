//! Compensated-summation primitives shared by the accounting paths.
//!
//! Regret accounting subtracts quantities of similar magnitude after many
//! episodes, so the running sums use Neumaier's variant of Kahan summation
//! instead of plain `+=`.

/// Running scalar sum with Neumaier compensation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    compensation: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Coordinate-wise compensated sum of equal-length vectors.
#[derive(Debug, Clone)]
pub struct KahanVec {
    terms: Vec<Kahan>,
}

impl KahanVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            terms: vec![Kahan::new(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, xs: &[f64]) {
        assert_eq!(xs.len(), self.terms.len(), "length mismatch in KahanVec::add");
        for (t, &x) in self.terms.iter_mut().zip(xs) {
            t.add(x);
        }
    }

    pub fn add_at(&mut self, index: usize, x: f64) {
        self.terms[index].add(x);
    }

    pub fn add_scaled(&mut self, xs: &[f64], scale: f64) {
        assert_eq!(
            xs.len(),
            self.terms.len(),
            "length mismatch in KahanVec::add_scaled"
        );
        for (t, &x) in self.terms.iter_mut().zip(xs) {
            t.add(scale * x);
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.value()).collect()
    }
}

/// Compensated dot product.
pub fn kahan_dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch in kahan_dot");
    let mut acc = Kahan::new();
    for (&x, &y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

/// Compensated sum.
pub fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Kahan::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut naive = 1.0f64;
        let mut acc = Kahan::new();
        acc.add(1.0);
        for _ in 0..10 {
            naive += 1e-16;
            acc.add(1e-16);
        }
        // Each bare addition rounds back down to 1.0; the compensated sum
        // carries the dropped mass until it crosses an ulp.
        assert_eq!(naive, 1.0);
        assert!(acc.value() > 1.0);
        assert!((acc.value() - (1.0 + 1e-15)).abs() < 2.3e-16);
    }

    #[test]
    fn kahan_vec_matches_scalar() {
        let mut v = KahanVec::zeros(2);
        for i in 0..1000 {
            v.add(&[0.1, i as f64 * 1e-3]);
        }
        let vals = v.values();
        assert!((vals[0] - 100.0).abs() < 1e-12);
        assert!((vals[1] - 499.5).abs() < 1e-9);
    }

    #[test]
    fn dot_matches_exact() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        assert_eq!(kahan_dot(&a, &b), 32.0);
        assert_eq!(kahan_sum(a.iter().copied()), 6.0);
    }
}
