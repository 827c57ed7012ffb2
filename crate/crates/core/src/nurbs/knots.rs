use crate::{Error, Result};

/// Open (clamped) knot vector of a fixed polynomial degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    pub p: usize,
    pub knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(p: usize, knots: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Argument("degree must be at least 1".into()));
        }
        if knots.len() < 2 * (p + 1) {
            return Err(Error::Argument(format!(
                "knot vector of degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("knots must be non-decreasing".into()));
        }
        let open_start = knots[..=p].iter().all(|&k| k == knots[0]);
        let open_end = knots[knots.len() - p - 1..]
            .iter()
            .all(|&k| k == knots[knots.len() - 1]);
        if !open_start || !open_end {
            return Err(Error::Argument("knot vector must be open (clamped)".into()));
        }
        Ok(Self { p, knots })
    }

    /// Uniform open knot vector over [0, 1] with `n_el` equal spans.
    pub fn uniform_open(p: usize, n_el: usize) -> Result<Self> {
        if n_el == 0 {
            return Err(Error::Argument("need at least one element".into()));
        }
        let mut knots = vec![0.0; p];
        for i in 0..=n_el {
            knots.push(i as f64 / n_el as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(p));
        Self::new(p, knots)
    }

    /// Number of basis functions.
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.p - 1
    }

    /// Parametric domain [start, end].
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.p], self.knots[self.n_basis()])
    }

    /// Index i with knots[i] <= xi < knots[i+1]; the right end of the domain
    /// maps into the last nonempty span.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        let tol = 1e-10 * (1.0 + (hi - lo).abs());
        if xi < lo - tol || xi > hi + tol {
            return Err(Error::Domain(format!(
                "parameter {xi} outside knot range [{lo}, {hi}]"
            )));
        }
        let xi = xi.clamp(lo, hi);
        let n = self.n_basis() - 1;
        if xi >= self.knots[n + 1] {
            return Ok(n);
        }
        let mut low = self.p;
        let mut high = n + 1;
        let mut mid = (low + high) / 2;
        while xi < self.knots[mid] || xi >= self.knots[mid + 1] {
            if xi < self.knots[mid] {
                high = mid;
            } else {
                low = mid;
            }
            mid = (low + high) / 2;
        }
        Ok(mid)
    }

    /// Greville abscissa of basis function i.
    pub fn greville(&self, i: usize) -> f64 {
        let s: f64 = self.knots[i + 1..=i + self.p].iter().sum();
        s / self.p as f64
    }

    pub fn greville_all(&self) -> Vec<f64> {
        (0..self.n_basis()).map(|i| self.greville(i)).collect()
    }

    /// Nonempty spans as (span index, left knot, right knot).
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        (self.p..self.n_basis())
            .filter(|&i| self.knots[i + 1] > self.knots[i])
            .map(|i| (i, self.knots[i], self.knots[i + 1]))
            .collect()
    }

    /// Parametric midpoints of every nonempty span, used for uniform
    /// bisection refinement.
    pub fn span_midpoints(&self) -> Vec<f64> {
        self.spans().iter().map(|&(_, a, b)| 0.5 * (a + b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_span_single_bezier() {
        let kv = KnotVector::new(2, vec![0., 0., 0., 1., 1., 1.]).unwrap();
        assert_eq!(kv.find_span(0.5).unwrap(), 2);
        assert_eq!(kv.find_span(1.0).unwrap(), 2);
        assert_eq!(kv.find_span(0.0).unwrap(), 2);
    }

    #[test]
    fn find_span_interior_knot_is_left_closed() {
        let kv = KnotVector::new(2, vec![0., 0., 0., 0.5, 1., 1., 1.]).unwrap();
        assert_eq!(kv.find_span(0.5).unwrap(), 3);
        assert_eq!(kv.find_span(0.49).unwrap(), 2);
        assert_eq!(kv.find_span(1.0).unwrap(), 3);
    }

    #[test]
    fn find_span_rejects_outside() {
        let kv = KnotVector::new(2, vec![0., 0., 0., 1., 1., 1.]).unwrap();
        assert!(kv.find_span(-0.1).is_err());
        assert!(kv.find_span(1.1).is_err());
    }

    #[test]
    fn uniform_open_structure() {
        let kv = KnotVector::uniform_open(2, 4).unwrap();
        assert_eq!(kv.n_basis(), 6);
        assert_eq!(kv.spans().len(), 4);
        assert_eq!(kv.domain(), (0.0, 1.0));
    }

    #[test]
    fn greville_of_uniform_quadratic() {
        let kv = KnotVector::uniform_open(2, 2).unwrap();
        let g = kv.greville_all();
        let expect = [0.0, 0.25, 0.75, 1.0];
        for (a, b) in g.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unclamped() {
        assert!(KnotVector::new(2, vec![0., 0., 1., 2., 3., 3.]).is_err());
        assert!(KnotVector::new(2, vec![0., 0., 0., 1., 0.5, 1., 1.]).is_err());
    }
}
