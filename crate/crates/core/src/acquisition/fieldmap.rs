//! Fringe-field maps with monotone cubic (Fritsch-Carlson) interpolation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFieldMap")]
pub struct FieldMap {
    /// mm, strictly increasing
    pub positions_mm: Vec<f64>,
    /// T
    pub fields_t: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl FieldMap {
    pub fn new(positions_mm: Vec<f64>, fields_t: Vec<f64>) -> Result<Self> {
        let n = positions_mm.len();
        if n < 2 || fields_t.len() != n {
            return Err(Error::validation(format!(
                "field map needs >= 2 matching knots ({} positions, {} fields)",
                n,
                fields_t.len()
            )));
        }
        if positions_mm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("field map positions must be strictly increasing"));
        }
        if fields_t.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::validation("field map values must be positive"));
        }
        let slopes = pchip_slopes(&positions_mm, &fields_t);
        Ok(Self {
            positions_mm,
            fields_t,
            slopes,
        })
    }

    pub fn range_mm(&self) -> (f64, f64) {
        (self.positions_mm[0], *self.positions_mm.last().unwrap())
    }

    /// Interpolated field at `x` mm; no extrapolation.
    pub fn field_at(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.range_mm();
        if !(x >= lo && x <= hi) {
            return Err(Error::domain(format!(
                "position {x} mm outside field map range [{lo}, {hi}] mm"
            )));
        }
        let xs = &self.positions_mm;
        let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return Ok(self.fields_t[i]),
            Err(i) => i - 1,
        };
        let h = xs[i + 1] - xs[i];
        let t = (x - xs[i]) / h;
        let (y0, y1) = (self.fields_t[i], self.fields_t[i + 1]);
        let (m0, m1) = (self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1)
    }

    pub fn is_monotone_increasing(&self) -> bool {
        self.fields_t.windows(2).all(|w| w[1] > w[0])
    }

    /// Position where the map reaches `b` (T); requires an increasing map.
    pub fn position_for_field(&self, b: f64) -> Result<f64> {
        if !self.is_monotone_increasing() {
            return Err(Error::validation("inverse lookup needs an increasing field map"));
        }
        let (b0, b1) = (self.fields_t[0], *self.fields_t.last().unwrap());
        if !(b >= b0 && b <= b1) {
            return Err(Error::domain(format!(
                "field {b} T outside map range [{b0}, {b1}] T"
            )));
        }
        let (mut lo, mut hi) = self.range_mm();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.field_at(mid)? < b {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Synthetic map resembling a 7 T magnet bore: 30 mT at 0 mm rising
    /// smoothly to 7 T at 928 mm.
    pub fn demo() -> Self {
        let n = 59;
        let (b0, b1) = (0.030f64, 7.0f64);
        let s = |u: f64| {
            let l = |v: f64| 1.0 / (1.0 + (-(v - 0.62) * 9.0).exp());
            (l(u) - l(0.0)) / (l(1.0) - l(0.0))
        };
        let pos: Vec<f64> = (0..n).map(|i| 928.0 * i as f64 / (n - 1) as f64).collect();
        let fields = pos
            .iter()
            .map(|x| (b0.ln() + (b1.ln() - b0.ln()) * s(x / 928.0)).exp())
            .collect();
        Self::new(pos, fields).expect("demo map is valid")
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![d[0], d[0]];
    }
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

#[derive(Deserialize)]
struct RawFieldMap {
    positions_mm: Vec<f64>,
    fields_t: Vec<f64>,
}

impl TryFrom<RawFieldMap> for FieldMap {
    type Error = Error;

    fn try_from(r: RawFieldMap) -> Result<Self> {
        FieldMap::new(r.positions_mm, r.fields_t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn knots_exact_and_range_checked() {
        let m = FieldMap::new(vec![0.0, 10.0, 30.0], vec![0.1, 0.5, 2.0]).unwrap();
        assert_eq!(m.field_at(10.0).unwrap(), 0.5);
        assert_eq!(m.field_at(30.0).unwrap(), 2.0);
        assert!(m.field_at(30.5).is_err());
        assert!(m.field_at(-1.0).is_err());
    }

    #[test]
    fn demo_endpoints() {
        let m = FieldMap::demo();
        assert!((m.field_at(0.0).unwrap() - 0.030).abs() < 1e-12);
        assert!((m.field_at(928.0).unwrap() - 7.0).abs() < 1e-12);
        assert!(m.is_monotone_increasing());
        let x = m.position_for_field(1.0).unwrap();
        assert!((m.field_at(x).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_maps() {
        assert!(FieldMap::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(FieldMap::new(vec![0.0, 1.0], vec![1.0, -2.0]).is_err());
        assert!(FieldMap::new(vec![0.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn monotone_between_knots(steps in proptest::collection::vec((0.1f64..50.0, 1e-3f64..2.0), 2..12), u in 0.0f64..1.0) {
            let mut x = vec![0.0];
            let mut y = vec![0.01];
            for (dx, dy) in &steps {
                x.push(x.last().unwrap() + dx);
                y.push(y.last().unwrap() + dy);
            }
            let m = FieldMap::new(x.clone(), y.clone()).unwrap();
            let i = ((u * (x.len() - 1) as f64) as usize).min(x.len() - 2);
            let a = x[i] + 0.37 * (x[i + 1] - x[i]);
            let b = x[i] + 0.81 * (x[i + 1] - x[i]);
            let (fa, fb) = (m.field_at(a).unwrap(), m.field_at(b).unwrap());
            prop_assert!(fa >= y[i] - 1e-12 && fb <= y[i + 1] + 1e-12 && fa <= fb + 1e-12);
        }
    }
}
