//! Newton polygons of polynomials over a discretely valued field.


use serde::{Deserialize, Serialize};

use crate::algebra::Rational;
use crate::error::{Error, Result};

/// One edge of the polygon. Roots on this edge have valuation `-slope`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "crate::algebra::rational_str")]
    pub slope: Rational,
    pub length: i64,
}

/// Lower convex hull of the points `(degree, valuation)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    #[serde(with = "vertex_list")]
    pub vertices: Vec<(i64, Rational)>,
    pub segments: Vec<Segment>,
}

mod vertex_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[(i64, Rational)], s: S) -> std::result::Result<S::Ok, S::Error> {
        let out: Vec<(i64, String)> = v.iter().map(|(d, r)| (*d, crate::algebra::format_rational(r))).collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(i64, Rational)>, D::Error> {
        let raw: Vec<(i64, String)> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|(deg, r)| crate::algebra::parse_rational(&r).map(|r| (deg, r)).map_err(serde::de::Error::custom))
            .collect()
    }
}

impl NewtonPolygon {
    /// Builds the polygon; `None` valuations (zero coefficients) are skipped.
    pub fn new(points: &[(i64, Option<Rational>)]) -> Result<Self> {
        let mut pts: Vec<(i64, Rational)> = points.iter().filter_map(|(d, v)| v.map(|v| (*d, v))).collect();
        pts.sort_by_key(|p| p.0);
        pts.dedup_by(|b, a| {
            if a.0 == b.0 {
                if b.1 < a.1 {
                    a.1 = b.1;
                }
                true
            } else {
                false
            }
        });
        if pts.len() < 2 {
            return Err(Error::DegeneratePolynomial);
        }
        let mut hull: Vec<(i64, Rational)> = Vec::new();
        for p in pts {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                // drop b when it lies on or above the chord a -> p
                let lhs = (b.1 - a.1) * Rational::from_integer(p.0 - a.0);
                let rhs = (p.1 - a.1) * Rational::from_integer(b.0 - a.0);
                if lhs >= rhs {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let segments = hull
            .windows(2)
            .map(|w| Segment { slope: (w[1].1 - w[0].1) / Rational::from_integer(w[1].0 - w[0].0), length: w[1].0 - w[0].0 })
            .collect();
        Ok(NewtonPolygon { vertices: hull, segments })
    }

    /// Root valuations with multiplicity, as `(valuation, count)` pairs in
    /// decreasing order of valuation.
    pub fn root_valuations(&self) -> Vec<(Rational, i64)> {
        self.segments.iter().map(|s| (-s.slope, s.length)).collect()
    }

    /// Expanded multiset of root valuations, sorted ascending.
    pub fn root_valuation_multiset(&self) -> Vec<Rational> {
        let mut out: Vec<Rational> = self
            .segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(-s.slope, s.length as usize))
            .collect();
        out.sort();
        out
    }

    pub fn first_degree(&self) -> i64 {
        self.vertices[0].0
    }

    pub fn last_degree(&self) -> i64 {
        self.vertices[self.vertices.len() - 1].0
    }

    /// True when every slope is an integer.
    pub fn has_integral_slopes(&self) -> bool {
        self.segments.iter().all(|s| s.slope.is_integer())
    }

    /// Slopes are strictly increasing and lengths sum to the degree span.
    pub fn is_consistent(&self) -> bool {
        let increasing = self.segments.windows(2).all(|w| w[0].slope < w[1].slope);
        let total: i64 = self.segments.iter().map(|s| s.length).sum();
        increasing && total == self.last_degree() - self.first_degree() && self.segments.iter().all(|s| s.length > 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn eisenstein_cubic() {
        // T^3 + t
        let np = NewtonPolygon::new(&[(0, Some(r(1, 1))), (3, Some(r(0, 1)))]).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: r(-1, 3), length: 3 }]);
        assert_eq!(np.root_valuation_multiset(), vec![r(1, 3); 3]);
    }

    #[test]
    fn single_point_is_degenerate() {
        assert!(matches!(
            NewtonPolygon::new(&[(2, Some(r(0, 1))), (0, None), (1, None)]),
            Err(Error::DegeneratePolynomial)
        ));
    }

    #[test]
    fn two_segments() {
        // T^3 + T + t
        let np = NewtonPolygon::new(&[(0, Some(r(1, 1))), (1, Some(r(0, 1))), (3, Some(r(0, 1)))]).unwrap();
        assert_eq!(
            np.segments,
            vec![Segment { slope: r(-1, 1), length: 1 }, Segment { slope: r(0, 1), length: 2 }]
        );
        assert!(np.is_consistent());
    }

    #[test]
    fn collinear_points_merge() {
        let np = NewtonPolygon::new(&[(0, Some(r(2, 1))), (1, Some(r(1, 1))), (2, Some(r(0, 1)))]).unwrap();
        assert_eq!(np.vertices.len(), 2);
        assert_eq!(np.segments[0].length, 2);
    }
}
