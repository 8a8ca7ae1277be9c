//! Piecewise-linear membership functions.

use super::FuzzyError;

/// Shape of a membership function. Thresholds are in the owning variable's
/// universe units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipFunction {
    /// Saturating ramp: 0 at or below `th1`, 1 at or above `th2`.
    RampUp { th1: f64, th2: f64 },
    /// Triangle with feet `a`, `c` and apex `b`. `a == b` or `b == c` gives a
    /// shoulder that is 1 at the pinned edge.
    Triangle { a: f64, b: f64, c: f64 },
    /// Trapezoid with feet `a`, `d` and flat top `[b, c]`.
    Trapezoid { a: f64, b: f64, c: f64, d: f64 },
}

impl MembershipFunction {
    pub fn ramp_up(th1: f64, th2: f64) -> Result<Self, FuzzyError> {
        let mf = MembershipFunction::RampUp { th1, th2 };
        mf.validate()?;
        Ok(mf)
    }

    pub fn triangle(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        let mf = MembershipFunction::Triangle { a, b, c };
        mf.validate()?;
        Ok(mf)
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        let mf = MembershipFunction::Trapezoid { a, b, c, d };
        mf.validate()?;
        Ok(mf)
    }

    /// Checks threshold ordering. Construction goes through this so that
    /// evaluation never has to fail.
    pub fn validate(&self) -> Result<(), FuzzyError> {
        if !self.thresholds().iter().all(|t| t.is_finite()) {
            return Err(FuzzyError::MalformedThresholds("non-finite threshold"));
        }
        let ok = match *self {
            MembershipFunction::RampUp { th1, th2 } => th1 < th2,
            MembershipFunction::Triangle { a, b, c } => a <= b && b <= c && a < c,
            MembershipFunction::Trapezoid { a, b, c, d } => a <= b && b <= c && c <= d && a < d,
        };
        if ok {
            Ok(())
        } else {
            Err(FuzzyError::MalformedThresholds(match self {
                MembershipFunction::RampUp { .. } => "ramp-up requires th1 < th2",
                MembershipFunction::Triangle { .. } => "triangle requires a <= b <= c and a < c",
                MembershipFunction::Trapezoid { .. } => "trapezoid requires a <= b <= c <= d and a < d",
            }))
        }
    }

    /// Degree of membership of `x`, always within `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::RampUp { th1, th2 } => {
                if x <= th1 {
                    0.0
                } else if x >= th2 {
                    1.0
                } else {
                    (x - th1) / (th2 - th1)
                }
            }
            MembershipFunction::Triangle { a, b, c } => {
                if x < a || x > c {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x == b {
                    1.0
                } else {
                    (c - x) / (c - b)
                }
            }
            MembershipFunction::Trapezoid { a, b, c, d } => {
                if x < a || x > d {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x <= c {
                    1.0
                } else {
                    (d - x) / (d - c)
                }
            }
        }
    }

    /// Closed interval outside of which the degree is zero. The ramp is
    /// unbounded above.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            MembershipFunction::RampUp { th1, .. } => (th1, f64::INFINITY),
            MembershipFunction::Triangle { a, c, .. } => (a, c),
            MembershipFunction::Trapezoid { a, d, .. } => (a, d),
        }
    }

    /// A representative point of full membership: the apex of a triangle,
    /// the middle of a trapezoid's flat top, `th2` for a ramp.
    pub fn peak(&self) -> f64 {
        match *self {
            MembershipFunction::RampUp { th2, .. } => th2,
            MembershipFunction::Triangle { b, .. } => b,
            MembershipFunction::Trapezoid { b, c, .. } => 0.5 * (b + c),
        }
    }

    pub fn thresholds(&self) -> alloc::vec::Vec<f64> {
        match *self {
            MembershipFunction::RampUp { th1, th2 } => alloc::vec![th1, th2],
            MembershipFunction::Triangle { a, b, c } => alloc::vec![a, b, c],
            MembershipFunction::Trapezoid { a, b, c, d } => alloc::vec![a, b, c, d],
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            MembershipFunction::RampUp { .. } => "ramp",
            MembershipFunction::Triangle { .. } => "triangle",
            MembershipFunction::Trapezoid { .. } => "trapezoid",
        }
    }

    /// Builds a shape from its name and threshold list, as used by the
    /// definition file.
    pub fn from_parts(shape: &str, params: &[f64]) -> Result<Self, FuzzyError> {
        match (shape, params) {
            ("ramp", &[th1, th2]) => Self::ramp_up(th1, th2),
            ("triangle", &[a, b, c]) => Self::triangle(a, b, c),
            ("trapezoid", &[a, b, c, d]) => Self::trapezoid(a, b, c, d),
            ("ramp" | "triangle" | "trapezoid", _) => {
                Err(FuzzyError::MalformedThresholds("wrong number of thresholds for shape"))
            }
            _ => Err(FuzzyError::UnknownShape),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triangle_peak_and_outside() {
        let t = MembershipFunction::triangle(0.0, 16.4, 32.8).unwrap();
        assert_eq!(t.eval(16.4), 1.0);
        assert_eq!(t.eval(40.0), 0.0);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(8.2), 0.5);
    }

    #[test]
    fn ramp_midpoint() {
        let r = MembershipFunction::ramp_up(0.1, 0.9).unwrap();
        assert!((r.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(r.eval(0.1), 0.0);
        assert_eq!(r.eval(0.9), 1.0);
        assert_eq!(r.eval(5.0), 1.0);
    }

    #[test]
    fn trapezoid_flat_top() {
        let t = MembershipFunction::trapezoid(10.0, 14.07, 18.13, 22.2).unwrap();
        assert_eq!(t.eval(16.0), 1.0);
        assert_eq!(t.eval(22.2), 0.0);
        assert_eq!(t.eval(9.0), 0.0);
    }

    #[test]
    fn shoulders_hold_full_degree_at_edge() {
        let left = MembershipFunction::triangle(0.0, 0.0, 8.3).unwrap();
        assert_eq!(left.eval(0.0), 1.0);
        let right = MembershipFunction::triangle(0.5, 1.0, 1.0).unwrap();
        assert_eq!(right.eval(1.0), 1.0);
        let fast = MembershipFunction::trapezoid(13.0, 17.93, 27.78, 27.78).unwrap();
        assert_eq!(fast.eval(27.78), 1.0);
    }

    #[test]
    fn malformed_thresholds_rejected_at_construction() {
        assert!(MembershipFunction::ramp_up(0.9, 0.1).is_err());
        assert!(MembershipFunction::ramp_up(0.5, 0.5).is_err());
        assert!(MembershipFunction::triangle(1.0, 0.5, 2.0).is_err());
        assert!(MembershipFunction::triangle(1.0, 1.0, 1.0).is_err());
        assert!(MembershipFunction::trapezoid(0.0, 2.0, 1.0, 3.0).is_err());
        assert!(MembershipFunction::triangle(0.0, f64::NAN, 1.0).is_err());
        assert!(MembershipFunction::from_parts("triangle", &[0.0, 1.0]).is_err());
        assert!(MembershipFunction::from_parts("gauss", &[0.0, 1.0]).is_err());
    }

    fn any_mf() -> impl Strategy<Value = MembershipFunction> {
        let pts = proptest::collection::vec(-50.0f64..50.0, 4);
        (0usize..3, pts).prop_filter_map("degenerate", |(kind, mut p)| {
            p.sort_by(f64::total_cmp);
            match kind {
                0 => MembershipFunction::ramp_up(p[0], p[3]).ok(),
                1 => MembershipFunction::triangle(p[0], p[1], p[3]).ok(),
                _ => MembershipFunction::trapezoid(p[0], p[1], p[2], p[3]).ok(),
            }
        })
    }

    proptest! {
        #[test]
        fn degree_is_bounded(mf in any_mf(), x in -100.0f64..100.0) {
            let y = mf.eval(x);
            prop_assert!((0.0..=1.0).contains(&y));
        }

        // Inside a segment, a finite-difference slope is the same at any
        // two points: the function is linear there.
        #[test]
        fn linear_within_segments(mf in any_mf(), u in 0.05f64..0.95, v in 0.05f64..0.95) {
            let mut knots = mf.thresholds();
            knots.insert(0, -100.0);
            knots.push(100.0);
            for w in knots.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi - lo < 1e-6 {
                    continue;
                }
                let h = (hi - lo) * 1e-3;
                let slope = |t: f64| {
                    let x = lo + t * (hi - lo);
                    (mf.eval(x + h) - mf.eval(x - h)) / (2.0 * h)
                };
                let (s1, s2) = (slope(u), slope(v));
                prop_assert!((s1 - s2).abs() <= 1e-6 * (1.0 + s1.abs()), "{} vs {}", s1, s2);
            }
        }

        #[test]
        fn continuous_away_from_shoulders(mf in any_mf(), x in -60.0f64..60.0) {
            // Pinned shoulders jump to 1 exactly at the edge; elsewhere the
            // function is continuous.
            let knots = mf.thresholds();
            let near_pinned = knots.windows(2).any(|w| w[0] == w[1] && (x - w[0]).abs() < 1e-6);
            if !near_pinned {
                let min_gap = knots
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|g| *g > 0.0)
                    .fold(f64::INFINITY, f64::min);
                let d = (mf.eval(x + 1e-9) - mf.eval(x)).abs();
                prop_assert!(d <= 1e-9 / min_gap + 1e-12);
            }
        }
    }
}
