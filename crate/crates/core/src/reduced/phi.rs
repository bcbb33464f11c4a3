use super::ReducedError;
use crate::agc::AreaSpec;

/// Bisection stops after this many halvings regardless of tolerance.
const MAX_BISECTIONS: usize = 200;

/// One regulating unit as seen by the area map: `clamp(α·η, lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiUnit {
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Steady-state setpoint change of one area as a function of its AGC state,
/// `φ(η) = Σᵢ clamp(αᵢη, loᵢ, hiᵢ)`. Nondecreasing and piecewise linear.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMap {
    units: Vec<PhiUnit>,
}

impl PhiMap {
    pub fn new(units: Vec<PhiUnit>) -> Result<Self, ReducedError> {
        for u in &units {
            if !(u.alpha.is_finite() && u.alpha > 0.0) {
                return Err(ReducedError::InvalidModel(
                    "phi slopes must be positive".into(),
                ));
            }
            if u.lo.is_nan() || u.hi.is_nan() || u.lo > 0.0 || u.hi < 0.0 {
                return Err(ReducedError::InvalidModel(
                    "phi limits must bracket zero (lo <= 0 <= hi)".into(),
                ));
            }
        }
        Ok(Self { units })
    }

    /// `φ(η) = η` (no saturation).
    pub fn identity() -> Self {
        Self {
            units: vec![PhiUnit {
                alpha: 1.0,
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }],
        }
    }

    /// Map induced by the AGC units of an area with positive participation.
    pub fn from_area(area: &AreaSpec) -> Self {
        let units = area
            .generators
            .iter()
            .filter(|g| g.regulates())
            .map(|g| {
                let (lo, hi) = g.offset_range();
                PhiUnit {
                    alpha: g.participation,
                    lo,
                    hi,
                }
            })
            .collect();
        Self { units }
    }

    pub fn units(&self) -> &[PhiUnit] {
        &self.units
    }

    pub fn eval(&self, eta: f64) -> f64 {
        self.units
            .iter()
            .map(|u| (u.alpha * eta).clamp(u.lo, u.hi))
            .sum()
    }

    /// Image closure `[Σ lo, Σ hi]`; its interior is the feasible target set.
    pub fn capacity(&self) -> (f64, f64) {
        self.units
            .iter()
            .fold((0.0, 0.0), |(lo, hi), u| (lo + u.lo, hi + u.hi))
    }

    /// Interval on which `φ` is strictly increasing:
    /// `(minᵢ loᵢ/αᵢ, maxᵢ hiᵢ/αᵢ)`.
    pub fn preimage_interval(&self) -> (f64, f64) {
        self.units
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| {
                (lo.min(u.lo / u.alpha), hi.max(u.hi / u.alpha))
            })
    }

    /// Points where the slope of `φ` changes, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .units
            .iter()
            .flat_map(|u| [u.lo / u.alpha, u.hi / u.alpha])
            .filter(|v| v.is_finite())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Unique `η` in the preimage interval with `φ(η) = target`.
    pub fn invert(&self, target: f64) -> Result<f64, ReducedError> {
        let (cap_lo, cap_hi) = self.capacity();
        if !(cap_lo < target && target < cap_hi) {
            return Err(ReducedError::TargetInfeasible {
                target,
                lo: cap_lo,
                hi: cap_hi,
            });
        }
        let (mut a, mut b) = self.preimage_interval();
        if !a.is_finite() || !b.is_finite() {
            let mut w = 1.0;
            while self.eval(-w) > target || self.eval(w) < target {
                w *= 2.0;
            }
            a = a.max(-w);
            b = b.min(w);
        }
        let width = if (cap_hi - cap_lo).is_finite() {
            cap_hi - cap_lo
        } else {
            1.0 + target.abs()
        };
        let tol = 1e-12 * width;
        let mut mid = 0.5 * (a + b);
        for _ in 0..MAX_BISECTIONS {
            mid = 0.5 * (a + b);
            let f = self.eval(mid);
            if (f - target).abs() <= tol || mid <= a || mid >= b {
                break;
            }
            if f < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(self.polish(mid, target))
    }

    /// One Newton step on the linear piece containing `eta`, kept only if it
    /// stays on that piece.
    fn polish(&self, eta: f64, target: f64) -> f64 {
        let slope: f64 = self
            .units
            .iter()
            .filter(|u| u.lo < u.alpha * eta && u.alpha * eta < u.hi)
            .map(|u| u.alpha)
            .sum();
        if slope <= 0.0 {
            return eta;
        }
        let next = eta - (self.eval(eta) - target) / slope;
        if (self.eval(next) - target).abs() <= (self.eval(eta) - target).abs() {
            next
        } else {
            eta
        }
    }

    /// Exact `∫ₐᵇ (φ(ξ) − φ(a)) dξ` by trapezoids between breakpoints.
    pub fn integral_from(&self, a: f64, b: f64) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let base = self.eval(a);
        let mut knots = vec![lo];
        knots.extend(self.breakpoints().into_iter().filter(|&p| lo < p && p < hi));
        knots.push(hi);
        let total: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1]) - 2.0 * base))
            .sum();
        sign * total
    }
}
