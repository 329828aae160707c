//! Exact exponent algebra for restriction estimates.
//!
//! Everything here works in `Rational64`; the Lebesgue exponent `p = ∞` is a
//! distinct value with `1/∞ = 0`, so every identity below is checked with `==`.
//!
//! The restriction exponent δ(n, k, p) bounds `‖u‖_{L^p(Y)} ≲ h^{-δ}` for an
//! `L²`-normalised quasimode on an `n`-manifold restricted to a `k`-dimensional
//! submanifold `Y`. The Strichartz helpers solve the two-bound dispersive
//! scheme in which the `L¹ → L^∞` and `L² → L²` norms of `W(t)W*(s)` decay like
//! `h^{-μ}(h + |t - s|)^{-σ}`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Rational64;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

/// A Lebesgue exponent in `[1, ∞]`, finite values kept exact.
///
/// Serialised as its display string (`"4"`, `"10/3"`, `"inf"`); integers are
/// also accepted on input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lp {
    Finite(Q),
    Infinity,
}

impl Lp {
    pub fn int(p: i64) -> Self {
        Lp::Finite(qi(p))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Lp::Finite(q(num, den))
    }

    /// Builds the exponent whose reciprocal is `inv`; `inv = 0` gives `∞`.
    pub fn from_recip(inv: Q) -> Result<Self> {
        if inv.is_zero() {
            Ok(Lp::Infinity)
        } else if inv.is_positive() {
            Ok(Lp::Finite(inv.recip()))
        } else {
            Err(Error::domain(format!("1/p = {inv} is negative")))
        }
    }

    pub fn recip(&self) -> Q {
        match self {
            Lp::Finite(p) => p.recip(),
            Lp::Infinity => Q::zero(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Lp::Infinity)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Lp::Finite(p) => ratio_to_f64(*p),
            Lp::Infinity => f64::INFINITY,
        }
    }
}

impl PartialOrd for Lp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Lp {
    fn cmp(&self, other: &Self) -> Ordering {
        // larger p means smaller 1/p
        other.recip().cmp(&self.recip())
    }
}

impl fmt::Display for Lp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lp::Finite(p) => write!(f, "{p}"),
            Lp::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Lp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Lp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(p) => Ok(Lp::int(p)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl FromStr for Lp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Lp::Infinity),
            _ => {}
        }
        parse_rational(t).map(Lp::Finite)
    }
}

/// Parses `"a"`, `"a/b"` or a terminating decimal like `"2.5"`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let bad = || Error::domain(format!("cannot parse `{s}` as a rational"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: i64 = a.trim().parse().map_err(|_| bad())?;
        let b: i64 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(q(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 12 || frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.trim_start().starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * den + f;
        return Ok(q(if neg { -mag } else { mag }, den));
    }
    s.parse::<i64>().map(qi).map_err(|_| bad())
}

pub fn ratio_to_f64(r: Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Ambient dimension, submanifold dimension and Lebesgue exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub n: u32,
    pub k: u32,
    pub p: Lp,
}

impl ExponentQuery {
    pub fn new(n: u32, k: u32, p: Lp) -> Result<Self> {
        let query = ExponentQuery { n, k, p };
        query.validate()?;
        Ok(query)
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(self.n, self.k)?;
        check_p_at_least_two(self.p)
    }
}

fn check_dims(n: u32, k: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("ambient dimension n = {n} must be >= 2")));
    }
    if k < 1 {
        return Err(Error::domain(format!("submanifold dimension k = {k} must be >= 1")));
    }
    if k > n - 1 {
        return Err(Error::domain(format!(
            "submanifold dimension k = {k} must be <= n - 1 = {}",
            n - 1
        )));
    }
    Ok(())
}

fn check_p_at_least_two(p: Lp) -> Result<()> {
    if p.recip() > q(1, 2) {
        return Err(Error::domain(format!("exponent p = {p} must be >= 2")));
    }
    Ok(())
}

/// Power of `1/h` in a restriction bound, with the half-power logarithm that
/// appears only for `(k, p) = (n - 2, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaResult {
    pub power: Q,
    pub log_half_power: bool,
}

impl DeltaResult {
    pub fn plain(power: Q) -> Self {
        DeltaResult { power, log_half_power: false }
    }

    pub fn power_f64(&self) -> f64 {
        ratio_to_f64(self.power)
    }
}

impl fmt::Display for DeltaResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.log_half_power {
            write!(f, "{} (× log^{{1/2}}(1/h))", self.power)
        } else {
            write!(f, "{}", self.power)
        }
    }
}

/// The hypersurface breakpoint `2n/(n-1)`.
pub fn hypersurface_breakpoint(n: u32) -> Q {
    let n = n as i64;
    q(2 * n, n - 1)
}

/// Restriction exponent δ(n, k, p).
pub fn delta(query: &ExponentQuery) -> Result<DeltaResult> {
    query.validate()?;
    let n = query.n as i64;
    let k = query.k as i64;
    let inv_p = query.p.recip();
    let half_dim = q(n - 1, 2);

    if k == n - 1 {
        // 1/p <= (n-1)/(2n)  <=>  p >= 2n/(n-1)
        let power = if inv_p <= q(n - 1, 2 * n) {
            half_dim - qi(n - 1) * inv_p
        } else {
            q(n - 1, 4) - q(n - 2, 2) * inv_p
        };
        return Ok(DeltaResult::plain(power));
    }
    if k == n - 2 && inv_p == q(1, 2) {
        return Ok(DeltaResult { power: q(1, 2), log_half_power: true });
    }
    Ok(DeltaResult::plain(half_dim - qi(k) * inv_p))
}

/// Convenience wrapper around [`delta`].
pub fn delta_of(n: u32, k: u32, p: Lp) -> Result<DeltaResult> {
    delta(&ExponentQuery { n, k, p })
}

/// Whole-manifold `L^p` exponent used as the comparison curve for hypersurfaces:
/// `(n-1)/2 - n/p` above `2(n+1)/(n-1)`, `(n-1)/2 (1/2 - 1/p)` below.
pub fn full_manifold_delta(n: u32, p: Lp) -> Result<Q> {
    if n < 2 {
        return Err(Error::domain(format!("ambient dimension n = {n} must be >= 2")));
    }
    check_p_at_least_two(p)?;
    let n = n as i64;
    let inv_p = p.recip();
    if inv_p <= q(n - 1, 2 * (n + 1)) {
        Ok(q(n - 1, 2) - qi(n) * inv_p)
    } else {
        Ok(q(n - 1, 2) * (q(1, 2) - inv_p))
    }
}

/// Interpolation exponent `β(p, σ_∞, σ₂) = 2(σ₂ - σ_∞)/p + σ_∞`.
pub fn beta(p: Lp, sigma_inf: Q, sigma_2: Q) -> Result<Q> {
    check_p_at_least_two(p)?;
    Ok(qi(2) * (sigma_2 - sigma_inf) * p.recip() + sigma_inf)
}

/// h- and decay-powers of the two kernel bounds on `W(t)W*(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrichartzAssumptions {
    pub mu_inf: Q,
    pub sigma_inf: Q,
    pub mu_2: Q,
    pub sigma_2: Q,
}

impl StrichartzAssumptions {
    pub fn new(mu_inf: Q, sigma_inf: Q, mu_2: Q, sigma_2: Q) -> Result<Self> {
        let a = StrichartzAssumptions { mu_inf, sigma_inf, mu_2, sigma_2 };
        a.validate()?;
        Ok(a)
    }

    /// Assumptions with `μ = σ` for both bounds.
    pub fn balanced(sigma_inf: Q, sigma_2: Q) -> Result<Self> {
        Self::new(sigma_inf, sigma_inf, sigma_2, sigma_2)
    }

    /// The bounds satisfied by a restricted evolution on an `n`-manifold and a
    /// `k`-submanifold: `σ_∞ = μ_∞ = (n-1)/2`, `σ₂ = μ₂ = (n-k)/2`.
    pub fn for_submanifold(n: u32, k: u32) -> Result<Self> {
        check_dims(n, k)?;
        let (n, k) = (n as i64, k as i64);
        Self::balanced(q(n - 1, 2), q(n - k, 2))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_2.is_negative() {
            return Err(Error::domain(format!("sigma_2 = {} must be >= 0", self.sigma_2)));
        }
        if self.sigma_inf <= self.sigma_2 {
            return Err(Error::domain(format!(
                "sigma_inf = {} must exceed sigma_2 = {}",
                self.sigma_inf, self.sigma_2
            )));
        }
        Ok(())
    }
}

/// A time/space exponent pair on the governing line
/// `2/r + 2(σ_∞ - σ₂)/p = σ_∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrichartzPair {
    pub r: Lp,
    pub p: Lp,
}

/// Solves the governing relation for `r` given `p`.
pub fn solve_governing(a: &StrichartzAssumptions, p: Lp) -> Result<StrichartzPair> {
    a.validate()?;
    let b = beta(p, a.sigma_inf, a.sigma_2)?;
    if b.is_negative() {
        return Err(Error::NoSolution(format!("beta = {b} < 0 at p = {p}")));
    }
    // 2/r = beta
    let inv_r = b / qi(2);
    if inv_r >= q(1, 2) {
        let r = Lp::from_recip(inv_r)?;
        return Err(Error::Endpoint { r: r.to_string(), p: p.to_string() });
    }
    Ok(StrichartzPair { r: Lp::from_recip(inv_r)?, p })
}

/// Exponent of `1/h` in the mixed-norm Strichartz bound for time exponent `r`.
pub fn strichartz_h_exponent(a: &StrichartzAssumptions, r: Lp) -> Result<Q> {
    let gap = a.sigma_inf - a.sigma_2;
    if gap.is_zero() {
        return Err(Error::DegenerateAssumptions("sigma_inf == sigma_2".into()));
    }
    Ok((a.mu_inf - a.mu_2) * r.recip() / gap
        + (a.sigma_inf * a.mu_2 - a.sigma_2 * a.mu_inf) / (qi(2) * gap))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagonalPair {
    /// `(p, p)` with `p = 2(k+1)/(n-1) > 2`.
    Point(Q),
    /// `p = 2` exactly: the excluded endpoint `(2, 2)`.
    Endpoint,
    /// `2(k+1)/(n-1) < 2`: the Strichartz scheme gives no diagonal point.
    None,
}

pub fn diagonal_pair(n: u32, k: u32) -> Result<DiagonalPair> {
    check_dims(n, k)?;
    let p = q(2 * (k as i64 + 1), n as i64 - 1);
    Ok(match p.cmp(&qi(2)) {
        Ordering::Greater => DiagonalPair::Point(p),
        Ordering::Equal => DiagonalPair::Endpoint,
        Ordering::Less => DiagonalPair::None,
    })
}

/// A known `(1/p, δ)` value used for interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    pub inv_p: Q,
    pub delta: Q,
    pub log_half_power: bool,
}

/// Interpolation anchors sorted by `1/p`: the `L^∞` bound, the `L²` bound and,
/// for hypersurfaces, the Strichartz diagonal point.
pub fn anchor_points(n: u32, k: u32) -> Result<Vec<Anchor>> {
    check_dims(n, k)?;
    let (ni, ki) = (n as i64, k as i64);
    let sup = Anchor { inv_p: Q::zero(), delta: q(ni - 1, 2), log_half_power: false };
    let anchors = if ki == ni - 1 {
        let strichartz_inv = q(ni - 1, 2 * ni);
        vec![
            sup,
            Anchor { inv_p: strichartz_inv, delta: strichartz_inv, log_half_power: false },
            Anchor { inv_p: q(1, 2), delta: q(1, 4), log_half_power: false },
        ]
    } else if ki == ni - 2 {
        vec![sup, Anchor { inv_p: q(1, 2), delta: q(1, 2), log_half_power: true }]
    } else {
        vec![sup, Anchor { inv_p: q(1, 2), delta: q(ni - ki - 1, 2), log_half_power: false }]
    };
    Ok(anchors)
}

/// Piecewise-linear interpolation of δ in `1/p` through sorted anchors. The
/// log flag is dropped: only the anchor itself carries it.
pub fn interpolate_delta(anchors: &[Anchor], p: Lp) -> Result<Q> {
    check_p_at_least_two(p)?;
    if anchors.is_empty() {
        return Err(Error::domain("no anchors"));
    }
    if anchors.windows(2).any(|w| w[0].inv_p >= w[1].inv_p) {
        return Err(Error::domain("anchors must be strictly increasing in 1/p"));
    }
    let x = p.recip();
    if let Some(a) = anchors.iter().find(|a| a.inv_p == x) {
        return Ok(a.delta);
    }
    for w in anchors.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if lo.inv_p < x && x < hi.inv_p {
            let t = (x - lo.inv_p) / (hi.inv_p - lo.inv_p);
            return Ok(lo.delta + t * (hi.delta - lo.delta));
        }
    }
    Err(Error::domain(format!("1/p = {x} lies outside the anchor range")))
}

/// Whether the estimate survives when (A2) is weakened to non-degeneracy.
pub fn weak_a2_region(n: u32, k: u32, p: Lp) -> Result<bool> {
    ExponentQuery::new(n, k, p)?;
    let (ni, ki) = (n as i64, k as i64);
    let threshold = q(4 * ki, ni - 1);
    let above = |strict: bool| match p {
        Lp::Infinity => true,
        Lp::Finite(pv) => {
            if strict {
                pv > threshold
            } else {
                pv >= threshold
            }
        }
    };
    Ok(match (2 * ki).cmp(&(ni - 1)) {
        Ordering::Less => true,
        Ordering::Greater => above(false),
        Ordering::Equal => above(true),
    })
}

/// Breakpoints of δ(n, k, ·) in `1/p`, including both ends of `[0, 1/2]`.
pub fn delta_breakpoints(n: u32, k: u32) -> Result<Vec<(Q, Q)>> {
    Ok(anchor_points(n, k)?.into_iter().map(|a| (a.inv_p, a.delta)).collect())
}

pub fn half() -> Q {
    q(1, 2)
}

pub fn one() -> Q {
    Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_serialises_as_text() {
        for p in [Lp::int(4), Lp::ratio(10, 3), Lp::Infinity] {
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(serde_json::from_str::<Lp>(&json).unwrap(), p);
        }
        assert_eq!(serde_json::to_string(&Lp::ratio(10, 3)).unwrap(), "\"10/3\"");
        assert_eq!(serde_json::from_str::<Lp>("6").unwrap(), Lp::int(6));
        assert!(serde_json::from_str::<Lp>("\"1/0\"").is_err());
    }

    fn d(n: u32, k: u32, p: Lp) -> DeltaResult {
        delta_of(n, k, p).unwrap()
    }

    #[test]
    fn delta_examples() {
        assert_eq!(d(2, 1, Lp::int(4)), DeltaResult::plain(q(1, 4)));
        assert_eq!(d(3, 1, Lp::int(2)), DeltaResult { power: q(1, 2), log_half_power: true });
        assert_eq!(d(5, 2, Lp::Infinity), DeltaResult::plain(qi(2)));
        assert_eq!(d(3, 2, Lp::int(2)), DeltaResult::plain(q(1, 4)));
        assert_eq!(d(3, 2, Lp::int(4)), DeltaResult::plain(q(1, 2)));
    }

    #[test]
    fn delta_rejects_bad_queries() {
        assert!(matches!(delta_of(1, 1, Lp::int(2)), Err(Error::Domain(m)) if m.contains("n = 1")));
        assert!(matches!(delta_of(3, 3, Lp::int(2)), Err(Error::Domain(m)) if m.contains("k = 3")));
        assert!(matches!(delta_of(3, 0, Lp::int(2)), Err(Error::Domain(_))));
        assert!(matches!(delta_of(3, 1, Lp::ratio(3, 2)), Err(Error::Domain(m)) if m.contains(">= 2")));
    }

    #[test]
    fn beta_examples() {
        let (si, s2) = (q(7, 3), q(1, 5));
        assert_eq!(beta(Lp::int(2), si, s2).unwrap(), s2);
        assert_eq!(beta(Lp::Infinity, si, s2).unwrap(), si);
        assert_eq!(beta(Lp::int(4), qi(1), q(1, 2)).unwrap(), q(3, 4));
        assert!(beta(Lp::int(1), si, s2).is_err());
    }

    #[test]
    fn governing_examples() {
        let a = StrichartzAssumptions::balanced(qi(1), q(1, 2)).unwrap();
        let pair = solve_governing(&a, Lp::int(3)).unwrap();
        assert_eq!(pair.r, Lp::int(3));

        let classical = StrichartzAssumptions::balanced(qi(1), Q::zero()).unwrap();
        assert!(matches!(
            solve_governing(&classical, Lp::Infinity),
            Err(Error::Endpoint { .. })
        ));
        // 2/r + 2/6 = 1
        assert_eq!(solve_governing(&classical, Lp::int(6)).unwrap().r, Lp::int(3));
    }

    #[test]
    fn governing_energy_pair() {
        // sigma_2 = 0, p = 2 gives beta = 0, i.e. the (inf, 2) pair
        let a = StrichartzAssumptions::balanced(qi(1), Q::zero()).unwrap();
        assert_eq!(solve_governing(&a, Lp::int(2)).unwrap().r, Lp::Infinity);
    }

    #[test]
    fn h_exponent_examples() {
        let a = StrichartzAssumptions::balanced(qi(1), q(1, 2)).unwrap();
        assert_eq!(strichartz_h_exponent(&a, Lp::int(3)).unwrap(), q(1, 3));
        let single = StrichartzAssumptions::new(q(3, 2), q(5, 4), Q::zero(), Q::zero()).unwrap();
        let r = Lp::int(7);
        assert_eq!(strichartz_h_exponent(&single, r).unwrap(), q(3, 2) / (qi(7) * q(5, 4)));
        let flat = StrichartzAssumptions { mu_inf: qi(1), sigma_inf: qi(1), mu_2: qi(1), sigma_2: qi(1) };
        assert!(matches!(strichartz_h_exponent(&flat, r), Err(Error::DegenerateAssumptions(_))));
    }

    #[test]
    fn diagonal_examples() {
        for n in 2..10 {
            assert_eq!(diagonal_pair(n, n - 1).unwrap(), DiagonalPair::Point(hypersurface_breakpoint(n)));
        }
        assert_eq!(diagonal_pair(3, 1).unwrap(), DiagonalPair::Endpoint);
        assert_eq!(diagonal_pair(6, 1).unwrap(), DiagonalPair::None);
    }

    #[test]
    fn anchor_examples() {
        let a = anchor_points(3, 2).unwrap();
        let pts: Vec<_> = a.iter().map(|a| (a.inv_p, a.delta)).collect();
        assert_eq!(pts, vec![(qi(0), qi(1)), (q(1, 3), q(1, 3)), (q(1, 2), q(1, 4))]);

        let a = anchor_points(4, 1).unwrap();
        let pts: Vec<_> = a.iter().map(|a| (a.inv_p, a.delta)).collect();
        assert_eq!(pts, vec![(qi(0), q(3, 2)), (q(1, 2), qi(1))]);

        let a = anchor_points(3, 1).unwrap();
        assert_eq!(a[1], Anchor { inv_p: q(1, 2), delta: q(1, 2), log_half_power: true });
        assert!(!a[0].log_half_power);
    }

    #[test]
    fn interpolation_examples() {
        let a = anchor_points(3, 2).unwrap();
        assert_eq!(interpolate_delta(&a, Lp::int(3)).unwrap(), q(1, 3));
        assert_eq!(interpolate_delta(&a, Lp::int(4)).unwrap(), q(1, 2));
        let a = anchor_points(2, 1).unwrap();
        assert_eq!(interpolate_delta(&a, Lp::int(2)).unwrap(), q(1, 4));
        assert!(interpolate_delta(&a, Lp::int(1)).is_err());
    }

    #[test]
    fn weak_a2_examples() {
        assert!(weak_a2_region(9, 1, Lp::int(2)).unwrap());
        assert!(weak_a2_region(3, 2, Lp::int(4)).unwrap());
        assert!(!weak_a2_region(3, 2, Lp::int(3)).unwrap());
        // k = (n-1)/2 = 2, threshold 4k/(n-1) = 2 is strict
        assert!(!weak_a2_region(5, 2, Lp::int(2)).unwrap());
        assert!(weak_a2_region(5, 2, Lp::ratio(201, 100)).unwrap());
        assert!(weak_a2_region(5, 2, Lp::int(4)).unwrap());
        assert!(weak_a2_region(5, 2, Lp::Infinity).unwrap());
    }

    #[test]
    fn lp_parsing_and_order() {
        assert_eq!("inf".parse::<Lp>().unwrap(), Lp::Infinity);
        assert_eq!("10/3".parse::<Lp>().unwrap(), Lp::ratio(10, 3));
        assert_eq!("2.5".parse::<Lp>().unwrap(), Lp::ratio(5, 2));
        assert_eq!(" 6 ".parse::<Lp>().unwrap(), Lp::int(6));
        assert!("abc".parse::<Lp>().is_err());
        assert!(Lp::int(4) < Lp::int(6));
        assert!(Lp::int(1000) < Lp::Infinity);
        assert_eq!(Lp::Infinity.to_string(), "inf");
    }

    #[test]
    fn full_manifold_curve() {
        // n = 2: breakpoint at p = 6 where both sides give 1/6
        assert_eq!(full_manifold_delta(2, Lp::int(6)).unwrap(), q(1, 6));
        assert_eq!(full_manifold_delta(2, Lp::Infinity).unwrap(), q(1, 2));
        assert_eq!(full_manifold_delta(2, Lp::int(2)).unwrap(), qi(0));
    }
}
