//! Closed-form laws, moments and performance of the two-way link.
//!
//! Time is measured in blocks. `theta` is the mean number of extra blocks a
//! packet needs beyond its first, and `m = lambda / eta` is the mean number of
//! idle blocks needed to harvest one block of transmit energy.
//!
//! The average uplink AoI is computed from the first two moments of the uplink
//! system time `T` as `E(T) + 1/2 + E(T^2) / (2 E(T))`. Two expanded forms
//! of that quantity are in circulation. They differ by a factor of two in
//! their second term, and both are available through [`aoi_expansion`] for
//! comparison.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::stable_load;

/// First and second raw moments of a nonnegative random variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub first: f64,
    pub second: f64,
}

impl MomentPair {
    pub const fn new(first: f64, second: f64) -> Self {
        Self { first, second }
    }

    pub fn variance(&self) -> f64 {
        self.second - self.first * self.first
    }
}

/// Average uplink AoI, which is unbounded outside the stability region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aoi {
    Finite(f64),
    Unbounded,
}

impl Aoi {
    pub fn finite(self) -> Option<f64> {
        match self {
            Aoi::Finite(v) => Some(v),
            Aoi::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Aoi::Unbounded)
    }
}

impl std::fmt::Display for Aoi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aoi::Finite(v) => write!(f, "{v}"),
            Aoi::Unbounded => f.write_str("inf"),
        }
    }
}

/// Average uplink AoI and uplink rate at one downlink rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoiRateResult {
    pub aoi: Aoi,
    /// Uplink packets per block.
    pub q: f64,
    pub stable: bool,
}

/// `Pr{S = j} = theta^(j-1) / (j-1)! * e^(-theta)` for `j >= 1`: the number of
/// blocks needed to push one packet through the fading channel.
pub fn service_pmf(j: i64, theta: f64) -> Result<f64> {
    if j < 1 {
        return Err(Error::Domain(format!("service time j must be >= 1, got {j}")));
    }
    Ok(poisson_pmf((j - 1) as u64, theta))
}

/// `E(z^S) = z e^(theta (z - 1))`.
pub fn service_pgf(z: f64, theta: f64) -> f64 {
    z * (theta * (z - 1.0)).exp()
}

pub fn service_moments(theta: f64) -> MomentPair {
    MomentPair::new(1.0 + theta, theta * theta + 3.0 * theta + 1.0)
}

/// `Pr{tau_H = j} = m^j / j! * e^(-m)` for `j >= 0`: idle blocks needed to
/// accumulate one block of transmit energy, under the memoryless residual.
pub fn harvest_pmf(j: i64, m: f64) -> Result<f64> {
    if j < 0 {
        return Err(Error::Domain(format!("harvest wait j must be >= 0, got {j}")));
    }
    Ok(poisson_pmf(j as u64, m))
}

/// Moments of the slot time `s = max(1, tau_H)`.
pub fn slot_moments(m: f64) -> MomentPair {
    let tail = (-m).exp();
    MomentPair::new(m + tail, m * m + m + tail)
}

/// Moments of the uplink service time, a sum of `S` independent slot times.
pub fn uplink_service_moments(theta: f64, m: f64) -> MomentPair {
    let s = slot_moments(m);
    let first = s.first * (1.0 + theta);
    let second = s.first * s.first * (theta * theta + 2.0 * theta) + s.second * (1.0 + theta);
    MomentPair::new(first, second)
}

/// Moments of `F`, the number of back-to-back downlink busy periods,
/// `Pr{F = j} = p^j (1 - p)`.
pub fn f_moments(p: f64) -> Result<MomentPair> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0, 1), got {p}")));
    }
    let q = 1.0 - p;
    Ok(MomentPair::new(p / q, p * (1.0 + p) / (q * q)))
}

fn check_stable(p: f64, theta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0, 1), got {p}")));
    }
    if !stable_load(p, theta) {
        return Err(Error::Unstable { load: (theta + 1.0) * p });
    }
    Ok(())
}

/// Moments of the downlink busy period.
pub fn busy_period_moments(p: f64, theta: f64) -> Result<MomentPair> {
    check_stable(p, theta)?;
    // With s1 = 1 + theta and s2 = theta^2 + 3 theta + 1 this is
    // (1 + theta) / (1 - p - theta p) and
    // ((1 + theta)^2 (1 - p^2 - theta p^2) + theta) / (1 - p - theta p)^3.
    let s = service_moments(theta);
    let slack = 1.0 - p * s.first;
    let first = s.first / slack;
    let second = (s.second - p * p * s.first.powi(3)) / slack.powi(3);
    Ok(MomentPair::new(first, second))
}

/// Moments of the uplink system time: uplink service plus every downlink busy
/// period interleaved before its slots.
pub fn system_time_moments(p: f64, theta: f64, m: f64) -> Result<MomentPair> {
    let busy = busy_period_moments(p, theta)?;
    let f = f_moments(p)?;
    let su = uplink_service_moments(theta, m);
    let stretch = 1.0 + f.first * busy.first;
    let first = su.first * stretch;
    let second = su.second * stretch * stretch
        + su.first
            * (f.first * busy.variance() + f.variance() * busy.first * busy.first);
    Ok(MomentPair::new(first, second))
}

/// Average uplink AoI, `E(T) + 1/2 + E(T^2) / (2 E(T))` inside the stability
/// region and unbounded outside it.
pub fn avg_uplink_aoi(p: f64, theta: f64, m: f64) -> Aoi {
    match system_time_moments(p, theta, m) {
        Ok(t) => Aoi::Finite(t.first + 0.5 + t.second / (2.0 * t.first)),
        Err(_) => Aoi::Unbounded,
    }
}

/// Uplink packets per block; zero outside the stability region.
pub fn uplink_rate(p: f64, theta: f64, m: f64) -> f64 {
    if !(0.0..1.0).contains(&p) || !stable_load(p, theta) {
        return 0.0;
    }
    let c = slot_moments(m).first;
    (1.0 - p) * (1.0 - p - theta * p) / (c * (1.0 + theta) * (1.0 - p + p * p + theta * p * p))
}

pub fn evaluate(p: f64, theta: f64, m: f64) -> AoiRateResult {
    let aoi = avg_uplink_aoi(p, theta, m);
    AoiRateResult {
        aoi,
        q: uplink_rate(p, theta, m),
        stable: !aoi.is_unbounded(),
    }
}

/// Average uplink AoI in fully expanded form, obtained by substituting the
/// service, busy-period and `F` moments into the system-time composition and
/// collecting terms over the common denominators.
///
/// With `u = 1 - (1 + theta) p` and `v = 1 - p + (1 + theta) p^2`,
/// `E(T) = E(S_UL) v / ((1 - p) u)` and the AoI becomes
/// `v K / (2 (1 - p) u) + p R / (2 (1 - p) u^2 v) + 1/2`, where
/// `K = E(s^2) / E(s) + E(s) (3 theta^2 + 6 theta + 2) / (1 + theta)` and
/// `R = (1 + theta)^2 + theta (1 - p) - (2 - p) p^2 (1 + theta)^3`.
pub fn avg_uplink_aoi_expanded(p: f64, theta: f64, m: f64) -> Aoi {
    if !(0.0..1.0).contains(&p) || !stable_load(p, theta) {
        return Aoi::Unbounded;
    }
    let a = 1.0 + theta;
    let u = 1.0 - a * p;
    let v = 1.0 - p + a * p * p;
    let w = 1.0 - p;
    let k = shape_constant(theta, m);
    let r = a * a + theta * w - (2.0 - p) * p * p * a.powi(3);
    Aoi::Finite(v * k / (2.0 * w * u) + p * r / (2.0 * w * u * u * v) + 0.5)
}

/// `E(s^2)/E(s) + E(s) (3 theta^2 + 6 theta + 2)/(1 + theta)`, the bracketed
/// constant shared by the AoI expression and its limits.
fn shape_constant(theta: f64, m: f64) -> f64 {
    let s = slot_moments(m);
    s.second / s.first + s.first * (3.0 * theta * theta + 6.0 * theta + 2.0) / (1.0 + theta)
}

/// The two expanded forms of the average uplink AoI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoiExpansion {
    /// Second term over `2 (1-p)(1-p-theta p)^2 (1-p+p^2+theta p^2)`.
    Doubled,
    /// Same numerator over `(1-p)(1-p-theta p)^2 (1-p+p^2+theta p^2)`.
    Single,
}

impl AoiExpansion {
    pub const ALL: [AoiExpansion; 2] = [AoiExpansion::Doubled, AoiExpansion::Single];

    pub fn name(self) -> &'static str {
        match self {
            AoiExpansion::Doubled => "doubled",
            AoiExpansion::Single => "single",
        }
    }
}

/// Evaluates one expanded form term by term.
pub fn aoi_expansion(p: f64, theta: f64, m: f64, variant: AoiExpansion) -> Aoi {
    if !(0.0..1.0).contains(&p) || !stable_load(p, theta) {
        return Aoi::Unbounded;
    }
    let slack = 1.0 - p - theta * p;
    let v = 1.0 - p + p * p + theta * p * p;
    let first = v / (2.0 * (1.0 - p) * slack) * shape_constant(theta, m);
    let numer = p * (1.0 + theta).powi(2) - p.powi(3) * (2.0 - p) * (1.0 + theta).powi(3)
        + theta * p * (1.0 - p);
    let denom = (1.0 - p) * slack * slack * v;
    let scale = match variant {
        AoiExpansion::Doubled => 2.0,
        AoiExpansion::Single => 1.0,
    };
    Aoi::Finite(first + numer / (scale * denom) + 0.5)
}

/// Light-load values and heavy-load coefficients of AoI and rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotes {
    /// AoI as `(theta + 1) p -> 0`.
    pub aoi_at_zero: f64,
    /// Uplink rate as `(theta + 1) p -> 0`.
    pub q_at_zero: f64,
    /// Leading-order coefficient of `1/o` in the AoI when `(theta + 1) p = 1 - o`.
    pub aoi_divergence_coeff: f64,
    /// Coefficient of `o` in the uplink rate when `(theta + 1) p = 1 - o`.
    pub q_vanishing_coeff: f64,
}

pub fn asymptotes(theta: f64, m: f64) -> Asymptotes {
    let c = slot_moments(m).first;
    let k = shape_constant(theta, m);
    Asymptotes {
        aoi_at_zero: 0.5 * k + 0.5,
        q_at_zero: 1.0 / (c * (1.0 + theta)),
        aoi_divergence_coeff: k * (1.0 + theta) / (2.0 * theta),
        q_vanishing_coeff: theta / ((1.0 + theta).powi(2) * c),
    }
}

/// Maximizer of the weighted sum rate `w p + (1 - w) q(p)` over the stable region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedOptimum {
    pub p_star: f64,
    pub q_star: f64,
    pub objective: f64,
}

const SCAN_POINTS: usize = 1000;
const GOLDEN_TOL: f64 = 1e-8;

/// Maximizes `w p + (1 - w) q(p)` over `p in [0, p_max)`.
///
/// The objective is not known to be unimodal, so a uniform scan locates the
/// best grid cell first and golden-section search refines inside it.
pub fn weighted_sum_optimum(w: f64, theta: f64, m: f64) -> Result<WeightedOptimum> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Domain(format!("weight must lie in [0, 1], got {w}")));
    }
    let p_max = 1.0 / (1.0 + theta);
    let objective = |p: f64| w * p + (1.0 - w) * uplink_rate(p, theta, m);

    let step = p_max / SCAN_POINTS as f64;
    // Grid point SCAN_POINTS sits on p_max where q = 0, so the scan covers the
    // closed interval while every candidate returned below stays inside it.
    let best = (0..=SCAN_POINTS)
        .map(|i| (i, objective(i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let lo = best.saturating_sub(1) as f64 * step;
    let hi = ((best + 1).min(SCAN_POINTS)) as f64 * step;
    let mut p_star = golden_section_max(&objective, lo, hi, GOLDEN_TOL);
    if p_star >= p_max {
        p_star = p_max - GOLDEN_TOL;
    }
    if objective(0.0) >= objective(p_star) {
        p_star = 0.0;
    }
    let q_star = uplink_rate(p_star, theta, m);
    Ok(WeightedOptimum {
        p_star,
        q_star,
        objective: objective(p_star),
    })
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Density of `Erlang(j, mu)`, the energy harvested over `j` idle blocks.
pub fn erlang_energy_pdf(x: f64, j: i64, mu: f64) -> Result<f64> {
    if j < 1 {
        return Err(Error::Domain(format!("Erlang shape must be >= 1, got {j}")));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("energy must be finite and >= 0, got {x}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("Erlang rate must be > 0, got {mu}")));
    }
    if x == 0.0 {
        return Ok(if j == 1 { mu } else { 0.0 });
    }
    let k = j as u64;
    let ln = k as f64 * mu.ln() + (k - 1) as f64 * x.ln() - mu * x - ln_factorial(k - 1);
    Ok(ln.exp())
}

/// Poisson pmf evaluated in log space so large `k` or `mean` cannot overflow.
fn poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mean.ln() - mean - ln_factorial(k)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const THETA: f64 = 1.2;
    const M: f64 = 6.0;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // Oracle: plain product form, no log space.
    fn pmf_direct(k: u32, mean: f64) -> f64 {
        let mut v = (-mean).exp();
        for i in 1..=k {
            v *= mean / i as f64;
        }
        v
    }

    #[test]
    fn service_pmf_values() {
        assert!((service_pmf(1, THETA).unwrap() - (-1.2f64).exp()).abs() < 1e-15);
        assert!((service_pmf(1, THETA).unwrap() - 0.30119).abs() < 1e-5);
        assert!((service_pmf(2, THETA).unwrap() - 0.36143).abs() < 1e-5);
        for j in 1..40 {
            let v = service_pmf(j, THETA).unwrap();
            assert!(rel(v, pmf_direct(j as u32 - 1, THETA)) < 1e-12);
        }
        let total: f64 = (1..=200).map(|j| service_pmf(j, THETA).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(service_pmf(0, THETA).is_err());
    }

    #[test]
    fn service_moments_match_numeric_sums() {
        let mm = service_moments(THETA);
        assert!((mm.first - 2.2).abs() < 1e-12);
        assert!((mm.second - 6.04).abs() < 1e-12);
        let (mut s1, mut s2) = (0.0, 0.0);
        for j in 1..=200 {
            let w = service_pmf(j, THETA).unwrap();
            s1 += j as f64 * w;
            s2 += (j * j) as f64 * w;
        }
        assert!(rel(s1, mm.first) < 1e-12 && rel(s2, mm.second) < 1e-12);
        assert_eq!(service_moments(0.0), MomentPair::new(1.0, 1.0));
        assert_eq!(service_pgf(1.0, THETA), 1.0);
        // PGF derivative at 1 by central difference.
        let h = 1e-6;
        let d = (service_pgf(1.0, THETA) - service_pgf(1.0 - 2.0 * h, THETA)) / (2.0 * h);
        assert!((d - mm.first).abs() < 1e-4);
    }

    #[test]
    fn harvest_pmf_values() {
        assert!((harvest_pmf(0, M).unwrap() - 2.4788e-3).abs() < 1e-7);
        assert!((harvest_pmf(6, M).unwrap() - 0.16062).abs() < 1e-5);
        let total: f64 = (0..=200).map(|j| harvest_pmf(j, M).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(harvest_pmf(-1, M).is_err());
        // Large means stay finite in log space.
        let big: f64 = (0..=4000).map(|j| harvest_pmf(j, 1500.0).unwrap()).sum();
        assert!((big - 1.0).abs() < 1e-10);
    }

    #[test]
    fn slot_moments_against_pmf_sums() {
        let mm = slot_moments(M);
        assert!((mm.first - 6.0024788).abs() < 1e-7);
        assert!((mm.second - 42.0024788).abs() < 1e-7);
        let (mut s1, mut s2) = (0.0, 0.0);
        for j in 0..=200 {
            let w = harvest_pmf(j, M).unwrap();
            let s = j.max(1) as f64;
            s1 += s * w;
            s2 += s * s * w;
        }
        assert!(rel(s1, mm.first) < 1e-12 && rel(s2, mm.second) < 1e-12);
        let tiny = slot_moments(1e-12);
        assert!((tiny.first - 1.0).abs() < 1e-9 && (tiny.second - 1.0).abs() < 1e-9);
        let mut m = 1e-3;
        while m <= 1e3 {
            let s = slot_moments(m);
            assert!(s.first <= s.second && s.second >= s.first * s.first);
            m *= 1.5;
        }
    }

    #[test]
    fn uplink_service_moments_values() {
        let mm = uplink_service_moments(THETA, M);
        assert!((mm.first - 13.20545).abs() < 1e-5);
        assert!(rel(mm.first, service_moments(THETA).first * slot_moments(M).first) < 1e-15);
        let trivial = uplink_service_moments(0.0, 1e-14);
        assert!((trivial.first - 1.0).abs() < 1e-9 && (trivial.second - 1.0).abs() < 1e-9);
    }

    // Oracle: E(S_UL^2) by conditioning on S with a truncated pmf sum.
    #[test]
    fn uplink_second_moment_by_conditioning() {
        let s = slot_moments(M);
        let var_s = s.variance();
        let mut second = 0.0;
        for j in 1..=200 {
            let w = service_pmf(j, THETA).unwrap();
            let n = j as f64;
            second += w * (n * var_s + n * n * s.first * s.first);
        }
        assert!(rel(second, uplink_service_moments(THETA, M).second) < 1e-12);
    }

    #[test]
    fn f_moments_values() {
        assert_eq!(f_moments(0.0).unwrap(), MomentPair::new(0.0, 0.0));
        let half = f_moments(0.5).unwrap();
        assert!((half.first - 1.0).abs() < 1e-15 && (half.second - 3.0).abs() < 1e-15);
        let p: f64 = 0.2;
        let (mut total, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for j in 0..400 {
            let w = p.powi(j) * (1.0 - p);
            total += w;
            s1 += j as f64 * w;
            s2 += (j * j) as f64 * w;
        }
        let mm = f_moments(p).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(rel(s1, mm.first) < 1e-12 && rel(s2, mm.second) < 1e-12);
        assert!(f_moments(1.0).is_err());
    }

    #[test]
    fn busy_period_values() {
        assert_eq!(busy_period_moments(0.0, THETA).unwrap(), service_moments(THETA));
        let b = busy_period_moments(0.2, THETA).unwrap();
        assert!((b.first - 2.2 / 0.56).abs() < 1e-12);
        assert!((b.first - 3.92857).abs() < 1e-5);
        assert!(matches!(
            busy_period_moments(1.0 / 2.2, THETA),
            Err(Error::Unstable { .. })
        ));
        let p_max = 1.0 / 2.2;
        let mut prev = MomentPair::new(0.0, 0.0);
        for k in 1..=20 {
            let p = p_max * (1.0 - 0.5f64.powi(k));
            let b = busy_period_moments(p, THETA).unwrap();
            assert!(b.first > prev.first && b.second > prev.second);
            prev = b;
        }
    }

    // Oracle: busy period as a branching process in which each packet's S
    // blocks each spawn an arrival with probability p; the total-progeny
    // moments follow from the law of total variance, computed here from the
    // pmf sums rather than the closed form.
    #[test]
    fn busy_period_branching_oracle() {
        for &p in &[0.05, 0.1, 0.2, 0.3, 0.4] {
            let (mut s1, mut s2) = (0.0, 0.0);
            for j in 1..=200 {
                let w = service_pmf(j, THETA).unwrap();
                s1 += j as f64 * w;
                s2 += (j * j) as f64 * w;
            }
            let b1 = s1 / (1.0 - p * s1);
            // b2 (1 - p s1) = s2 (1 + p b1)^2 - s1 p^2 b1^2
            let b2 = (s2 * (1.0 + p * b1).powi(2) - s1 * p * p * b1 * b1) / (1.0 - p * s1);
            let closed = busy_period_moments(p, THETA).unwrap();
            assert!(rel(closed.first, b1) < 1e-10, "p={p}");
            assert!(rel(closed.second, b2) < 1e-10, "p={p}");
        }
    }

    #[test]
    fn system_time_values() {
        assert_eq!(
            system_time_moments(0.0, THETA, M).unwrap(),
            uplink_service_moments(THETA, M)
        );
        let t = system_time_moments(0.2, THETA, M).unwrap();
        assert!((t.first - 13.20545 * (1.0 + 0.25 * 3.92857)).abs() < 1e-3);
        assert!((t.first - 26.17506).abs() < 1e-4);
        for &th in &[0.1, 1.2, 3.6, 10.8] {
            for &m in &[0.5, 2.0, 6.0, 20.0] {
                let p_max = 1.0 / (1.0 + th);
                for i in 0..20 {
                    let p = p_max * i as f64 / 20.0;
                    let t = system_time_moments(p, th, m).unwrap();
                    assert!(t.second >= t.first * t.first);
                }
            }
        }
    }

    #[test]
    fn aoi_and_rate_at_light_load() {
        let lim = asymptotes(THETA, M);
        assert!((lim.aoi_at_zero - 22.44).abs() < 5e-3, "{}", lim.aoi_at_zero);
        assert!((lim.q_at_zero - 0.075724).abs() < 5e-6);
        let a = avg_uplink_aoi(1e-6, THETA, M).finite().unwrap();
        assert!(rel(a, lim.aoi_at_zero) < 1e-3);
        assert!(rel(avg_uplink_aoi(0.0, THETA, M).finite().unwrap(), lim.aoi_at_zero) < 1e-12);
        assert!(rel(uplink_rate(0.0, THETA, M), lim.q_at_zero) < 1e-12);
        let q = uplink_rate(0.2, THETA, M);
        assert!((q - 0.448 / (6.0024788 * 2.2 * 0.888)).abs() < 1e-6);
        assert!((q - 0.03821).abs() < 1e-5);
    }

    #[test]
    fn unstable_region() {
        let p_max = 1.0 / 2.2;
        for p in [p_max, p_max + 0.01, 0.9] {
            let r = evaluate(p, THETA, M);
            assert!(!r.stable && r.aoi.is_unbounded() && r.q == 0.0);
            assert!(aoi_expansion(p, THETA, M, AoiExpansion::Doubled).is_unbounded());
            assert!(avg_uplink_aoi_expanded(p, THETA, M).is_unbounded());
        }
        assert_eq!(format!("{}", Aoi::Unbounded), "inf");
    }

    #[test]
    fn rate_equals_inverse_mean_system_time() {
        for &th in &[0.3, 1.2, 3.6, 10.8] {
            for &m in &[0.1, 1.0, 6.0, 60.0] {
                let p_max = 1.0 / (1.0 + th);
                for i in 0..50 {
                    let p = p_max * i as f64 / 50.0;
                    let t = system_time_moments(p, th, m).unwrap();
                    assert!(rel(uplink_rate(p, th, m), 1.0 / t.first) < 1e-10);
                    let aoi = avg_uplink_aoi(p, th, m).finite().unwrap();
                    assert!(aoi >= t.first + 1.0);
                }
            }
        }
    }

    #[test]
    fn expanded_forms_agree() {
        for &th in &[0.3, 1.2, 3.6, 10.8] {
            for &m in &[0.5, 6.0, 30.0] {
                let p_max = 1.0 / (1.0 + th);
                for i in 0..100 {
                    let p = p_max * i as f64 / 100.0;
                    let comp = avg_uplink_aoi(p, th, m).finite().unwrap();
                    let expd = avg_uplink_aoi_expanded(p, th, m).finite().unwrap();
                    assert!(rel(expd, comp) < 1e-9, "p={p} th={th} m={m}");
                    let dbl = aoi_expansion(p, th, m, AoiExpansion::Doubled).finite().unwrap();
                    assert!(rel(dbl, comp) < 1e-9);
                    let single = aoi_expansion(p, th, m, AoiExpansion::Single).finite().unwrap();
                    if p > 0.0 {
                        assert!(single > comp);
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_in_p() {
        for &th in &[1.2, 3.6, 10.8] {
            let p_max = 1.0 / (1.0 + th);
            let mut prev_aoi = 0.0;
            let mut prev_q = f64::INFINITY;
            for i in 0..200 {
                let p = p_max * i as f64 / 200.0;
                let r = evaluate(p, th, M);
                let a = r.aoi.finite().unwrap();
                assert!(a >= prev_aoi && r.q <= prev_q, "th={th} p={p}");
                prev_aoi = a;
                prev_q = r.q;
            }
        }
    }

    #[test]
    fn heavy_load_rate_coefficient() {
        let lim = asymptotes(THETA, M);
        let c = slot_moments(M).first;
        assert!(rel(lim.q_vanishing_coeff, THETA / (2.2 * 2.2 * c)) < 1e-15);
        let p_max = 1.0 / 2.2;
        for o in [1e-4, 1e-6, 1e-8] {
            let p = p_max * (1.0 - o);
            let slope = uplink_rate(p, THETA, M) / (1.0 - 2.2 * p);
            assert!(rel(slope, lim.q_vanishing_coeff) < 1e-3);
        }
    }

    #[test]
    fn weighted_sum_extremes() {
        let lim = asymptotes(THETA, M);
        let zero = weighted_sum_optimum(0.0, THETA, M).unwrap();
        assert_eq!(zero.p_star, 0.0);
        assert!(rel(zero.objective, lim.q_at_zero) < 1e-12);
        let one = weighted_sum_optimum(1.0, THETA, M).unwrap();
        let p_max = 1.0 / 2.2;
        assert!(one.p_star < p_max && p_max - one.p_star < 1e-7);
        assert!((one.objective - p_max).abs() < 1e-7);
        assert!(weighted_sum_optimum(1.5, THETA, M).is_err());
    }

    #[test]
    fn weighted_sum_matches_dense_grid() {
        for &w in &[0.05, 0.1, 0.5, 0.9] {
            let opt = weighted_sum_optimum(w, THETA, M).unwrap();
            let p_max = 1.0 / 2.2;
            let n = 100_000;
            let (mut best_p, mut best_f) = (0.0, f64::NEG_INFINITY);
            for i in 0..n {
                let p = p_max * i as f64 / n as f64;
                let f = w * p + (1.0 - w) * uplink_rate(p, THETA, M);
                if f > best_f {
                    best_f = f;
                    best_p = p;
                }
            }
            assert!((opt.p_star - best_p).abs() < 1e-5, "w={w}: {} vs {best_p}", opt.p_star);
            assert!(opt.objective >= best_f - 1e-12);
            assert_eq!(opt.q_star, uplink_rate(opt.p_star, THETA, M));
        }
    }

    // Trapezoid rule on a fine grid.
    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn erlang_density() {
        let mu = 2.0;
        for x in [0.0, 0.3, 1.0, 4.0] {
            let e = erlang_energy_pdf(x, 1, mu).unwrap();
            assert!((e - mu * (-mu * x).exp()).abs() < 1e-14);
        }
        let norm = integrate(|x| erlang_energy_pdf(x, 3, mu).unwrap(), 0.0, 50.0 / mu, 200_000);
        assert!((norm - 1.0).abs() < 1e-6);
        let mean = integrate(|x| x * erlang_energy_pdf(x, 4, mu).unwrap(), 0.0, 50.0 / mu, 200_000);
        assert!((mean - 2.0).abs() < 1e-6);
        assert!(erlang_energy_pdf(1.0, 0, mu).is_err());
        assert!(erlang_energy_pdf(-1.0, 2, mu).is_err());
        assert!(erlang_energy_pdf(1.0, 2, 0.0).is_err());
    }

    // The harvest-wait law is the Erlang crossing integral: the chance that j
    // harvests stay below one block of energy and one more crosses it.
    #[test]
    fn harvest_pmf_from_erlang_crossing() {
        let mu = M; // energy in units of one block's transmit energy
        for j in 1..12 {
            let inner = integrate(
                |x| erlang_energy_pdf(x, j, mu).unwrap() * (-mu * (1.0 - x)).exp(),
                0.0,
                1.0,
                100_000,
            );
            assert!((inner - harvest_pmf(j, M).unwrap()).abs() < 1e-8, "j={j}");
        }
    }
}
