//! Success-run probability theory: how long an attacker must keep injecting
//! before r consecutive frames slip past the defense, and how likely that is
//! within an n-frame session.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Probability one injected frame is flagged by the width verifier:
/// its fixed width must miss every one of the d_max+1 windowed requests.
pub fn p_detection(bits: u8, d_max: usize) -> f64 {
    p_protection(bits).powi(d_max as i32 + 1)
}

/// Probability one injected frame displays distorted: the attacker's width
/// guess misses the current request drawn from 2^bits equiprobable values.
pub fn p_protection(bits: u8) -> f64 {
    1.0 - 0.5f64.powi(bits as i32)
}

fn pow_r(p: f64, r: u64) -> f64 {
    if r <= i32::MAX as u64 {
        p.powi(r as i32)
    } else {
        p.powf(r as f64)
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Alternating series for the run-free generating quantity. Classical
/// binomial placement C(n - l*r, l); terms vanish once l exceeds n - l*r.
fn beta_summation(n: u64, r: u64, p: f64) -> f64 {
    let x = (1.0 - p) * pow_r(p, r);
    let mut total = 0.0;
    let mut sign = 1.0;
    let mut xl = 1.0;
    let mut l = 0u64;
    while l.saturating_mul(r) <= n && n - l * r >= l {
        total += sign * binomial(n - l * r, l) * xl;
        sign = -sign;
        xl *= x;
        l += 1;
    }
    total
}

fn p_run_closed(n: u64, r: u64, p: f64) -> f64 {
    1.0 - beta_summation(n, r, p) + pow_r(p, r) * beta_summation(n - r, r, p)
}

/// No-run probability by the stable linear recurrence
/// Q_i = Q_{i-1} - (1-p) p^r Q_{i-r-1}, Q_j = 1 below r, Q_r = 1 - p^r.
fn p_run_recurrence(n: u64, r: u64, p: f64) -> f64 {
    let rp = pow_r(p, r);
    let x = (1.0 - p) * rp;
    let m = (r + 1) as usize;
    let mut ring = vec![1.0f64; m];
    let mut q = 1.0 - rp;
    ring[r as usize % m] = q;
    for i in (r + 1)..=n {
        let q_old = ring[(i - r - 1) as usize % m];
        q -= x * q_old;
        ring[i as usize % m] = q;
    }
    1.0 - q
}

/// Largest n handled by the alternating summation. Beyond this the series'
/// terms outgrow the result and cancellation destroys the answer, so the
/// recurrence route takes over; both routes agree to ~1e-12 on the overlap.
const SUMMATION_LIMIT: u64 = 64;

/// Probability of at least one run of r consecutive successes within n
/// independent trials of success probability p.
pub fn p_run(n: u64, r: u64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p {p} outside [0, 1]");
    if r == 0 {
        return 1.0;
    }
    if r > n {
        return 0.0;
    }
    let raw = if n <= SUMMATION_LIMIT {
        p_run_closed(n, r, p)
    } else {
        p_run_recurrence(n, r, p)
    };
    raw.clamp(0.0, 1.0)
}

/// Per-outcome census of n Bernoulli trials: counts[k][m] is the number of
/// the 2^n outcome strings with exactly k successes and longest success run
/// exactly m. Exhaustive; n is capped to keep it so.
pub fn enumeration_census(n: u32) -> Vec<Vec<u64>> {
    assert!(n <= 24, "census enumerates 2^n outcomes; n={n} is past the cap");
    let size = n as usize + 1;
    let mut counts = vec![vec![0u64; size]; size];
    for mask in 0u32..(1u32 << n) {
        let k = mask.count_ones() as usize;
        let mut m = mask;
        let mut run = 0usize;
        while m != 0 {
            m &= m << 1;
            run += 1;
        }
        counts[k][run] += 1;
    }
    counts
}

/// Exact run probability from a census: total probability of outcomes whose
/// longest run reaches r.
pub fn census_run_prob(census: &[Vec<u64>], n: u32, r: u64, p: f64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    if r > n as u64 {
        return 0.0;
    }
    let q = 1.0 - p;
    let mut total = 0.0;
    for (k, row) in census.iter().enumerate() {
        let hits: u64 = row.iter().skip(r as usize).sum();
        if hits > 0 {
            total += hits as f64 * p.powi(k as i32) * q.powi((n as usize - k) as i32);
        }
    }
    total
}

/// Independent oracle for p_run: full enumeration of outcome strings.
pub fn brute_force_run_prob(n: u32, r: u64, p: f64) -> f64 {
    census_run_prob(&enumeration_census(n), n, r, p)
}

/// Expected number of trials until the first run of r successes:
/// sum of p^-l for l = 1..=r. Classical; the variant summing from l = 0
/// overshoots every Monte Carlo measurement by exactly 1.
pub fn expected_attempts(r: u64, p: f64) -> f64 {
    if r == 0 {
        return 0.0;
    }
    if p <= 0.0 {
        return f64::INFINITY;
    }
    let x = 1.0 / p;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..r {
        term *= x;
        sum += term;
        if !sum.is_finite() {
            return f64::INFINITY;
        }
    }
    sum
}

/// Measured mean trials to the first r-run, over seeded Bernoulli episodes.
pub fn mc_expected_attempts(r: u64, p: f64, episodes: u64, seed: u64) -> f64 {
    assert!(episodes > 0, "need at least one episode");
    if r == 0 {
        return 0.0;
    }
    assert!(p > 0.0, "an r-run never arrives at p = 0");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total: u128 = 0;
    for _ in 0..episodes {
        let mut streak = 0u64;
        let mut attempts = 0u64;
        while streak < r {
            attempts += 1;
            if rng.gen::<f64>() < p {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        total += attempts as u128;
    }
    total as f64 / episodes as f64
}

/// Expected seconds until the first r-run at the given frame rate.
pub fn expected_time(r: u64, p: f64, fps: u32) -> f64 {
    if fps == 0 {
        return f64::INFINITY;
    }
    expected_attempts(r, p) / fps as f64
}

/// Consecutive sign detections needed before the vehicle reacts, given the
/// reaction time in seconds.
pub fn n_stop(t_stop_seconds: f64, fps: u32) -> u64 {
    assert!(t_stop_seconds >= 0.0 && t_stop_seconds.is_finite());
    (t_stop_seconds * fps as f64).ceil() as u64
}

/// Parameter bundle for one run-probability query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Per-trial success probability.
    pub p: f64,
    /// Trials available (frames in the session).
    pub n: u64,
    /// Required consecutive successes.
    pub r: u64,
    pub fps: u32,
}

impl RunStats {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(AnalyticsError::Param(format!("p {} outside [0, 1]", self.p)));
        }
        if self.r > self.n {
            return Err(AnalyticsError::Param(format!(
                "run length {} exceeds trial count {}",
                self.r, self.n
            )));
        }
        if self.fps == 0 {
            return Err(AnalyticsError::Param("fps must be positive".into()));
        }
        Ok(())
    }

    pub fn success_probability(&self) -> f64 {
        p_run(self.n, self.r, self.p)
    }

    pub fn expected_attempts(&self) -> f64 {
        expected_attempts(self.r, self.p)
    }

    pub fn expected_seconds(&self) -> f64 {
        expected_time(self.r, self.p, self.fps)
    }
}
