//! Exact sampling from a truncated binomial distribution.
//!
//! The target law is the binomial `B(N, p)` conditioned on an integer
//! interval `I = [mu_bar - delta_minus, mu_bar + delta_plus]` around the
//! mean, where the interval is wide enough that the discarded tail mass is
//! below the caller's `eps`. A lazy Metropolis-Hastings walk on `I` has this
//! truncated law as its stationary distribution, and running the monotone
//! coupling of two copies from the interval's endpoints until they meet
//! yields a draw that is *exactly* stationary: the only distributional error
//! in the whole pipeline is the quantified truncation.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{self, Rational};
use crate::randomness::BitSource;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("number of trials must be at least 1")]
    TrialsTooSmall,
    #[error("success probability must lie strictly between 0 and 1")]
    ProbabilityOutOfRange,
    #[error("eps must lie strictly between 0 and 1")]
    EpsilonOutOfRange,
    #[error("state {0} is outside the sampling interval")]
    StateOutsideInterval(BigInt),
    #[error("coupled_step requires x != y")]
    AlreadyCoalesced,
}

/// Everything the walk needs, precomputed once per `(N, p, eps)`.
///
/// Built only through [`build_spec`], which establishes the invariants:
/// `mu = N*p`, `mu_bar` is `floor(mu)` or `ceil(mu)` depending on the
/// fractional part, `delta^2` dominates `4*N*max(p, 4B/N)*B` for
/// `B = ceil(log2(2/eps))`, and `[lo, hi]` stays inside `[0, N]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedBinomialSpec {
    pub n_trials: BigInt,
    pub p: Rational,
    pub eps: Rational,
    pub mu: Rational,
    pub xi: Rational,
    pub mu_bar: BigInt,
    pub delta: BigInt,
    pub delta_minus: BigInt,
    pub delta_plus: BigInt,
    pub lo: BigInt,
    pub hi: BigInt,
    /// `u64` mirror of the quantities above when they fit, enabling an
    /// allocation-free acceptance test in the walk's hot loop.
    small: Option<SmallSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SmallSpec {
    n: u64,
    /// p = pn/pd, 1 - p = qn/pd.
    pn: u64,
    qn: u64,
    mu_bar: u64,
    lo: u64,
    hi: u64,
}

const SMALL_LIMIT: u64 = 1 << 62;

/// Two coupled copies of the walk, kept ordered `y <= x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingState {
    pub x: BigInt,
    pub y: BigInt,
    pub steps: u64,
    /// `L = delta_plus + delta_minus`, the largest gap the coupling can see.
    pub gap_bound: BigInt,
}

/// Computes the sampling interval and walk parameters for `B(N, p)` with
/// truncation error below `eps`.
///
/// All magnitude bounds are rounded up to powers of two so the square root
/// in the interval radius is exact: `delta = 2^ceil(e/2)` where `2^e` bounds
/// the product `4 * N * max(p, 4B/N) * B` from above.
pub fn build_spec(
    n_trials: &BigInt,
    p: &Rational,
    eps: &Rational,
) -> Result<TruncatedBinomialSpec, SpecError> {
    if n_trials < &BigInt::one() {
        return Err(SpecError::TrialsTooSmall);
    }
    if !p.is_positive() || *p >= Rational::one() {
        return Err(SpecError::ProbabilityOutOfRange);
    }
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(SpecError::EpsilonOutOfRange);
    }
    let n_rat = Rational::from_integer(n_trials.clone());
    let mu = &n_rat * p;
    let xi = &mu - mu.floor();
    let one_minus_p = Rational::one() - p;
    let mu_bar = if xi <= one_minus_p {
        mu.floor().to_integer()
    } else {
        mu.ceil().to_integer()
    };

    // B is an integer upper bound on ln(2/eps); every factor of the radius
    // bound is then rounded up to a power of two.
    let b = arith::ln_upper_bound(&(arith::ratio(2, 1) / eps)).expect("2/eps > 1");
    let b_rat = Rational::from_integer(BigInt::from(b));
    let four_b_over_n = arith::ratio(4, 1) * &b_rat / &n_rat;
    let spread = std::cmp::max(p.clone(), four_b_over_n);
    let e = 2
        + arith::pow2_ceil_exp(&n_rat).expect("N >= 1")
        + arith::pow2_ceil_exp(&spread).expect("positive")
        + arith::pow2_ceil_exp(&b_rat).expect("B >= 1");
    let half = e.div_euclid(2) + (e.rem_euclid(2) != 0) as i64;
    debug_assert!(half >= 1);
    let delta = BigInt::one() << (half as u64);

    let delta_minus = std::cmp::min(delta.clone(), mu_bar.clone());
    let delta_plus = std::cmp::min(delta.clone(), n_trials - &mu_bar);
    let lo = &mu_bar - &delta_minus;
    let hi = &mu_bar + &delta_plus;

    let small = match (
        n_trials.to_u64(),
        p.numer().to_u64(),
        p.denom().to_u64(),
        mu_bar.to_u64(),
    ) {
        (Some(n), Some(pn), Some(pd), Some(mb)) if n <= SMALL_LIMIT && pd <= SMALL_LIMIT => {
            Some(SmallSpec {
                n,
                pn,
                qn: pd - pn,
                mu_bar: mb,
                lo: lo.to_u64().expect("lo <= N"),
                hi: hi.to_u64().expect("hi <= N"),
            })
        }
        _ => None,
    };

    Ok(TruncatedBinomialSpec {
        n_trials: n_trials.clone(),
        p: p.clone(),
        eps: eps.clone(),
        mu,
        xi,
        mu_bar,
        delta,
        delta_minus,
        delta_plus,
        lo,
        hi,
        small,
    })
}

impl TruncatedBinomialSpec {
    pub fn contains(&self, k: &BigInt) -> bool {
        &self.lo <= k && k <= &self.hi
    }

    fn check_state(&self, k: &BigInt) -> Result<(), SpecError> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(SpecError::StateOutsideInterval(k.clone()))
        }
    }

    /// Width of the starting gap, `delta_plus + delta_minus`.
    pub fn gap_bound(&self) -> BigInt {
        &self.delta_plus + &self.delta_minus
    }
}

/// Acceptance ratio for the upward move from `k`: zero at the top of the
/// interval, one below `mu_bar`, and `((N-k)/(k+1)) * (p/(1-p))` in between.
pub fn alpha_plus(spec: &TruncatedBinomialSpec, k: &BigInt) -> Result<Rational, SpecError> {
    spec.check_state(k)?;
    if *k == spec.hi {
        Ok(Rational::zero())
    } else if *k < spec.mu_bar {
        Ok(Rational::one())
    } else {
        let pn = spec.p.numer();
        let qn = spec.p.denom() - pn;
        Ok(Rational::new(
            (&spec.n_trials - k) * pn,
            (k + 1u32) * qn,
        ))
    }
}

/// Acceptance ratio for the downward move from `k`: zero at the bottom of
/// the interval, one above `mu_bar`, and `(k/(N-k+1)) * ((1-p)/p)` in
/// between.
pub fn alpha_minus(spec: &TruncatedBinomialSpec, k: &BigInt) -> Result<Rational, SpecError> {
    spec.check_state(k)?;
    if *k == spec.lo {
        Ok(Rational::zero())
    } else if *k > spec.mu_bar {
        Ok(Rational::one())
    } else {
        let pn = spec.p.numer();
        let qn = spec.p.denom() - pn;
        Ok(Rational::new(
            k * qn,
            (&spec.n_trials - k + 1u32) * pn,
        ))
    }
}

/// Decides the up-proposal from `k` with probability `alpha_plus(k)`,
/// consuming bits only when the ratio is strictly between 0 and 1.
fn accept_up(spec: &TruncatedBinomialSpec, k: &BigInt, src: &mut BitSource) -> bool {
    if let Some(s) = &spec.small {
        let k = k.to_u64().expect("state fits with spec");
        if k == s.hi {
            return false;
        }
        if k < s.mu_bar {
            return true;
        }
        let num = (s.n - k) as u128 * s.pn as u128;
        let den = (k + 1) as u128 * s.qn as u128;
        return src.bernoulli_ratio_u128(num, den);
    }
    if *k == spec.hi {
        return false;
    }
    if *k < spec.mu_bar {
        return true;
    }
    let pn = spec.p.numer();
    let qn = spec.p.denom() - pn;
    let num = (&spec.n_trials - k) * pn;
    let den = (k + 1u32) * qn;
    src.bernoulli_ratio(&num, &den).expect("alpha in [0,1]")
}

/// Decides the down-proposal from `k` with probability `alpha_minus(k)`.
fn accept_down(spec: &TruncatedBinomialSpec, k: &BigInt, src: &mut BitSource) -> bool {
    if let Some(s) = &spec.small {
        let k = k.to_u64().expect("state fits with spec");
        if k == s.lo {
            return false;
        }
        if k > s.mu_bar {
            return true;
        }
        let num = k as u128 * s.qn as u128;
        let den = (s.n - k + 1) as u128 * s.pn as u128;
        return src.bernoulli_ratio_u128(num, den);
    }
    if *k == spec.lo {
        return false;
    }
    if *k > spec.mu_bar {
        return true;
    }
    let pn = spec.p.numer();
    let qn = spec.p.denom() - pn;
    let num = k * qn;
    let den = (&spec.n_trials - k + 1u32) * pn;
    src.bernoulli_ratio(&num, &den).expect("alpha in [0,1]")
}

/// One step of the lazy Metropolis walk: hold with probability 1/2,
/// otherwise propose up or down with probability 1/4 each and accept with
/// the corresponding ratio.
///
/// Branches are driven by raw bits in a fixed order (first bit set = move,
/// second bit clear = up), so runs are replayable.
pub fn chain_step(
    spec: &TruncatedBinomialSpec,
    k: &BigInt,
    src: &mut BitSource,
) -> Result<BigInt, SpecError> {
    spec.check_state(k)?;
    if !src.next_bit() {
        return Ok(k.clone());
    }
    let up = !src.next_bit();
    let accepted = if up {
        accept_up(spec, k, src)
    } else {
        accept_down(spec, k, src)
    };
    Ok(match (accepted, up) {
        (true, true) => k + 1u32,
        (true, false) => k - 1u32,
        (false, _) => k.clone(),
    })
}

/// One step of the monotone coupling: a fair bit picks which coordinate
/// attempts a move (clear = lower copy `y`, set = upper copy `x`), the other
/// coordinate stays put. Order `y <= x` is preserved and the gap changes by
/// at most one.
pub fn coupled_step(
    spec: &TruncatedBinomialSpec,
    state: CouplingState,
    src: &mut BitSource,
) -> Result<CouplingState, SpecError> {
    if state.x == state.y {
        return Err(SpecError::AlreadyCoalesced);
    }
    let CouplingState {
        mut x,
        mut y,
        steps,
        gap_bound,
    } = state;
    let move_x = src.next_bit();
    let target = if move_x { &mut x } else { &mut y };
    let up = !src.next_bit();
    let accepted = if up {
        accept_up(spec, target, src)
    } else {
        accept_down(spec, target, src)
    };
    if accepted {
        if up {
            *target += 1u32;
        } else {
            *target -= 1u32;
        }
    }
    debug_assert!(spec.lo <= y && y <= x && x <= spec.hi);
    debug_assert!(&x - &y <= gap_bound);
    Ok(CouplingState {
        x,
        y,
        steps: steps + 1,
        gap_bound,
    })
}

/// Draws one value distributed exactly as the truncated binomial, by running
/// the coupling from the interval endpoints to coalescence. Returns the
/// value and the number of coupled steps taken.
///
/// Las Vegas: the step count is random but the output law is exact.
pub fn sample_truncated_binomial(
    spec: &TruncatedBinomialSpec,
    src: &mut BitSource,
) -> (BigInt, u64) {
    let mut state = CouplingState {
        x: spec.hi.clone(),
        y: spec.lo.clone(),
        steps: 0,
        gap_bound: spec.gap_bound(),
    };
    while state.x != state.y {
        state = coupled_step(spec, state, src).expect("x != y checked");
    }
    (state.x, state.steps)
}
