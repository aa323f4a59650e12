//! Risk-sensitive reinforcement learning on finite MDPs.
//!
//! The cumulative reward of an episode splits, by the Doob decomposition,
//! into a predictable part driven by state transitions and a martingale
//! ("chaotic") part made of the reward surprises `R_{t+1} − R̄(s_t, a_t)`.
//! The algorithms here penalise the quadratic variation of the chaotic part,
//! which turns mean-variance control into an ordinary Bellman problem with
//! the modified reward `R − (β/2)(R − R̄)²`.
//!
//! * [`mdp`] and [`env`]: tabular MDPs and the three bundled environments.
//! * [`estimator`]: online estimates of `R̄`.
//! * [`doob`]: per-episode decomposition.
//! * [`value`]: risk-adjusted Q-learning, R-learning and exact value iteration.
//! * [`pg`]: softmax policy-gradient and actor-critic methods.
//! * [`diagnostics`]: oracles for the identities the methods rely on.
//!
//! ```
//! use chaotic_rl::env::RegimeSwitchConfig;
//! use chaotic_rl::value::modified_reward_value_iteration;
//!
//! // Noisy action 1 loses its +2 edge in state 0 once (β/2)σ² > 2.
//! let mdp = RegimeSwitchConfig::toy(1.0, 10).build_mdp()?;
//! let vi = modified_reward_value_iteration(&mdp, 6.0, 1e-12, 1000)?;
//! assert_eq!(vi.policy, vec![0, 0]);
//! # Ok::<(), chaotic_rl::Error>(())
//! ```

pub mod diagnostics;
pub mod doob;
pub mod env;
pub mod error;
pub mod estimator;
pub mod io;
pub mod mdp;
pub mod pg;
pub mod rng;
pub mod value;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/decomposition.md")]
    struct Decomposition;
    #[doc = include_str!("../../../book/src/chaotic-variance.md")]
    struct ChaoticVariance;
    #[doc = include_str!("../../../book/src/value-based.md")]
    struct ValueBased;
    #[doc = include_str!("../../../book/src/policy-gradient.md")]
    struct PolicyGradient;
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    struct Diagnostics;
}
