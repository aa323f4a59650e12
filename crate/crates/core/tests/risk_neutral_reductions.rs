//! With β = 0 every risk-adjusted learner must perform the same floating-point
//! operations as its textbook risk-neutral counterpart on the same random
//! streams.

mod support;

use chaotic_rl::pg::{train_actor_critic, ActorCriticConfig};

#[test]
fn q_learning_reduces_to_standard_q_learning() {
    support::check_q_learning(60_000, 17).unwrap();
}

#[test]
fn reinforce_reduces_to_plain_reinforce() {
    support::check_reinforce(20, 5).unwrap();
}

#[test]
fn cvar_with_dead_indicator_reduces_to_plain_reinforce() {
    support::check_cvar_dead_indicator(10, 6).unwrap();
}

#[test]
fn episodic_actor_critic_reduces_to_advantage_actor_critic() {
    support::check_episodic_actor_critic(5_000, 21).unwrap();
}

#[test]
fn average_actor_critic_reduces_to_average_reward_actor_critic() {
    support::check_average_actor_critic(20_000, 33).unwrap();
}

#[test]
fn risk_aversion_changes_the_updates() {
    let mdp = support::continuing_chain();
    let config = ActorCriticConfig { n_steps: 2_000, ..Default::default() };
    let neutral = train_actor_critic(&mdp, &config, 0.0, 33).unwrap();
    let averse = train_actor_critic(&mdp, &config, 1.0, 33).unwrap();
    assert_ne!(neutral.policy.theta(), averse.policy.theta());
}
