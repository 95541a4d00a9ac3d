//! The three orders of reflexion.
//!
//! First order scores each interaction against the constitution. Second
//! order rewrites skill prompts and judges the rewrite with a validator that
//! will say `insufficient_data` rather than guess. Third order writes a
//! running diagnosis of whether the second order is working.

mod adr;
mod constitution;
mod improve;
mod meta;
mod scoring;
mod skills;

pub use adr::{decide_adr, list_adrs, propose_adr, Adr, AdrDecision, AdrProposal, AdrStatus};
pub use constitution::{install_default_constitution, load_constitution, Constitution, Principle};
pub use improve::{
    apply_revision, assess, find_revision, run_improve, validate_improve, verdicts, Assessment,
    ImproveEpisode, SkillRevision,
};
pub use meta::{has_meta_entry, meta_entries, write_meta_reflexion, MetaReflexionEntry};
pub use scoring::{
    episode_mean, episode_scores, parse_scores, score_episode, score_interaction, scores_by_interaction,
    ConstitutionScore, EpisodeScore,
};
pub use skills::{list_skills, load_skill, record_skill_episode, register_skill, unauthorised_resets, Epoch, Skill};

pub(crate) use scoring::unfence;
