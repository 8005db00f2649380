//! Mixed-radix indexing of joint-action spaces.
//!
//! Profile index `0` is every agent at choice 0; agent 0 is the most
//! significant digit, so increasing indices walk profiles lexicographically
//! by agent then action index.

use crate::error::{GameError, Result};
use crate::game::{Action, GameInstance, JointAction};

/// Default cap on `Π_i |A_i|` for exhaustive routines.
pub const DEFAULT_PROFILE_CAP: u128 = 10_000_000;

#[derive(Clone, Debug)]
pub(crate) struct ProfileSpace {
    /// Candidate action indices per agent.
    pub choices: Vec<Vec<usize>>,
    pub total: u64,
}

impl ProfileSpace {
    pub fn new(choices: Vec<Vec<usize>>, cap: u128) -> Result<Self> {
        let size = choices
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
        if size > cap {
            return Err(GameError::SizeCap { size, cap });
        }
        Ok(ProfileSpace {
            choices,
            total: size as u64,
        })
    }

    /// Every action of every agent.
    pub fn full(game: &GameInstance, cap: u128) -> Result<Self> {
        Self::new(
            game.action_sets()
                .iter()
                .map(|s| (0..s.len()).collect())
                .collect(),
            cap,
        )
    }

    /// Writes action indices of profile `idx` into `out`.
    pub fn decode(&self, mut idx: u64, out: &mut [usize]) {
        for (slot, c) in out.iter_mut().zip(&self.choices).rev() {
            let radix = c.len() as u64;
            *slot = c[(idx % radix) as usize];
            idx /= radix;
        }
    }

    /// Contiguous index ranges for parallel evaluation.
    pub fn shards(&self, shard_size: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut lo = 0;
        while lo < self.total {
            let hi = (lo + shard_size).min(self.total);
            out.push((lo, hi));
            lo = hi;
        }
        out
    }
}

pub(crate) const SHARD_SIZE: u64 = 4096;

pub(crate) fn view<'g>(game: &'g GameInstance, idx: &[usize]) -> Vec<&'g Action> {
    idx.iter()
        .enumerate()
        .map(|(i, &k)| &game.actions(i)[k])
        .collect()
}

pub(crate) fn to_joint(game: &GameInstance, idx: &[usize]) -> JointAction {
    JointAction(
        idx.iter()
            .enumerate()
            .map(|(i, &k)| game.actions(i)[k].clone())
            .collect(),
    )
}

/// Action indices of an admissible profile.
pub(crate) fn to_indices(game: &GameInstance, a: &JointAction) -> Result<Vec<usize>> {
    a.actions()
        .iter()
        .enumerate()
        .map(|(i, act)| {
            game.actions(i)
                .iter()
                .position(|x| x == act)
                .ok_or_else(|| {
                    GameError::InvalidProfile(format!(
                        "agent {i} action {act} is not in its action set"
                    ))
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_is_lexicographic() {
        let s = ProfileSpace::new(vec![vec![0, 1], vec![0, 1, 2]], 100).unwrap();
        assert_eq!(s.total, 6);
        let mut out = vec![0; 2];
        let seq: Vec<Vec<usize>> = (0..6)
            .map(|k| {
                s.decode(k, &mut out);
                out.clone()
            })
            .collect();
        assert_eq!(
            seq,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
    }

    #[test]
    fn cap_is_enforced() {
        let err = ProfileSpace::new(vec![vec![0, 1]; 10], 1000).unwrap_err();
        assert_eq!(
            err,
            GameError::SizeCap {
                size: 1024,
                cap: 1000
            }
        );
    }
}
