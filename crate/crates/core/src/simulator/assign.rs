//! Random assignment of subjects to arms and groups.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::rng::{substream, Stream};
use crate::error::{Error, Result};
use crate::game::Treatment;

/// What to do when the subject count does not fill equal arms of full groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemainderPolicy {
    /// Require `n` divisible by `arms * group_size`.
    #[default]
    Reject,
    /// Spread groups over arms as evenly as possible; leftover subjects form
    /// one smaller final group.
    Unbalanced,
}

/// One subject's arm and group. Ids are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub subject_id: u32,
    pub treatment: Treatment,
    pub group_id: u32,
}

/// Shuffles the arm labels over groups, then fills groups in order from a
/// random permutation of subjects. Output is sorted by subject id.
pub fn randomize(
    n_subjects: usize,
    arms: &[Treatment],
    group_size: usize,
    seed: u64,
    policy: RemainderPolicy,
) -> Result<Vec<Assignment>> {
    if n_subjects == 0 || arms.is_empty() || group_size == 0 {
        return Err(Error::invalid("randomize needs subjects, arms and a positive group size"));
    }
    let mut distinct = arms.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() != arms.len() {
        return Err(Error::invalid("arms must be distinct"));
    }
    let block = arms.len() * group_size;
    if policy == RemainderPolicy::Reject && !n_subjects.is_multiple_of(block) {
        return Err(Error::invalid(format!(
            "{n_subjects} subjects do not split into {} arms of groups of {group_size}; \
             use the unbalanced remainder policy",
            arms.len()
        )));
    }
    let n_groups = n_subjects.div_ceil(group_size);
    let mut labels: Vec<Treatment> = (0..n_groups).map(|g| arms[g % arms.len()]).collect();
    labels.shuffle(&mut substream(seed, Stream::Assignment, 0));
    let mut order: Vec<usize> = (0..n_subjects).collect();
    order.shuffle(&mut substream(seed, Stream::Permutation, 0));

    let mut out = vec![None; n_subjects];
    for (slot, &subject) in order.iter().enumerate() {
        let g = slot / group_size;
        out[subject] =
            Some(Assignment { subject_id: subject as u32 + 1, treatment: labels[g], group_id: g as u32 + 1 });
    }
    Ok(out.into_iter().map(|a| a.expect("every subject placed")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn counts(a: &[Assignment]) -> BTreeMap<Treatment, usize> {
        let mut m = BTreeMap::new();
        for x in a {
            *m.entry(x.treatment).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn balanced_arms_and_full_groups() {
        let a = randomize(1500, &Treatment::ALL, 5, 7, RemainderPolicy::Reject).unwrap();
        assert!(counts(&a).values().all(|&c| c == 375));
        let mut groups: BTreeMap<u32, Vec<Treatment>> = BTreeMap::new();
        for x in &a {
            groups.entry(x.group_id).or_default().push(x.treatment);
        }
        assert_eq!(groups.len(), 300);
        assert!(groups.values().all(|g| g.len() == 5 && g.iter().all(|t| *t == g[0])));
        assert_eq!(a, randomize(1500, &Treatment::ALL, 5, 7, RemainderPolicy::Reject).unwrap());
        assert_ne!(a, randomize(1500, &Treatment::ALL, 5, 8, RemainderPolicy::Reject).unwrap());
    }

    #[test]
    fn minimal_case_one_group_per_arm() {
        let a = randomize(20, &Treatment::ALL, 5, 1, RemainderPolicy::Reject).unwrap();
        assert!(counts(&a).values().all(|&c| c == 5));
        let ids: std::collections::BTreeSet<u32> = a.iter().map(|x| x.group_id).collect();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn remainder_needs_a_policy() {
        assert!(randomize(22, &Treatment::ALL, 5, 1, RemainderPolicy::Reject).is_err());
        let a = randomize(22, &Treatment::ALL, 5, 1, RemainderPolicy::Unbalanced).unwrap();
        assert_eq!(a.len(), 22);
        let last = a.iter().filter(|x| x.group_id == 5).count();
        assert_eq!(last, 2);
        assert!(randomize(10, &[Treatment::RR, Treatment::RR], 5, 1, RemainderPolicy::Reject).is_err());
    }
}
