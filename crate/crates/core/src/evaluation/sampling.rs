use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ids::{PrincipalId, QueryId, SampleId};
use crate::model::ArtifactType;

use super::{EvalError, RaterClass, Rating};

/// `(artifact_type, domain_tag)` of a response's first citation; both are
/// `None` for ungrounded responses.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stratum {
    pub artifact_type: Option<ArtifactType>,
    pub domain_tag: Option<String>,
}

impl Stratum {
    pub fn ungrounded() -> Self {
        Self {
            artifact_type: None,
            domain_tag: None,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.artifact_type, &self.domain_tag) {
            (Some(t), Some(d)) => write!(f, "{t}/{d}"),
            (Some(t), None) => write!(f, "{t}"),
            _ => f.write_str("ungrounded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCandidate {
    pub query_id: QueryId,
    pub stratum: Stratum,
}

pub type SampleItem = SampleCandidate;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSample {
    pub sample_id: SampleId,
    pub seed: u64,
    pub n: usize,
    pub allocation: Vec<(Stratum, usize)>,
    pub items: Vec<SampleItem>,
    #[serde(default)]
    pub ratings: Vec<Rating>,
}

impl ReviewSample {
    pub fn contains(&self, query: &QueryId) -> bool {
        self.items.iter().any(|i| i.query_id == *query)
    }

    pub fn record_rating(
        &mut self,
        query_id: QueryId,
        score: u8,
        rater: PrincipalId,
        rater_class: RaterClass,
        at: DateTime<Utc>,
    ) -> Result<&Rating, EvalError> {
        if !(1..=5).contains(&score) {
            return Err(EvalError::OutOfRange(score));
        }
        if !self.contains(&query_id) {
            return Err(EvalError::NotInSample(query_id));
        }
        if self
            .ratings
            .iter()
            .any(|r| r.query_id == query_id && r.rater == rater)
        {
            return Err(EvalError::Duplicate {
                query: query_id,
                rater,
            });
        }
        self.ratings.push(Rating {
            sample_id: self.sample_id,
            query_id,
            rater,
            rater_class,
            score,
            rated_at: at,
        });
        Ok(self.ratings.last().expect("just pushed"))
    }
}

/// Proportional allocation with largest-remainder rounding. Remainders are
/// compared exactly as `n * size mod total`; ties go to the larger stratum,
/// then to the smaller key.
pub fn allocate<K: Ord + Clone>(
    sizes: &BTreeMap<K, usize>,
    n: usize,
) -> Result<BTreeMap<K, usize>, EvalError> {
    let total: usize = sizes.values().sum();
    if n > total {
        return Err(EvalError::SampleTooLarge {
            requested: n,
            available: total,
        });
    }
    if total == 0 {
        return Ok(sizes.keys().map(|k| (k.clone(), 0)).collect());
    }
    let mut out: BTreeMap<K, usize> = BTreeMap::new();
    let mut order: Vec<(&K, usize, usize)> = Vec::with_capacity(sizes.len());
    for (k, &size) in sizes {
        let scaled = n * size;
        out.insert(k.clone(), scaled / total);
        order.push((k, scaled % total, size));
    }
    let assigned: usize = out.values().sum();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(b.0)));
    for (k, _, _) in order.into_iter().take(n - assigned) {
        *out.get_mut(k).expect("key present") += 1;
    }
    Ok(out)
}

pub fn stratified_sample(
    population: &[SampleCandidate],
    n: usize,
    seed: u64,
    sample_id: SampleId,
) -> Result<ReviewSample, EvalError> {
    let mut strata: BTreeMap<Stratum, Vec<QueryId>> = BTreeMap::new();
    for c in population {
        strata.entry(c.stratum.clone()).or_default().push(c.query_id);
    }
    for members in strata.values_mut() {
        members.sort();
        members.dedup();
    }
    let sizes = strata.iter().map(|(k, v)| (k.clone(), v.len())).collect();
    let allocation = allocate(&sizes, n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n);
    for (stratum, members) in &strata {
        let m = allocation[stratum];
        let mut picks = rand::seq::index::sample(&mut rng, members.len(), m).into_vec();
        picks.sort_unstable();
        items.extend(picks.into_iter().map(|i| SampleItem {
            query_id: members[i],
            stratum: stratum.clone(),
        }));
    }
    Ok(ReviewSample {
        sample_id,
        seed,
        n,
        allocation: allocation.into_iter().collect(),
        items,
        ratings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn sizes(pairs: &[(&'static str, usize)]) -> BTreeMap<&'static str, usize> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn eight_two_of_five() {
        let got = allocate(&sizes(&[("A", 8), ("B", 2)]), 5).unwrap();
        assert_eq!(got, sizes(&[("A", 4), ("B", 1)]));
    }

    #[test]
    fn seven_two_one_of_five() {
        // Quotas 3.5, 1.0, 0.5: floors give 4, the tied half-remainders
        // of A and C go to the larger stratum A.
        let got = allocate(&sizes(&[("A", 7), ("B", 2), ("C", 1)]), 5).unwrap();
        assert_eq!(got, sizes(&[("A", 4), ("B", 1), ("C", 0)]));
    }

    #[test]
    fn too_large() {
        assert_eq!(
            allocate(&sizes(&[("A", 2)]), 3),
            Err(EvalError::SampleTooLarge {
                requested: 3,
                available: 2
            })
        );
    }

    fn population(n: u128) -> Vec<SampleCandidate> {
        (0..n)
            .map(|i| SampleCandidate {
                query_id: QueryId::from_u128(i),
                stratum: Stratum {
                    artifact_type: Some(ArtifactType::ALL[(i % 4) as usize]),
                    domain_tag: Some(if i % 3 == 0 { "grid" } else { "turbines" }.into()),
                },
            })
            .collect()
    }

    #[test]
    fn same_seed_same_sample() {
        let pop = population(40);
        let a = stratified_sample(&pop, 12, 7, SampleId::from_u128(1)).unwrap();
        let b = stratified_sample(&pop, 12, 7, SampleId::from_u128(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.items.len(), 12);
        let c = stratified_sample(&pop, 12, 8, SampleId::from_u128(1)).unwrap();
        assert_ne!(a.items, c.items);
    }

    #[test]
    fn rating_rules() {
        let pop = population(4);
        let mut s = stratified_sample(&pop, 4, 1, SampleId::from_u128(1)).unwrap();
        let at = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
        let q = pop[0].query_id;
        let rater = PrincipalId::new("r");
        assert_eq!(
            s.record_rating(q, 6, rater.clone(), RaterClass::Expert, at),
            Err(EvalError::OutOfRange(6))
        );
        assert_eq!(
            s.record_rating(q, 0, rater.clone(), RaterClass::Expert, at),
            Err(EvalError::OutOfRange(0))
        );
        s.record_rating(q, 5, rater.clone(), RaterClass::Expert, at).unwrap();
        assert!(matches!(
            s.record_rating(q, 4, rater.clone(), RaterClass::Expert, at),
            Err(EvalError::Duplicate { .. })
        ));
        assert_eq!(
            s.record_rating(QueryId::from_u128(99), 4, rater, RaterClass::Expert, at),
            Err(EvalError::NotInSample(QueryId::from_u128(99)))
        );
    }

    proptest! {
        #[test]
        fn allocation_sums_and_caps(raw in prop::collection::vec(0usize..30, 1..8), frac in 0.0f64..=1.0) {
            let sizes: BTreeMap<usize, usize> = raw.iter().copied().enumerate().collect();
            let total: usize = raw.iter().sum();
            let n = (total as f64 * frac).floor() as usize;
            let got = allocate(&sizes, n).unwrap();
            prop_assert_eq!(got.values().sum::<usize>(), n);
            for (k, v) in &got {
                prop_assert!(*v <= sizes[k]);
            }
        }

        #[test]
        fn sample_draws_from_population(count in 1u128..60, seed in any::<u64>()) {
            let pop = population(count);
            let n = (count / 2) as usize;
            let s = stratified_sample(&pop, n, seed, SampleId::from_u128(1)).unwrap();
            prop_assert_eq!(s.items.len(), n);
            let mut ids: Vec<_> = s.items.iter().map(|i| i.query_id).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), n);
            for item in &s.items {
                prop_assert!(pop.contains(item));
            }
        }
    }
}
