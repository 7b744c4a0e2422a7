use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub id: String,
    pub p_hat: f64,
    pub rank: usize,
}

/// Items ordered by descending posterior probability with competition
/// ("1224") ranks: `rank = 1 + #{items with strictly larger p_hat}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// Sorted by rank, ties in input order.
    pub entries: Vec<RankEntry>,
    pub tied_at_one: usize,
}

impl RankTable {
    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.rank)
    }
}

pub fn rank_items(ids: &[String], p_hat: &[f64]) -> RankTable {
    assert_eq!(ids.len(), p_hat.len(), "one probability per id");
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| p_hat[b].total_cmp(&p_hat[a]).then(a.cmp(&b)));
    let mut entries = Vec::with_capacity(ids.len());
    let mut rank = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos == 0 || p_hat[i] != p_hat[order[pos - 1]] {
            rank = pos + 1;
        }
        entries.push(RankEntry {
            id: ids[i].clone(),
            p_hat: p_hat[i],
            rank,
        });
    }
    let tied_at_one = entries.iter().filter(|e| e.rank == 1).count();
    RankTable { entries, tied_at_one }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    #[test]
    fn ties_share_min_rank() {
        let t = rank_items(&ids(3), &[1.0, 0.3, 1.0]);
        assert_eq!(t.rank_of("g0"), Some(1));
        assert_eq!(t.rank_of("g2"), Some(1));
        assert_eq!(t.rank_of("g1"), Some(3));
        assert_eq!(t.tied_at_one, 2);
    }

    #[test]
    fn distinct_values_give_a_permutation() {
        let p = [0.2, 0.9, 0.5, 0.1];
        let t = rank_items(&ids(4), &p);
        let mut ranks: Vec<usize> = t.entries.iter().map(|e| e.rank).collect();
        ranks.sort();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
        assert_eq!(t.entries[0].id, "g1");
    }
}
