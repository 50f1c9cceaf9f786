//! Destroy operators. Both honour an `allowed` predicate: customers for
//! which it returns false are never removed.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::DestroyError;
use crate::instance::{Instance, NodeId};
use crate::local_search::NeighborLists;
use crate::solution::{PartialSolution, Solution};

use super::shake::ShakeState;

/// A partial solution plus how far the removal fell short of its target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destroyed {
    pub partial: PartialSolution,
    pub requested: usize,
    /// `requested - removed`; non-zero only when too few allowed
    /// customers were available.
    pub shortfall: usize,
}

/// Removes `n_remove` allowed customers chosen uniformly at random, or all
/// allowed customers if there are fewer.
pub fn destroy_random<R: Rng + ?Sized>(
    inst: &Instance,
    mut sol: Solution,
    n_remove: usize,
    allowed: impl Fn(NodeId) -> bool,
    rng: &mut R,
) -> Destroyed {
    let pool: Vec<NodeId> = inst.customers().filter(|&c| sol.is_routed(c) && allowed(c)).collect();
    let take = n_remove.min(pool.len());
    let mut absent = Vec::with_capacity(take);
    if take > 0 {
        for i in sample(rng, pool.len(), take).iter() {
            let c = pool[i];
            sol.remove_customer(inst, c);
            absent.push(c);
        }
    }
    Destroyed {
        partial: PartialSolution { solution: sol, absent },
        requested: n_remove,
        shortfall: n_remove - take,
    }
}

/// Removes up to `len` allowed customers forming a contiguous window
/// around `center` in the allowed subsequence of its route. Prohibited
/// customers inside the window are skipped and the window extends past them.
fn remove_string<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &mut Solution,
    center: NodeId,
    len: usize,
    allowed: &impl Fn(NodeId) -> bool,
    rng: &mut R,
    absent: &mut Vec<NodeId>,
) -> usize {
    let Some(r) = sol.route_of(center) else { return 0 };
    let filtered: Vec<NodeId> = sol
        .route(r)
        .customers()
        .iter()
        .copied()
        .filter(|&c| allowed(c))
        .collect();
    let Some(idx) = filtered.iter().position(|&c| c == center) else {
        return 0;
    };
    let len = len.min(filtered.len());
    if len == 0 {
        return 0;
    }
    let lo = (idx + 1).saturating_sub(len);
    let hi = idx.min(filtered.len() - len);
    let start = rng.gen_range(lo..=hi);
    for &c in &filtered[start..start + len] {
        sol.remove_customer(inst, c);
        absent.push(c);
    }
    len
}

/// String removal seeded at `seed` with total budget `omega_seed`.
///
/// The first string is cut from the seed's route. While budget remains,
/// further strings are cut from the routes of the seed's nearest
/// neighbours, each route at most once.
pub fn destroy_string<R: Rng + ?Sized>(
    inst: &Instance,
    mut sol: Solution,
    seed: NodeId,
    shake: &ShakeState,
    lists: &NeighborLists,
    allowed: impl Fn(NodeId) -> bool,
    rng: &mut R,
) -> Result<Destroyed, DestroyError> {
    if !allowed(seed) {
        return Err(DestroyError::SeedNotAllowed(seed));
    }
    let Some(seed_route) = sol.route_of(seed) else {
        return Err(DestroyError::SeedNotRouted(seed));
    };
    let budget = shake.omega(seed) as usize;
    let mut absent = Vec::with_capacity(budget);
    let mut ruined = vec![seed_route];
    let mut removed = remove_string(inst, &mut sol, seed, budget, &allowed, rng, &mut absent);
    for &v in lists.of(seed) {
        if removed >= budget {
            break;
        }
        let Some(rv) = sol.route_of(v) else { continue };
        if ruined.contains(&rv) || !allowed(v) {
            continue;
        }
        ruined.push(rv);
        removed += remove_string(inst, &mut sol, v, budget - removed, &allowed, rng, &mut absent);
    }
    Ok(Destroyed {
        partial: PartialSolution { solution: sol, absent },
        requested: budget,
        shortfall: budget - removed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Instance {
        let customers = (1..=n).map(|i| (Point::new(i as f64 * 10.0, 0.0), 1)).collect();
        Instance::new("line", Point::new(0.0, 0.0), customers, 100).unwrap()
    }

    #[test]
    fn zero_removal_is_identity() {
        let inst = line(6);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = destroy_random(&inst, sol.clone(), 0, |_| true, &mut rng);
        assert_eq!(d.partial.solution, sol);
        assert!(d.partial.absent.is_empty());
    }

    #[test]
    fn full_removal_empties_routes() {
        let inst = line(6);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = destroy_random(&inst, sol, 6, |_| true, &mut rng);
        assert!(d.partial.solution.routes().iter().all(|r| r.is_empty()));
        assert_eq!(d.partial.solution.cost(), 0);
        assert_eq!(d.partial.absent.len(), 6);
        assert!(d.partial.is_partition(&inst));
    }

    #[test]
    fn shortfall_when_pool_is_small() {
        let inst = line(6);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = destroy_random(&inst, sol, 5, |c| c <= 2, &mut rng);
        assert_eq!(d.shortfall, 3);
        let mut got = d.partial.absent.clone();
        got.sort();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn unit_omega_removes_only_seed() {
        let inst = line(6);
        let lists = NeighborLists::new(&inst, 5);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        let shake = ShakeState::new(inst.num_nodes(), 1, 1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = destroy_string(&inst, sol, 5, &shake, &lists, |_| true, &mut rng).unwrap();
        assert_eq!(d.partial.absent, vec![5]);
    }

    #[test]
    fn string_in_single_route_is_contiguous() {
        let inst = line(7);
        let lists = NeighborLists::new(&inst, 6);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3, 4, 5, 6, 7]]);
        let shake = ShakeState::new(inst.num_nodes(), 3, 1, 7).unwrap();
        for s in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let d = destroy_string(&inst, sol.clone(), 4, &shake, &lists, |_| true, &mut rng).unwrap();
            let mut got = d.partial.absent.clone();
            got.sort();
            assert_eq!(got.len(), 3);
            assert!(got.contains(&4));
            assert_eq!(got[2] - got[0], 2, "{got:?}");
        }
    }

    #[test]
    fn prohibited_node_is_skipped_and_count_kept() {
        let inst = line(7);
        let lists = NeighborLists::new(&inst, 6);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3, 4, 5, 6, 7]]);
        let shake = ShakeState::new(inst.num_nodes(), 3, 1, 7).unwrap();
        for s in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let d = destroy_string(&inst, sol.clone(), 4, &shake, &lists, |c| c != 3 && c != 5, &mut rng).unwrap();
            assert_eq!(d.partial.absent.len(), 3);
            assert_eq!(d.shortfall, 0);
            assert!(!d.partial.absent.contains(&3) && !d.partial.absent.contains(&5));
        }
    }

    #[test]
    fn disallowed_seed_is_rejected() {
        let inst = line(3);
        let lists = NeighborLists::new(&inst, 2);
        let sol = Solution::from_routes(&inst, vec![vec![1, 2, 3]]);
        let shake = ShakeState::new(inst.num_nodes(), 1, 1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            destroy_string(&inst, sol, 2, &shake, &lists, |c| c != 2, &mut rng),
            Err(DestroyError::SeedNotAllowed(2))
        ));
    }
}
