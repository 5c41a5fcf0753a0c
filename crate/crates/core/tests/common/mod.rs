//! Reference oracles shared by the integration tests. None of these call
//! into the code paths they are used to check.

#![allow(dead_code)]

use std::collections::HashSet;

use meshcode::fountain::FountainPacket;
use meshcode::radio::RadioNetwork;

/// Largest set of disjoint relay paths, by exhaustive search. A path takes
/// one relaying node per hop, with each node's transmit channel equal to the
/// next node's receive channel. Two paths conflict when they share a relay
/// or occupy the same channel at the same layer.
pub fn brute_force_paths(net: &RadioNetwork) -> usize {
    let hops = net.rx.len();
    if hops == 0 {
        return net.spec.n_channels;
    }
    let usable = |h: usize, i: usize| net.rx_active[h][i] && net.tx_active[h][i];
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..net.rx[0].len())
        .filter(|&i| usable(0, i))
        .map(|i| vec![i])
        .collect();
    while let Some(p) = stack.pop() {
        let h = p.len();
        if h == hops {
            paths.push(p);
            continue;
        }
        let channel = net.tx[h - 1][p[h - 1]];
        for i in 0..net.rx[h].len() {
            if usable(h, i) && net.rx[h][i] == channel {
                let mut q = p.clone();
                q.push(i);
                stack.push(q);
            }
        }
    }
    let footprint = |p: &Vec<usize>| -> Vec<(u8, usize, usize)> {
        let mut out = Vec::new();
        for (h, &i) in p.iter().enumerate() {
            out.push((0, h, i));
            out.push((1, h, net.rx[h][i]));
        }
        out.push((1, hops, net.tx[hops - 1][p[hops - 1]]));
        out
    };
    let prints: Vec<Vec<(u8, usize, usize)>> = paths.iter().map(footprint).collect();

    fn search(i: usize, prints: &[Vec<(u8, usize, usize)>], used: &mut HashSet<(u8, usize, usize)>) -> usize {
        if i == prints.len() {
            return 0;
        }
        let mut best = search(i + 1, prints, used);
        if prints[i].iter().all(|r| !used.contains(r)) {
            used.extend(prints[i].iter().copied());
            best = best.max(1 + search(i + 1, prints, used));
            for r in &prints[i] {
                used.remove(r);
            }
        }
        best
    }
    search(0, &prints, &mut HashSet::new())
}

/// Data indices determined by the 0/1 equations over GF(2): index `i` is
/// recoverable iff the unit vector `e_i` lies in the row space, i.e. some
/// row of the reduced echelon form equals `e_i`. Requires `k <= 64`.
pub fn gf2_recoverable(queried: &[FountainPacket], k: usize) -> HashSet<usize> {
    assert!(k <= 64);
    let mut rows: Vec<u64> = queried
        .iter()
        .map(|p| p.neighbors.iter().fold(0u64, |acc, &i| acc ^ (1 << i)))
        .collect();
    let mut pivot_row = 0;
    for col in 0..k {
        let Some(r) = (pivot_row..rows.len()).find(|&r| rows[r] >> col & 1 == 1) else {
            continue;
        };
        rows.swap(pivot_row, r);
        let p = rows[pivot_row];
        for (j, row) in rows.iter_mut().enumerate() {
            if j != pivot_row && *row >> col & 1 == 1 {
                *row ^= p;
            }
        }
        pivot_row += 1;
    }
    rows[..pivot_row]
        .iter()
        .filter(|r| r.count_ones() == 1)
        .map(|r| r.trailing_zeros() as usize)
        .collect()
}

/// Probability that `m` uniform draws from `k` coupons cover all of them
/// (inclusion-exclusion).
pub fn coverage_probability(k: usize, m: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (1.0 - j as f64 / k as f64).powi(m as i32);
    }
    total
}

/// `n! / n^n`: probability that `n` uniform picks out of `n` form a permutation.
pub fn permutation_probability(n: usize) -> f64 {
    (1..=n).map(|i| i as f64 / n as f64).product()
}
