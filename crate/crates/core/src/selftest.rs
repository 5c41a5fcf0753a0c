//! Slow reference implementations of the field and matrix operations, and
//! a runner that checks the fast paths against them.
//!
//! Nothing here touches the log/antilog tables: multiplication is
//! schoolbook shift-and-reduce, inversion is exhaustive search, and rank is
//! found by enumerating row subsets over a small subfield.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::field::{self, Gf256};
use crate::matrix::FieldMatrix;

/// Shift-and-reduce multiplication modulo x^8 + x^4 + x^3 + x + 1.
pub fn slow_mul(a: u8, b: u8) -> u8 {
    let (mut a, mut b, mut acc) = (a, b, 0u8);
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= field::REDUCTION_POLY;
        }
        b >>= 1;
    }
    acc
}

/// Exhaustive search for the inverse of `a`.
pub fn slow_inv(a: u8) -> Option<u8> {
    (1..=255u8).find(|&b| slow_mul(a, b) == 1)
}

/// The subfield of GF(256) with `q` elements, `q` in {2, 4, 16, 256}.
pub fn subfield(q: usize) -> Vec<Gf256> {
    assert!(matches!(q, 2 | 4 | 16 | 256), "GF(256) has no subfield of order {q}");
    if q == 256 {
        return (0..=255u8).map(Gf256).collect();
    }
    // The unique subfield of order q is {x : x^q = x}.
    let mut out: Vec<Gf256> = (0..=255u8)
        .filter(|&x| {
            let mut y = x;
            for _ in 0..q.trailing_zeros() {
                y = slow_mul(y, y);
            }
            y == x
        })
        .map(Gf256)
        .collect();
    out.sort();
    assert_eq!(out.len(), q);
    out
}

fn slow_combination_is_zero(m: &FieldMatrix, rows: &[usize], coeffs: &[u8]) -> bool {
    (0..m.cols()).all(|c| {
        rows.iter()
            .zip(coeffs)
            .fold(0u8, |acc, (&r, &f)| acc ^ slow_mul(f, m[(r, c)].value()))
            == 0
    })
}

/// Rank as the size of the largest row subset with no nontrivial
/// vanishing combination over the given subfield. All entries of `m` must
/// lie in that subfield (rank does not change under field extension).
pub fn brute_force_rank(m: &FieldMatrix, subfield: &[Gf256]) -> usize {
    assert!(m.rows() <= 12, "brute force rank is exponential in rows");
    assert!(
        m.entries().iter().all(|e| subfield.contains(e)),
        "matrix entries must lie in the subfield"
    );
    let q = subfield.len();
    let mut best = 0;
    for mask in 0u32..(1 << m.rows()) {
        let rows: Vec<usize> = (0..m.rows()).filter(|r| mask & (1 << r) != 0).collect();
        if rows.len() <= best {
            continue;
        }
        let total = q.pow(rows.len() as u32);
        let independent = (1..total).all(|mut code| {
            let coeffs: Vec<u8> = (0..rows.len())
                .map(|_| {
                    let c = subfield[code % q].value();
                    code /= q;
                    c
                })
                .collect();
            !slow_combination_is_zero(m, &rows, &coeffs)
        });
        if independent {
            best = rows.len();
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, failures: usize, total: usize) -> Check {
    Check {
        name,
        passed: failures == 0,
        detail: format!("{} of {total} cases agree", total - failures),
    }
}

/// Runs every field and matrix oracle comparison.
pub fn run(seed: u64) -> SelftestReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut bad = 0;
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            if field::mul(Gf256(a), Gf256(b)).value() != slow_mul(a, b) {
                bad += 1;
            }
        }
    }
    checks.push(check("mul matches shift-and-reduce (all pairs)", bad, 65536));

    let bad = (1..=255u8)
        .filter(|&a| field::inv(Gf256(a)).ok().map(Gf256::value) != slow_inv(a))
        .count()
        + usize::from(field::inv(Gf256::ZERO).is_ok());
    checks.push(check("inverse exhaustive", bad, 256));

    let triples = 10_000;
    let mut bad = 0;
    for _ in 0..triples {
        let (a, b, c) = (Gf256::random(&mut rng), Gf256::random(&mut rng), Gf256::random(&mut rng));
        let ok = a + b == b + a
            && a * b == b * a
            && (a + b) + c == a + (b + c)
            && (a * b) * c == a * (b * c)
            && a * (b + c) == a * b + a * c
            && a + Gf256::ZERO == a
            && a * Gf256::ONE == a
            && a + (a + b) == b;
        if !ok {
            bad += 1;
        }
    }
    checks.push(check("field axioms on random triples", bad, triples));

    let gf4 = subfield(4);
    let cases = 1000;
    let mut bad = 0;
    for _ in 0..cases {
        let rows = rng.gen_range(1..=4);
        let cols = rng.gen_range(1..=4);
        let entries = (0..rows * cols).map(|_| gf4[rng.gen_range(0..4)]).collect();
        let m = FieldMatrix::new(rows, cols, entries).expect("sized");
        if m.rank() != brute_force_rank(&m, &gf4) {
            bad += 1;
        }
    }
    checks.push(check("rank matches subset enumeration", bad, cases));

    let systems = 100;
    let mut bad = 0;
    for i in 0..systems {
        let k = 1 + (i * 63) / (systems - 1);
        let m = loop {
            let m = FieldMatrix::new(k, k, (0..k * k).map(|_| Gf256::random(&mut rng)).collect())
                .expect("sized");
            if m.rank() == k {
                break m;
            }
        };
        let x: Vec<Vec<Gf256>> = (0..k)
            .map(|_| (0..4).map(|_| Gf256::random(&mut rng)).collect())
            .collect();
        // Right-hand side built with slow multiplication.
        let b: Vec<Vec<Gf256>> = (0..k)
            .map(|r| {
                (0..4)
                    .map(|s| {
                        Gf256((0..k).fold(0u8, |acc, j| acc ^ slow_mul(m[(r, j)].value(), x[j][s].value())))
                    })
                    .collect()
            })
            .collect();
        if m.solve(&b).ok().as_ref() != Some(&x) {
            bad += 1;
        }
    }
    checks.push(check("solve round trip up to k=64", bad, systems));

    SelftestReport {
        checks,
        elapsed: start.elapsed(),
    }
}
