//! Small combinatorial helpers: binomials, subset enumeration, bitmask signs.

/// Exact binomial coefficient; zero outside the usual range.
pub fn binom(n: i64, k: i64) -> i128 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

pub fn binom_f64(n: usize, k: usize) -> f64 {
    binom(n as i64, k as i64) as f64
}

/// All k-subsets of {1..n} (1-based, ascending) in colexicographic order.
pub fn colex_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut c: Vec<usize> = (1..=k).collect();
    loop {
        out.push(c.clone());
        // colex successor: bump the lowest position that can move
        let mut i = 0;
        while i < k {
            let limit = if i + 1 < k { c[i + 1] } else { n + 1 };
            if c[i] + 1 < limit {
                c[i] += 1;
                for (j, cj) in c.iter_mut().enumerate().take(i) {
                    *cj = j + 1;
                }
                break;
            }
            i += 1;
        }
        if i == k {
            return out;
        }
    }
}

/// All k-subsets of {1..n} in lexicographic order.
pub fn lex_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut v = colex_subsets(n, k);
    v.sort();
    v
}

/// Bitmask of a 1-based support (bit j-1 for index j).
pub fn mask_of(support: &[usize]) -> u64 {
    support.iter().fold(0u64, |m, &j| m | (1u64 << (j - 1)))
}

/// 1-based ascending support of a bitmask.
pub fn support_of(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        let b = mask.trailing_zeros() as usize;
        out.push(b + 1);
        mask &= mask - 1;
    }
    out
}

/// Sign of χ^A χ^B → ±χ^{A△B} when all indeterminates anticommute.
#[inline]
pub fn complete_product_sign(a: u64, b: u64) -> f64 {
    let mut swaps = 0u32;
    let mut bb = b;
    while bb != 0 {
        let t = bb.trailing_zeros();
        let above = if t >= 63 { 0 } else { !((1u64 << (t + 1)) - 1) };
        swaps += (a & above).count_ones();
        bb &= bb - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// ln((k−1)!!) for even k.
pub fn ln_double_factorial_odd(k: usize) -> f64 {
    // (k-1)!! = k! / (2^{k/2} (k/2)!)
    let h = k / 2;
    statrs::function::gamma::ln_gamma(k as f64 + 1.0)
        - h as f64 * std::f64::consts::LN_2
        - statrs::function::gamma::ln_gamma(h as f64 + 1.0)
}

/// All perfect matchings of {0..k-1} (k even) as lists of pairs.
pub fn perfect_matchings(k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        let a = rest[0];
        for i in 1..rest.len() {
            let b = rest[i];
            let next: Vec<usize> = rest[1..]
                .iter()
                .copied()
                .filter(|&x| x != b)
                .collect();
            cur.push((a, b));
            rec(&next, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k % 2 == 1 {
        return out;
    }
    let items: Vec<usize> = (0..k).collect();
    rec(&items, &mut Vec::new(), &mut out);
    out
}
