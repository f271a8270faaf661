//! Slow reference computations used by the CLI's oracle modes. They use plain
//! `%` arithmetic and share no code with the fast paths they check.

/// `a * b mod (x^n + 1, q)` by the O(n^2) definition.
pub fn negacyclic_schoolbook(a: &[u32], b: &[u32], q: u32) -> Vec<u32> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let q = q as u64;
    let mut acc = vec![0u64; n];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let prod = x as u64 * y as u64 % q;
            let k = i + j;
            if k < n {
                acc[k] = (acc[k] + prod) % q;
            } else {
                acc[k - n] = (acc[k - n] + q - prod) % q;
            }
        }
    }
    acc.into_iter().map(|c| c as u32).collect()
}
