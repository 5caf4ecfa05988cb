//! Small sieves.

/// Primes `<= n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        out.push(p as u64);
        let mut m = p * p;
        while m <= n {
            composite[m] = true;
            m += p;
        }
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// `table[n]` is the largest prime factor of `n` for `2 <= n <= limit`;
/// `table[0] = table[1] = 1`.
pub fn largest_prime_factor_table(limit: usize) -> Vec<u32> {
    let mut lpf = vec![0u32; limit + 1];
    for p in 2..=limit {
        if lpf[p] == 0 {
            // p is prime; overwrite in increasing p so the last write is the largest
            let mut m = p;
            while m <= limit {
                lpf[m] = p as u32;
                m += p;
            }
        }
    }
    for v in lpf.iter_mut().take(2.min(limit + 1)) {
        *v = 1;
    }
    lpf
}
