fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; these witnesses are exact for all u64.
pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let n = n as u64;
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let r = isqrt(n as u128);
    r * r == n as u128
}

/// n is Fibonacci iff 5n²+4 or 5n²−4 is a perfect square.
pub fn is_fibonacci(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let m = 5 * (n as u128) * (n as u128);
    let sq = |x: u128| {
        let r = isqrt(x);
        r * r == x
    };
    sq(m + 4) || (m >= 4 && sq(m - 4))
}

pub fn digit_sum(n: i64) -> i64 {
    let mut m = n.unsigned_abs();
    let mut s = 0;
    while m > 0 {
        s += (m % 10) as i64;
        m /= 10;
    }
    s
}

pub fn is_divisible_by(n: i64, divisor: i64) -> bool {
    divisor != 0 && n.checked_rem(divisor).is_none_or(|r| r == 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_at_edges() {
        assert!(!is_prime(i64::MIN));
        assert!(!is_prime(1));
        assert!(is_prime(2));
        assert!(is_prime(9_223_372_036_854_775_783));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn squares_and_fibonacci() {
        assert!(is_square(0) && is_square(1) && is_square(3_037_000_499i64 * 3_037_000_499));
        assert!(!is_square(-4));
        assert!(is_fibonacci(0) && is_fibonacci(1) && is_fibonacci(5));
        assert!(is_fibonacci(7_540_113_804_746_346_429));
        assert!(!is_fibonacci(4));
        assert!(!is_fibonacci(-1));
    }

    #[test]
    fn digits_and_divisibility() {
        assert_eq!(digit_sum(-1234), 10);
        assert_eq!(digit_sum(i64::MIN), 89);
        assert!(is_divisible_by(12, -4));
        assert!(!is_divisible_by(12, 0));
        assert!(is_divisible_by(i64::MIN, -1));
    }
}
