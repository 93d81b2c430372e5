use std::io::BufRead;

/// `log(sum(exp(xs)))`, stable for large magnitudes; `-inf` for an empty or
/// all-`-inf` input.
pub(crate) fn logsumexp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// SplitMix64 finaliser; used to derive independent per-item seeds.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parses whitespace-separated floats (Rust's round-trip format, `inf`/`-inf`).
pub(crate) fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|x| x.parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect()
}

pub(crate) fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Reads all lines, returning `(1-based line number, line)` pairs with any
/// trailing carriage return removed.
pub(crate) fn numbered_lines<R: BufRead>(reader: R) -> std::io::Result<Vec<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.map(|mut s| {
                if s.ends_with('\r') {
                    s.pop();
                }
                (i + 1, s)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_basics() {
        assert_eq!(logsumexp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert_eq!(logsumexp(vec![f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = logsumexp(vec![1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((logsumexp(vec![0.0, f64::NEG_INFINITY]) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn float_text_round_trip() {
        let xs = [0.1, -1.0 / 3.0, f64::NEG_INFINITY, 1e-300, 12345.678];
        assert_eq!(parse_floats(&join_floats(&xs)).unwrap(), xs);
    }
}
