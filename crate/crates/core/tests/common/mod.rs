#![allow(dead_code)]

use rand::Rng;

pub fn random_string<R: Rng>(rng: &mut R, sigma: u16, n: usize) -> Vec<u8> {
    if sigma <= 26 {
        (0..n).map(|_| b'a' + rng.gen_range(0..sigma) as u8).collect()
    } else {
        (0..n).map(|_| rng.gen_range(0..sigma) as u8).collect()
    }
}

pub fn fibonacci_word(n: usize) -> Vec<u8> {
    let (mut prev, mut cur) = (b"a".to_vec(), b"ab".to_vec());
    while cur.len() < n {
        let next = [cur.as_slice(), prev.as_slice()].concat();
        prev = std::mem::replace(&mut cur, next);
    }
    cur.truncate(n);
    cur
}

pub fn thue_morse(n: usize) -> Vec<u8> {
    (0..n as u64).map(|i| b'a' + (i.count_ones() % 2) as u8).collect()
}

pub fn periodic<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    let period = rng.gen_range(2..=12);
    let base = random_string(rng, 4, period);
    (0..n).map(|i| base[i % period]).collect()
}

/// The benchmark family: random over 2, 4 and 26 letters, Fibonacci,
/// Thue-Morse and periodic strings. `which` picks the member.
pub fn family<R: Rng>(rng: &mut R, which: usize, n: usize) -> (String, Vec<u8>) {
    match which % 6 {
        0 => ("random2".into(), random_string(rng, 2, n)),
        1 => ("random4".into(), random_string(rng, 4, n)),
        2 => ("random26".into(), random_string(rng, 26, n)),
        3 => ("fibonacci".into(), fibonacci_word(n)),
        4 => ("thue-morse".into(), thue_morse(n)),
        _ => ("periodic".into(), periodic(rng, n)),
    }
}

/// Copy of `s` with point substitutions at `rate` over a 4-letter alphabet.
pub fn mutate<R: Rng>(rng: &mut R, s: &[u8], rate: f64) -> Vec<u8> {
    s.iter()
        .map(|&c| if rng.gen_bool(rate) { b'a' + rng.gen_range(0..4) } else { c })
        .collect()
}
