#![allow(dead_code)]

use polarflip::code::{parse_reliability, DEFAULT_RELIABILITY_128};
use polarflip::PolarCode;
use rand::Rng;

/// Code of length `n` from the bundled sequence (nested, so filtering works).
pub fn code(n: usize, k: usize, c: usize) -> PolarCode {
    let order: Vec<usize> = parse_reliability(DEFAULT_RELIABILITY_128)
        .unwrap()
        .into_iter()
        .filter(|&i| i < n)
        .collect();
    PolarCode::new(n, k, c, &order).unwrap()
}

fn minsum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// x = u·G_N via G_N = [[G, 0], [G, G]] with G = G_{N/2}.
pub fn rec_encode(u: &[u8]) -> Vec<u8> {
    if u.len() == 1 {
        return u.to_vec();
    }
    let h = u.len() / 2;
    let v: Vec<u8> = (0..h).map(|k| u[k] ^ u[h + k]).collect();
    let mut x = rec_encode(&v);
    x.extend(rec_encode(&u[h..]));
    x
}

/// Recursive successive cancellation over the same block structure. The first
/// half of `u` sees the channel through `min-sum(L1, L2)`, the second half
/// through `±L1 + L2` once the first half is re-encoded. `decide(i, llr)`
/// picks bit `i`; leaf LLRs land in `leaf`. Returns the re-encoded bits.
pub fn rec_decode(
    llr: &[f64],
    offset: usize,
    decide: &mut dyn FnMut(usize, f64) -> u8,
    u: &mut [u8],
    leaf: &mut [f64],
) -> Vec<u8> {
    if llr.len() == 1 {
        let b = decide(offset, llr[0]);
        u[offset] = b;
        leaf[offset] = llr[0];
        return vec![b];
    }
    let h = llr.len() / 2;
    let upper: Vec<f64> = (0..h).map(|k| minsum(llr[k], llr[h + k])).collect();
    let s = rec_decode(&upper, offset, decide, u, leaf);
    let lower: Vec<f64> = (0..h)
        .map(|k| {
            if s[k] == 1 {
                llr[h + k] - llr[k]
            } else {
                llr[k] + llr[h + k]
            }
        })
        .collect();
    let t = rec_decode(&lower, offset + h, decide, u, leaf);
    let mut x: Vec<u8> = s.iter().zip(&t).map(|(a, b)| a ^ b).collect();
    x.extend(t);
    x
}

/// Plain SC by recursion: frozen bits 0, others by sign.
pub fn reference_sc(code: &PolarCode, llr: &[f64]) -> (Vec<u8>, Vec<f64>) {
    let n = code.n_block();
    let mut u = vec![0; n];
    let mut leaf = vec![0.0; n];
    let mut decide = |i: usize, l: f64| {
        if code.is_frozen(i) {
            0
        } else {
            u8::from(l < 0.0)
        }
    };
    rec_decode(llr, 0, &mut decide, &mut u, &mut leaf);
    (u, leaf)
}

/// Path metric of message `u`: Σ |L_i| over positions where `u_i` disagrees
/// with the sign of the leaf LLR computed along `u` itself.
pub fn path_metric(code: &PolarCode, llr: &[f64], u: &[u8]) -> f64 {
    let n = code.n_block();
    let mut scratch = vec![0; n];
    let mut leaf = vec![0.0; n];
    let mut decide = |i: usize, _| u[i];
    rec_decode(llr, 0, &mut decide, &mut scratch, &mut leaf);
    (0..n)
        .filter(|&i| u8::from(leaf[i] < 0.0) != u[i])
        .map(|i| leaf[i].abs())
        .sum()
}

/// Every message consistent with the frozen set and its path metric.
pub fn exhaustive_pms(code: &PolarCode, llr: &[f64]) -> Vec<(Vec<u8>, f64)> {
    let k = code.n_nonfrozen();
    (0..1u32 << k)
        .map(|m| {
            let info: Vec<u8> = (0..k).map(|b| ((m >> (k - 1 - b)) & 1) as u8).collect();
            let u = code.embed(&info).unwrap();
            let pm = path_metric(code, llr, &u);
            (u, pm)
        })
        .collect()
}

pub fn random_llrs<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}
