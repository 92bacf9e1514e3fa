#![allow(dead_code)]

use num_complex::Complex64 as C64;
use qutrit_tele::algebra::QuditDensityMatrix;
use qutrit_tele::linalg::{self, CMatrix};
use qutrit_tele::optics::{Arm, FockState, OpticalMode, Pol, StageName};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const PRINTED_STATE_FIDELITIES: [f64; 11] = [
    0.745, 0.715, 0.708, 0.724, 0.693, 0.661, 0.626, 0.668, 0.643, 0.665, 0.647,
];

/// Positions (0-based) in the eleven-value list matched to ρ1…ρ10.
pub const RECONCILED_POSITIONS: [usize; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 9, 10];

pub const PRINTED_MUB_FIDELITIES: [f64; 12] = [
    0.740, 0.689, 0.713, 0.634, 0.728, 0.687, 0.674, 0.664, 0.751, 0.668, 0.764, 0.648,
];

fn m(arm: Arm, rail: i8, pol: Pol) -> OpticalMode {
    OpticalMode::new(arm, rail, pol)
}

fn trig() -> OpticalMode {
    m(Arm::Trigger, 0, Pol::H)
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The printed stage kets for input α|0⟩+β|1⟩+γ|2⟩ through the (2,2,1)/3 channel.
/// Photon-3 kets in the BD1/BD3 stage use |V1⟩ and |H2⟩ where the printed line
/// has |V0⟩ and |H1⟩: photon 3 never meets an element, and the following
/// stage prints the unchanged kets.
pub fn printed_stage(stage: StageName, a: C64, b: C64, g: C64) -> Vec<(Vec<OpticalMode>, C64)> {
    use Arm::*;
    use Pol::*;
    let s2 = 2f64.sqrt();
    let mut out: Vec<(Vec<OpticalMode>, C64)> = Vec::new();
    let mut push = |modes: Vec<OpticalMode>, amp: C64| {
        let mut v = modes;
        v.push(trig());
        out.push((v, amp));
    };
    match stage {
        StageName::Input => {
            let inp = [m(Input, 0, H), m(Input, 1, V), m(Input, 2, H)];
            let ch = [
                (m(Channel, 0, H), m(Bob, 0, H), 2.0 / 3.0),
                (m(Channel, 1, V), m(Bob, 1, V), 2.0 / 3.0),
                (m(Channel, 2, H), m(Bob, 2, H), 1.0 / 3.0),
            ];
            for (i, amp) in [a, b, g].into_iter().enumerate() {
                for (c2, c3, w) in ch {
                    push(vec![inp[i], c2, c3], amp * w);
                }
            }
        }
        StageName::Pbs1 => {
            push(vec![m(A, 0, H), m(B, 0, H), m(Bob, 0, H)], a * (2.0 / 3.0));
            push(vec![m(A, 0, H), m(B, 2, H), m(Bob, 2, H)], a * (1.0 / 3.0));
            push(vec![m(A, 1, V), m(B, 1, V), m(Bob, 1, V)], b * (2.0 / 3.0));
            push(vec![m(A, 2, H), m(B, 0, H), m(Bob, 0, H)], g * (2.0 / 3.0));
            push(vec![m(A, 2, H), m(B, 2, H), m(Bob, 2, H)], g * (1.0 / 3.0));
        }
        StageName::Bd1Bd3 => {
            push(vec![m(A, 0, V), m(B, 0, V), m(Bob, 0, H)], a * (2.0 / 3.0));
            push(vec![m(A, 0, V), m(B, 1, H), m(Bob, 2, H)], a * (1.0 / 3.0));
            push(vec![m(A, 0, H), m(B, 0, H), m(Bob, 1, V)], b * (2.0 / 3.0));
            push(vec![m(A, 1, H), m(B, 0, V), m(Bob, 0, H)], g * (2.0 / 3.0));
            push(vec![m(A, 1, H), m(B, 1, H), m(Bob, 2, H)], g * (1.0 / 3.0));
        }
        StageName::Hwps => {
            // (2/3)α (H0-V0)_a (H0-V0)_b / 2
            for (pa, sa) in [(H, 1.0), (V, -1.0)] {
                for (pb, sb) in [(H, 1.0), (V, -1.0)] {
                    push(
                        vec![m(A, 0, pa), m(B, 0, pb), m(Bob, 0, H)],
                        a * (sa * sb / 3.0),
                    );
                    push(
                        vec![m(A, 0, pa), m(B, 0, pb), m(Bob, 1, V)],
                        b * (1.0 / 3.0),
                    );
                }
                push(
                    vec![m(A, 0, pa), m(B, 1, H), m(Bob, 2, H)],
                    a * (sa / (3.0 * s2)),
                );
                push(
                    vec![m(A, 1, H), m(B, 0, pa), m(Bob, 0, H)],
                    g * (2.0 * sa / (3.0 * s2)),
                );
            }
            push(vec![m(A, 1, H), m(B, 1, H), m(Bob, 2, H)], g * (1.0 / 3.0));
        }
        StageName::Bd2Bd4 => {
            push(vec![m(A, 0, H), m(B, 0, H), m(Bob, 0, H)], a * (1.0 / 3.0));
            push(vec![m(A, 0, H), m(B, 0, V), m(Bob, 2, H)], a * (s2 / 6.0));
            push(vec![m(A, 0, H), m(B, 0, H), m(Bob, 1, V)], b * (1.0 / 3.0));
            push(vec![m(A, 0, V), m(B, 0, H), m(Bob, 0, H)], g * (s2 / 3.0));
            push(vec![m(A, 0, V), m(B, 0, V), m(Bob, 2, H)], g * (1.0 / 3.0));
        }
        StageName::AuxPbs => {
            let hhhh = [m(A, 0, H), m(B, 0, H), m(C, 0, H), m(D, 0, H)];
            let vvvv = [m(A, 0, V), m(B, 0, V), m(C, 0, V), m(D, 0, V)];
            let k = s2 / 6.0;
            let mut with = |four: [OpticalMode; 4], bob: OpticalMode, amp: C64| {
                let mut v = four.to_vec();
                v.push(bob);
                push(v, amp * k);
            };
            with(hhhh, m(Bob, 0, H), a);
            with(hhhh, m(Bob, 1, V), b);
            with(vvvv, m(Bob, 2, H), g);
        }
        StageName::Hwp14 | StageName::Proj => {
            let k = s2 / 6.0 / 4.0;
            for bits in 0..16u32 {
                let pols: Vec<Pol> = (0..4)
                    .map(|q| if bits >> (3 - q) & 1 == 1 { V } else { H })
                    .collect();
                let odd = bits.count_ones() % 2 == 1;
                let four: Vec<OpticalMode> = [A, B, C, D]
                    .iter()
                    .zip(&pols)
                    .map(|(&arm, &p)| m(arm, 0, p))
                    .collect();
                // HWP1-4 prints -γ on odd patterns; the heralded correction restores +γ
                let gs = if odd && stage == StageName::Hwp14 {
                    -1.0
                } else {
                    1.0
                };
                for (bob, amp) in [(m(Bob, 0, H), a), (m(Bob, 1, V), b), (m(Bob, 2, H), g * gs)] {
                    let mut v = four.clone();
                    v.push(bob);
                    push(v, amp * k);
                }
            }
        }
    }
    out
}

/// Largest amplitude deviation between `state` and `expected` after removing one
/// global phase; terms absent from `expected` count with their full modulus.
pub fn stage_deviation(state: &FockState, expected: &[(Vec<OpticalMode>, C64)]) -> f64 {
    let overlap: C64 = expected
        .iter()
        .map(|(p, e)| e.conj() * state.amplitude(p))
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        r(1.0)
    };
    let mut worst: f64 = 0.0;
    let mut seen = Vec::new();
    for (p, e) in expected {
        let mut key = p.clone();
        key.sort();
        seen.push(key);
        worst = worst.max((state.amplitude(p) - e * phase).norm());
    }
    for (p, a) in state.terms() {
        if !seen.contains(p) {
            worst = worst.max(a.norm());
        }
    }
    worst
}

/// A fixed asymmetric input with distinct moduli and phases.
pub fn generic_amplitudes() -> (C64, C64, C64) {
    let raw = [
        C64::new(0.5, 0.1),
        C64::new(-0.3, 0.45),
        C64::new(0.2, -0.6),
    ];
    let n: f64 = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (raw[0] / n, raw[1] / n, raw[2] / n)
}

/// Random state of random rank from a Ginibre matrix.
pub fn random_state(rng: &mut ChaCha8Rng) -> QuditDensityMatrix {
    let k = rng.random_range(1..=3);
    let g = CMatrix::from_fn(3, k, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let t = linalg::trace(&m);
    QuditDensityMatrix::new(linalg::hermitian_part(&(m / t))).unwrap()
}

pub fn noisy(rho: &QuditDensityMatrix, mu: f64) -> CMatrix {
    linalg::identity(3) * C64::new(mu / 3.0, 0.0) + rho.matrix() * C64::new(1.0 - mu, 0.0)
}

/// Exhaustive search over diagonal allocations: each of a1, b1 and b2 takes
/// `n` evenly spaced values of its level budget, the partner allocations take
/// the remainder, and every block must satisfy a·b ≥ |c|².
pub fn grid_feasible(r: &CMatrix, n: usize) -> bool {
    let (r00, r11, r22) = (r[(0, 0)].re, r[(1, 1)].re, r[(2, 2)].re);
    if r00 < 0.0 || r11 < 0.0 || r22 < 0.0 {
        return false;
    }
    let (q01, q02, q12) = (
        r[(0, 1)].norm_sqr(),
        r[(0, 2)].norm_sqr(),
        r[(1, 2)].norm_sqr(),
    );
    let pts = |budget: f64| (0..n).map(move |k| budget * k as f64 / (n - 1) as f64);
    for a1 in pts(r00) {
        let a2 = r00 - a1;
        for b1 in pts(r11) {
            if a1 * b1 < q01 {
                continue;
            }
            let a3 = r11 - b1;
            for b2 in pts(r22) {
                let b3 = r22 - b2;
                if a2 * b2 >= q02 && a3 * b3 >= q12 {
                    return true;
                }
            }
        }
    }
    false
}
