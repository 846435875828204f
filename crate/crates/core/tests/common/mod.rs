//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use ghzsim::state::{FockKet, Polarization, PureState, Rail, SpatialMode};
use num_complex::Complex64 as C;

use Polarization::{H, V};

pub fn rail(name: &str, pol: Polarization) -> Rail {
    SpatialMode::new(name).rail(pol)
}

/// Permanent by first-row expansion. Fine for the 4×4 matrices used here.
pub fn permanent(m: &[Vec<C>]) -> C {
    let n = m.len();
    if n == 0 {
        return C::new(1.0, 0.0);
    }
    let mut total = C::new(0.0, 0.0);
    for col in 0..n {
        let minor: Vec<Vec<C>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, x)| *x).collect())
            .collect();
        total += m[0][col] * permanent(&minor);
    }
    total
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn multiplicity_factorials(idx: &[usize]) -> f64 {
    let mut counts = BTreeMap::new();
    for i in idx {
        *counts.entry(*i).or_insert(0usize) += 1;
    }
    counts.values().map(|&c| factorial(c)).product()
}

/// Dense evolution through a linear map via `⟨m|Û|n⟩ = perm(U_mn)/√(∏n!∏m!)`.
pub struct DenseOracle {
    pub inputs: Vec<Rail>,
    pub outputs: Vec<Rail>,
    /// `u[out][in]`.
    pub u: Vec<Vec<C>>,
}

impl DenseOracle {
    pub fn from_map(map: &[(Rail, Vec<(Rail, C)>)]) -> Self {
        let inputs: Vec<Rail> = map.iter().map(|(r, _)| r.clone()).collect();
        let mut outputs: Vec<Rail> = map.iter().flat_map(|(_, img)| img.iter().map(|(r, _)| r.clone())).collect();
        outputs.sort();
        outputs.dedup();
        let mut u = vec![vec![C::new(0.0, 0.0); inputs.len()]; outputs.len()];
        for (j, (_, img)) in map.iter().enumerate() {
            for (r, a) in img {
                let i = outputs.iter().position(|o| o == r).unwrap();
                u[i][j] += *a;
            }
        }
        DenseOracle { inputs, outputs, u }
    }

    /// All output occupation patterns with `n` photons, as sorted index lists.
    pub fn basis(&self, n: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, k: usize, modes: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..modes {
                cur.push(i);
                rec(i, k - 1, modes, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, self.outputs.len(), &mut Vec::new(), &mut out);
        out
    }

    pub fn evolve(&self, state: &PureState) -> PureState {
        let mut amps: BTreeMap<Vec<usize>, C> = BTreeMap::new();
        for (ket, a) in state.terms() {
            let ins: Vec<usize> = ket
                .photon_rails()
                .iter()
                .map(|r| self.inputs.iter().position(|x| x == r).expect("rail outside oracle"))
                .collect();
            let norm_in = multiplicity_factorials(&ins);
            for outs in self.basis(ins.len()) {
                let sub: Vec<Vec<C>> = outs.iter().map(|&i| ins.iter().map(|&j| self.u[i][j]).collect()).collect();
                let amp = permanent(&sub) / (norm_in * multiplicity_factorials(&outs)).sqrt();
                *amps.entry(outs).or_insert(C::new(0.0, 0.0)) += a * amp;
            }
        }
        PureState::from_terms(amps.into_iter().map(|(outs, a)| {
            (FockKet::from_rails(outs.iter().map(|&i| self.outputs[i].clone())), a)
        }))
    }
}

/// `max |⟨k|a⟩ − ⟨k|b⟩|` over the union of supports.
pub fn max_entry_diff(a: &PureState, b: &PureState) -> f64 {
    a.kets()
        .chain(b.kets())
        .map(|k| (a.amplitude(k) - b.amplitude(k)).norm())
        .fold(0.0, f64::max)
}

/// Single-photon maps of the source-and-filter network, written out by hand.
pub fn literal_single_photon_map() -> Vec<(Rail, Vec<(Rail, C)>)> {
    let s = C::new(FRAC_1_SQRT_2, 0.0);
    let one = C::new(1.0, 0.0);
    let mut out = Vec::new();
    for (k, p) in [(1, "D"), (2, "d")] {
        let a = format!("a{k}");
        let b = format!("b{k}");
        let t = format!("T{k}");
        let m = |i: u8| format!("{p}{i}");
        out.push((rail(&a, H), vec![(rail(&t, H), one)]));
        out.push((rail(&a, V), vec![(rail(&m(1), V), s), (rail(&m(2), H), s)]));
        out.push((rail(&b, H), vec![(rail(&m(1), H), s), (rail(&m(3), H), s)]));
        out.push((rail(&b, V), vec![(rail(&m(2), V), s), (rail(&m(3), V), s)]));
    }
    out
}

/// Two-pass emission built with its own creation-operator algebra.
pub fn literal_source(weights: [f64; 3]) -> PureState {
    // Rails: a1H a1V b1H b1V a2H a2V b2H b2V.
    let rails: Vec<Rail> = ["a1", "b1", "a2", "b2"]
        .iter()
        .flat_map(|m| [rail(m, H), rail(m, V)])
        .collect();
    type Poly = BTreeMap<[u32; 8], f64>;
    let create = |p: &Poly, r: usize| -> Poly {
        let mut out = Poly::new();
        for (occ, a) in p {
            let mut o = *occ;
            o[r] += 1;
            *out.entry(o).or_insert(0.0) += a * f64::from(o[r]).sqrt();
        }
        out
    };
    let pair = |p: &Poly, pass: usize| -> Poly {
        let (ah, av, bh, bv) = (4 * pass, 4 * pass + 1, 4 * pass + 2, 4 * pass + 3);
        let mut out = Poly::new();
        for (occ, a) in create(&create(p, bv), ah) {
            *out.entry(occ).or_insert(0.0) += a * FRAC_1_SQRT_2;
        }
        for (occ, a) in create(&create(p, bh), av) {
            *out.entry(occ).or_insert(0.0) -= a * FRAC_1_SQRT_2;
        }
        out
    };
    let vacuum: Poly = [([0u32; 8], 1.0)].into_iter().collect();
    let mut total = Poly::new();
    for (w, (i, j)) in weights.iter().zip([(0, 0), (1, 1), (0, 1)]) {
        let p = pair(&pair(&vacuum, j), i);
        let norm: f64 = p.values().map(|a| a * a).sum::<f64>().sqrt();
        for (occ, a) in p {
            *total.entry(occ).or_insert(0.0) += w.sqrt() * a / norm;
        }
    }
    PureState::from_real(total.into_iter().filter(|(_, a)| a.abs() > 1e-15).map(|(occ, a)| {
        (FockKet::from_counts(occ.iter().enumerate().map(|(i, &n)| (rails[i].clone(), n))), a)
    }))
}

fn ket3(modes: [&str; 3], pols: [Polarization; 3]) -> FockKet {
    FockKet::from_rails(modes.iter().zip(pols).map(|(m, p)| rail(m, p)))
}

/// Branch-A conditional: GHZ on the upper outputs plus GHZ on the lower outputs.
pub fn literal_branch_a() -> PureState {
    PureState::from_real([
        (ket3(["D1", "D2", "D3"], [H, H, V]), 0.5),
        (ket3(["D1", "D2", "D3"], [V, V, H]), 0.5),
        (ket3(["d1", "d2", "d3"], [H, H, V]), 0.5),
        (ket3(["d1", "d2", "d3"], [V, V, H]), 0.5),
    ])
}

/// Branch-B conditional.
pub fn literal_branch_b() -> PureState {
    PureState::from_real([
        (ket3(["d1", "d2", "D3"], [H, H, V]), 0.5),
        (ket3(["d1", "D2", "d3"], [V, V, H]), 0.5),
        (ket3(["D1", "D2", "d3"], [H, H, V]), 0.5),
        (ket3(["D1", "d2", "D3"], [V, V, H]), 0.5),
    ])
}

/// `(|HHV⟩ + |VVH⟩)/√2` on three named modes.
pub fn literal_ghz(modes: [&str; 3]) -> PureState {
    PureState::from_real([(ket3(modes, [H, H, V]), FRAC_1_SQRT_2), (ket3(modes, [V, V, H]), FRAC_1_SQRT_2)])
}

/// `|⟨a|b⟩|²` for normalized states, computed directly.
pub fn overlap(a: &PureState, b: &PureState) -> f64 {
    let mut s = C::new(0.0, 0.0);
    for (k, x) in a.terms() {
        s += x.conj() * b.amplitude(k);
    }
    s.norm_sqr() / (a.norm_sqr() * b.norm_sqr())
}
