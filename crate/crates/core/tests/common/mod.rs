#![allow(dead_code)]

use qcorner_lab::gauge::{GaugeElement, State};
use qcorner_lab::random::{clustered_probability, commuting_unitary, random_unitary};
use qcorner_lab::{CMatrix, Tolerance};
use rand::Rng;

pub fn tol() -> Tolerance {
    Tolerance::default()
}

/// Random block multiplicities summing to `n`.
pub fn random_mults<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut left = n;
    let mut mults = Vec::new();
    while left > 0 {
        let m = rng.gen_range(1..=left);
        mults.push(m);
        left -= m;
    }
    mults
}

/// Faithful state `u* diag(p) u` with clustered spectrum, plus `p` and `u`.
pub fn clustered_state<R: Rng>(rng: &mut R, n: usize) -> (State, Vec<f64>, CMatrix) {
    let mults = random_mults(rng, n);
    let p = clustered_probability(rng, &mults, 0.02);
    let u = random_unitary(rng, n);
    let d = CMatrix::from_real_diag(&p);
    let m = &(&u.adjoint() * &d) * &u;
    let omega = (&m + &m.adjoint()).scale_real(0.5);
    (State::new(omega, &tol()).unwrap(), p, u)
}

/// Random element `{x, X}` of the gauge group over `state = u* diag(p) u`.
pub fn gauge_element<R: Rng>(rng: &mut R, state: &State, p: &[f64], u: &CMatrix, xmax: f64) -> GaugeElement {
    let x = rng.gen_range(-xmax..=xmax);
    let big_x = commuting_unitary(rng, p, u, 1e-12);
    GaugeElement::new(state, x, big_x, &tol()).unwrap()
}
