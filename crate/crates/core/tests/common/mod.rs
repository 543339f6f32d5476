#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use sqcka_core::attacks::{random_table_attack, CollectiveAttack};
use sqcka_core::qmath::{conditional_entropy, DensityOperator, Label, RegisterLayout};

pub struct RandomAttack {
    pub attack: CollectiveAttack,
    pub vectors: DMatrix<f64>,
    pub weights: Vec<f64>,
}

pub fn random_attack<R: Rng>(rng: &mut R, n: usize, env_dim: usize) -> RandomAttack {
    let r = random_table_attack(rng, n, env_dim).unwrap();
    let weights = r.attack.analytic().unwrap().tables.global_weights();
    RandomAttack { attack: r.attack, vectors: r.vectors, weights }
}

/// `S(A|E)` from the dense `ρ_AE = Σ_a |a⟩⟨a| ⊗ Σ w |v⟩⟨v|`.
pub fn dense_conditional_entropy(vectors: &DMatrix<f64>, weights: &[f64]) -> f64 {
    let (k, r) = vectors.shape();
    let half = k / 2;
    let mut rho = DMatrix::from_element(2 * r, 2 * r, Complex64::new(0.0, 0.0));
    for i in 0..k {
        let a = i / half;
        for x in 0..r {
            for y in 0..r {
                rho[(a * r + x, a * r + y)] += Complex64::new(weights[i] * vectors[(i, x)] * vectors[(i, y)], 0.0);
            }
        }
    }
    let layout = RegisterLayout::new(vec![(Label::A, 2), (Label::E1, r)]).unwrap();
    conditional_entropy(&DensityOperator::new(rho).unwrap(), &layout, &[Label::A], &[Label::E1]).unwrap()
}
