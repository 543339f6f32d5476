//! Random table-form attacks for property checks.

use nalgebra::DMatrix;
use rand::Rng;

use super::{attack_from_tables, CollectiveAttack, ConditionalChannelTable, EveGram, MAX_TABLE_BOBS};
use crate::bits;
use crate::{Error, Result};

/// A random table-form attack together with the unit Eve vectors that
/// realize its Gram.
#[derive(Debug, Clone)]
pub struct RandomTableAttack {
    pub attack: CollectiveAttack,
    /// Row `k` (in `eve_index` order) is the unit vector of branch `k`.
    pub vectors: DMatrix<f64>,
}

fn distribution<R: Rng + ?Sized>(rng: &mut R, len: usize, sparsity: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..len)
            .map(|_| if rng.random::<f64>() < sparsity { 0.0 } else { rng.random::<f64>().powi(3) })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 1e-6 {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

/// Random conditional tables (some entries zeroed) and random real unit
/// vectors in `env_dim` dimensions for Eve's branches.
pub fn random_table_attack<R: Rng + ?Sized>(rng: &mut R, n: usize, env_dim: usize) -> Result<RandomTableAttack> {
    if n == 0 || n > MAX_TABLE_BOBS || env_dim == 0 {
        return Err(Error::Domain(format!("random attack needs 1..={MAX_TABLE_BOBS} Bobs and env_dim > 0")));
    }
    let d = bits::dim(n);
    let sparsity = rng.random::<f64>() * 0.5;
    let forward: Vec<Vec<f64>> = (0..2).map(|_| distribution(rng, d, sparsity)).collect();
    let backward: Vec<Vec<Vec<f64>>> =
        (0..2).map(|_| (0..d).map(|_| distribution(rng, d, sparsity)).collect()).collect();
    let tables = ConditionalChannelTable::new(n, forward, backward)?;
    let mut vectors = DMatrix::from_fn(2 * d * d, env_dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    for mut row in vectors.row_iter_mut() {
        let norm = row.norm();
        if norm < 1e-9 {
            row.fill(0.0);
            row[0] = 1.0;
        } else {
            row /= norm;
        }
    }
    let gram = EveGram::new(n, &vectors * vectors.transpose())?;
    Ok(RandomTableAttack { attack: attack_from_tables(tables, gram)?, vectors })
}
