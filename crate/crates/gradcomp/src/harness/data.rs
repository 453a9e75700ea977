//! Synthetic classification task: isotropic Gaussian class blobs with
//! controllable separation, partitioned i.i.d. across users.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One client's local shard: row-major feature matrix plus labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_id: usize,
    pub input_dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
}

/// Per-user shards plus a held-out test shard, all drawn from the same
/// class blobs.
pub fn make_blob_task<R: Rng + ?Sized>(
    input_dim: usize,
    classes: usize,
    users: usize,
    samples_per_user: usize,
    test_samples: usize,
    separation: f64,
    rng: &mut R,
) -> Result<(Vec<ClientDataset>, ClientDataset)> {
    if classes < 2 {
        return Err(Error::Input(format!("need at least 2 classes, got {classes}")));
    }
    if input_dim == 0 || users == 0 || samples_per_user == 0 {
        return Err(Error::Input("dimensions, users, and shard sizes must be positive".into()));
    }
    // Random unit directions scaled to half the separation; two classes get
    // antipodal means.
    let normal = StandardNormal;
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(classes);
    for k in 0..classes {
        if k == 1 && classes == 2 {
            means.push(means[0].iter().map(|m| -m).collect());
            continue;
        }
        let mut dir: Vec<f64> = (0..input_dim).map(|_| normal.sample(rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        dir.iter_mut().for_each(|v| *v *= separation / (2.0 * norm));
        means.push(dir);
    }

    let draw_shard = |client_id: usize, n: usize, rng: &mut R| -> ClientDataset {
        let mut features = Vec::with_capacity(n * input_dim);
        let mut labels = Vec::with_capacity(n);
        for idx in 0..n {
            let label = idx % classes;
            for i in 0..input_dim {
                let noise: f64 = normal.sample(rng);
                features.push(means[label][i] + noise);
            }
            labels.push(label);
        }
        ClientDataset { client_id, input_dim, features, labels }
    };

    let shards: Vec<ClientDataset> = (0..users).map(|u| draw_shard(u, samples_per_user, rng)).collect();
    let test = draw_shard(users, test_samples.max(classes), rng);
    Ok((shards, test))
}
