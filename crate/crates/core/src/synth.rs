//! Seeded two-group synthetic data in the plane.
//!
//! Group A is a wide cloud stretched along 10°, group B a narrower cloud
//! along 70°. Classical PCA aligns with A's long axis and leaves B with the
//! larger reconstruction error.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::RawTable;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_SEED: u64 = 42;
pub const SENSITIVE_COLUMN: &str = "group";

/// One anisotropic Gaussian cloud.
#[derive(Debug, Clone, Copy)]
pub struct Cloud {
    pub count: usize,
    pub angle_deg: f64,
    pub scales: (f64, f64),
}

pub const S1_GROUP_A: Cloud = Cloud {
    count: 600,
    angle_deg: 10.0,
    scales: (3.0, 0.5),
};

pub const S1_GROUP_B: Cloud = Cloud {
    count: 300,
    angle_deg: 70.0,
    scales: (1.5, 0.5),
};

fn sample(cloud: &Cloud, rng: &mut ChaCha8Rng, out: &mut Vec<[f64; 2]>) {
    let (s, c) = cloud.angle_deg.to_radians().sin_cos();
    for _ in 0..cloud.count {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        let (u, v) = (cloud.scales.0 * z0, cloud.scales.1 * z1);
        out.push([c * u - s * v, s * u + c * v]);
    }
}

/// Two clouds labelled `A` then `B`, in that row order.
pub fn two_clouds(a: &Cloud, b: &Cloud, seed: u64) -> Result<RawTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(a.count + b.count);
    sample(a, &mut rng, &mut points);
    sample(b, &mut rng, &mut points);
    let labels = (0..points.len())
        .map(|i| if i < a.count { "A" } else { "B" }.to_string())
        .collect();
    RawTable::new(
        vec!["x1".into(), "x2".into()],
        Matrix::from_rows(&points)?,
        labels,
    )
}

pub fn generate_s1(seed: u64) -> Result<RawTable> {
    two_clouds(&S1_GROUP_A, &S1_GROUP_B, seed)
}

/// Writes the table as CSV with the sensitive column last.
pub fn write_csv<W: Write>(table: &RawTable, sensitive_column: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = table.feature_names.iter().map(String::as_str).collect();
    header.push(sensitive_column);
    w.write_record(&header)?;
    for i in 0..table.n() {
        let mut rec: Vec<String> = table.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(table.labels[i].clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv output>".into(),
        source,
    })
}
