//! Node datasets: synthetic Gaussian generation, similarity-controlled
//! partitioning of a shared pool, IDX loading, and partition persistence.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Default half-width of the uniform box node means are drawn from.
pub const DEFAULT_MEAN_RANGE: f64 = 5.0;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pool of {actual} points cannot supply {num_nodes} nodes (need at least {required})")]
    PoolTooSmall {
        num_nodes: usize,
        required: usize,
        actual: usize,
    },
    #[error("idx format error at byte {offset}: {msg}")]
    IdxFormat { offset: usize, msg: String },
    #[error("partition file error: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One labeled sample. Binary labels are stored as {1, 0} and mapped to
/// {+1, -1} inside the loss; multiclass labels are 0..K-1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint<S> {
    pub features: Vec<S>,
    pub label: usize,
}

/// The local dataset one node owns.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDataset<S> {
    pub node_id: usize,
    pub points: Vec<LabeledPoint<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSource {
    Synthetic,
    IdxFiles,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionMeta {
    /// Node count N.
    #[serde(rename = "N")]
    pub num_nodes: usize,
    /// Points per node n (equal across nodes).
    pub n: usize,
    /// Feature dimension d.
    pub d: usize,
    /// Number of classes K.
    #[serde(rename = "K")]
    pub num_classes: usize,
    pub similarity_pct: u8,
    pub seed: u64,
    pub source: PartitionSource,
}

/// All node datasets of one experiment, with provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<S> {
    pub meta: PartitionMeta,
    pub node_datasets: Vec<NodeDataset<S>>,
}

impl<S: Scalar> Partition<S> {
    fn validate(&self) -> Result<(), DataError> {
        if self.node_datasets.len() != self.meta.num_nodes {
            return Err(DataError::Schema(format!(
                "header says {} nodes, found {}",
                self.meta.num_nodes,
                self.node_datasets.len()
            )));
        }
        for ds in &self.node_datasets {
            if ds.points.len() != self.meta.n {
                return Err(DataError::Schema(format!(
                    "node {} holds {} points, header says {}",
                    ds.node_id,
                    ds.points.len(),
                    self.meta.n
                )));
            }
            for pt in &ds.points {
                if pt.features.len() != self.meta.d {
                    return Err(DataError::Schema(format!(
                        "node {} has a point of dimension {}, header says {}",
                        ds.node_id,
                        pt.features.len(),
                        self.meta.d
                    )));
                }
                if pt.label >= self.meta.num_classes {
                    return Err(DataError::Schema(format!(
                        "node {} has label {} outside 0..{}",
                        ds.node_id, pt.label, self.meta.num_classes
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Synthetic two-feature Gaussian data: each node draws its mean once from
/// a uniform box, then samples `points_per_node` points around it. The first
/// half of the nodes is labeled 1, the second half 0.
pub fn gen_synthetic_gaussian<S: Scalar>(
    num_nodes: usize,
    points_per_node: usize,
    sigma: f64,
    seed: u64,
) -> Result<Partition<S>, DataError> {
    let (partition, _) = gen_synthetic_gaussian_with_test(
        num_nodes,
        points_per_node,
        sigma,
        seed,
        DEFAULT_MEAN_RANGE,
        0,
    )?;
    Ok(partition)
}

/// Like [`gen_synthetic_gaussian`] but also draws `test_per_node` held-out
/// points per node from the same node distributions. The training partition
/// is byte-identical for any `test_per_node` (test draws use a derived
/// stream).
pub fn gen_synthetic_gaussian_with_test<S: Scalar>(
    num_nodes: usize,
    points_per_node: usize,
    sigma: f64,
    seed: u64,
    mean_range: f64,
    test_per_node: usize,
) -> Result<(Partition<S>, Vec<LabeledPoint<S>>), DataError> {
    if num_nodes == 0 || !num_nodes.is_multiple_of(2) {
        return Err(DataError::InvalidParameter(format!(
            "synthetic generation needs an even positive node count, got {num_nodes}"
        )));
    }
    if points_per_node == 0 {
        return Err(DataError::InvalidParameter("points_per_node must be >= 1".into()));
    }
    if sigma < 0.0 {
        return Err(DataError::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if mean_range <= 0.0 {
        return Err(DataError::InvalidParameter(format!(
            "mean_range must be > 0, got {mean_range}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(num_nodes);
    let mut node_datasets = Vec::with_capacity(num_nodes);
    for node_id in 0..num_nodes {
        let mean = [
            rng.random_range(-mean_range..=mean_range),
            rng.random_range(-mean_range..=mean_range),
        ];
        means.push(mean);
        let label = if node_id < num_nodes / 2 { 1 } else { 0 };
        let points = draw_gaussian_points(&mut rng, mean, sigma, points_per_node, label);
        node_datasets.push(NodeDataset { node_id, points });
    }

    let mut test = Vec::with_capacity(num_nodes * test_per_node);
    if test_per_node > 0 {
        let mut test_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_da7a_5eed_0001);
        for (node_id, mean) in means.iter().enumerate() {
            let label = if node_id < num_nodes / 2 { 1 } else { 0 };
            test.extend(draw_gaussian_points(
                &mut test_rng,
                *mean,
                sigma,
                test_per_node,
                label,
            ));
        }
    }

    let partition = Partition {
        meta: PartitionMeta {
            num_nodes,
            n: points_per_node,
            d: 2,
            num_classes: 2,
            similarity_pct: 0,
            seed,
            source: PartitionSource::Synthetic,
        },
        node_datasets,
    };
    partition.validate()?;
    Ok((partition, test))
}

fn draw_gaussian_points<S: Scalar>(
    rng: &mut ChaCha8Rng,
    mean: [f64; 2],
    sigma: f64,
    count: usize,
    label: usize,
) -> Vec<LabeledPoint<S>> {
    let normal = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).expect("sigma validated"))
    } else {
        None
    };
    (0..count)
        .map(|_| {
            let features = mean
                .iter()
                .map(|&m| {
                    let offset = normal.as_ref().map_or(0.0, |d| d.sample(rng));
                    S::from_f64_c(m + offset)
                })
                .collect();
            LabeledPoint { features, label }
        })
        .collect()
}

/// Splits a point pool over `num_nodes` nodes at a similarity level `s`
/// in 0..=100: each node gets ceil(s% * n) points drawn without replacement
/// (per node) from a designated shared sub-pool, and the rest of its n =
/// floor(|pool| / N) points as one chunk of the remaining pool after label
/// sorting. s=100 is fully i.i.d., s=0 fully label-sorted. Leftover points
/// are discarded.
pub fn partition_by_similarity<S: Scalar>(
    pool: &[LabeledPoint<S>],
    num_nodes: usize,
    similarity_pct: u8,
    seed: u64,
) -> Result<Partition<S>, DataError> {
    if num_nodes == 0 {
        return Err(DataError::InvalidParameter("num_nodes must be >= 1".into()));
    }
    if similarity_pct > 100 {
        return Err(DataError::InvalidParameter(format!(
            "similarity_pct must be 0..=100, got {similarity_pct}"
        )));
    }
    let n = pool.len() / num_nodes;
    if n == 0 {
        return Err(DataError::PoolTooSmall {
            num_nodes,
            required: num_nodes,
            actual: pool.len(),
        });
    }
    let d = pool[0].features.len();
    let mut num_classes = 0;
    for pt in pool {
        if pt.features.len() != d {
            return Err(DataError::InvalidParameter(
                "pool has inconsistent feature dimensions".into(),
            ));
        }
        num_classes = num_classes.max(pt.label + 1);
    }

    let s = similarity_pct as usize;
    let n_shared = (s * n).div_ceil(100);
    let n_sorted = n - n_shared;
    let shared_total = (s * num_nodes * n).div_ceil(100);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng);
    let (shared_idx, rest_idx) = order.split_at(shared_total);

    // Stable sort keeps the shuffled order within each label, so chunk
    // contents stay seed-dependent.
    let mut sorted_rest: Vec<usize> = rest_idx.to_vec();
    sorted_rest.sort_by_key(|&i| pool[i].label);

    let mut node_datasets = Vec::with_capacity(num_nodes);
    for node_id in 0..num_nodes {
        let mut points = Vec::with_capacity(n);
        if n_shared > 0 {
            let picks = rand::seq::index::sample(&mut rng, shared_idx.len(), n_shared);
            points.extend(picks.iter().map(|k| pool[shared_idx[k]].clone()));
        }
        let chunk = &sorted_rest[node_id * n_sorted..(node_id + 1) * n_sorted];
        points.extend(chunk.iter().map(|&i| pool[i].clone()));
        node_datasets.push(NodeDataset { node_id, points });
    }

    let partition = Partition {
        meta: PartitionMeta {
            num_nodes,
            n,
            d,
            num_classes,
            similarity_pct,
            seed,
            source: PartitionSource::IdxFiles,
        },
        node_datasets,
    };
    partition.validate()?;
    Ok(partition)
}

/// (train, test) halves of a split pool.
pub type SplitPool<S> = (Vec<LabeledPoint<S>>, Vec<LabeledPoint<S>>);

/// Seeded shuffle of a pool followed by a held-out split: the first
/// ceil(test_frac * |pool|) shuffled points become the test set, the rest
/// the training pool.
pub fn shuffle_split_pool<S: Scalar>(
    mut pool: Vec<LabeledPoint<S>>,
    test_frac: f64,
    seed: u64,
) -> Result<SplitPool<S>, DataError> {
    if !(0.0..1.0).contains(&test_frac) {
        return Err(DataError::InvalidParameter(format!(
            "test_frac must lie in [0, 1), got {test_frac}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let test_count = (pool.len() as f64 * test_frac).ceil() as usize;
    let train = pool.split_off(test_count);
    Ok((train, pool))
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(bytes: &[u8], offset: usize, what: &str) -> Result<u32, DataError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(DataError::IdxFormat {
            offset,
            msg: format!("truncated file while reading {what}"),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Loads an IDX image/label file pair. Pixels are scaled to [0,1] and a
/// constant bias feature 1.0 is appended, so d = rows*cols + 1.
pub fn load_idx<S: Scalar>(
    images_path: &Path,
    labels_path: &Path,
) -> Result<Vec<LabeledPoint<S>>, DataError> {
    let images = fs::read(images_path)?;
    let labels = fs::read(labels_path)?;

    let magic = read_u32_be(&images, 0, "image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::IdxFormat {
            offset: 0,
            msg: format!("expected image magic 0x{IDX_IMAGES_MAGIC:08x}, got 0x{magic:08x}"),
        });
    }
    let count = read_u32_be(&images, 4, "image count")? as usize;
    let rows = read_u32_be(&images, 8, "row count")? as usize;
    let cols = read_u32_be(&images, 12, "column count")? as usize;
    let pixels = rows * cols;
    let expected = 16 + count * pixels;
    if images.len() < expected {
        return Err(DataError::IdxFormat {
            offset: images.len(),
            msg: format!("image data truncated: need {expected} bytes, have {}", images.len()),
        });
    }

    let label_magic = read_u32_be(&labels, 0, "label magic")?;
    if label_magic != IDX_LABELS_MAGIC {
        return Err(DataError::IdxFormat {
            offset: 0,
            msg: format!(
                "expected label magic 0x{IDX_LABELS_MAGIC:08x}, got 0x{label_magic:08x}"
            ),
        });
    }
    let label_count = read_u32_be(&labels, 4, "label count")? as usize;
    if label_count != count {
        return Err(DataError::IdxFormat {
            offset: 4,
            msg: format!("{count} images but {label_count} labels"),
        });
    }
    if labels.len() < 8 + count {
        return Err(DataError::IdxFormat {
            offset: labels.len(),
            msg: format!("label data truncated: need {} bytes, have {}", 8 + count, labels.len()),
        });
    }

    let inv = 1.0 / 255.0;
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * pixels;
        let mut features = Vec::with_capacity(pixels + 1);
        features.extend(
            images[start..start + pixels]
                .iter()
                .map(|&b| S::from_f64_c(f64::from(b) * inv)),
        );
        features.push(S::one());
        points.push(LabeledPoint {
            features,
            label: labels[8 + i] as usize,
        });
    }
    Ok(points)
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    header: PartitionMeta,
    nodes: Vec<Vec<Vec<f64>>>,
}

fn point_to_row<S: Scalar>(pt: &LabeledPoint<S>) -> Vec<f64> {
    let mut row: Vec<f64> = pt.features.iter().map(|&x| x.to_f64_c()).collect();
    row.push(pt.label as f64);
    row
}

fn row_to_point<S: Scalar>(row: &[f64]) -> Result<LabeledPoint<S>, DataError> {
    let (&label, features) = row.split_last().ok_or_else(|| {
        DataError::Schema("empty point row".into())
    })?;
    if label < 0.0 || label.fract() != 0.0 {
        return Err(DataError::Schema(format!("non-integer label {label}")));
    }
    Ok(LabeledPoint {
        features: features.iter().map(|&x| S::from_f64_c(x)).collect(),
        label: label as usize,
    })
}

/// Writes a partition as JSON: a header with the sizes and provenance, then
/// one array per node of `[features..., label]` rows.
pub fn save_partition<S: Scalar>(partition: &Partition<S>, path: &Path) -> Result<(), DataError> {
    partition.validate()?;
    let file = PartitionFile {
        header: partition.meta.clone(),
        nodes: partition
            .node_datasets
            .iter()
            .map(|ds| ds.points.iter().map(point_to_row).collect())
            .collect(),
    };
    fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

pub fn load_partition<S: Scalar>(path: &Path) -> Result<Partition<S>, DataError> {
    let file: PartitionFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let node_datasets = file
        .nodes
        .iter()
        .enumerate()
        .map(|(node_id, rows)| {
            Ok(NodeDataset {
                node_id,
                points: rows.iter().map(|r| row_to_point(r)).collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    let partition = Partition {
        meta: file.header,
        node_datasets,
    };
    partition.validate()?;
    Ok(partition)
}

#[derive(Serialize, Deserialize)]
struct PointsFile {
    d: usize,
    #[serde(rename = "K")]
    num_classes: usize,
    points: Vec<Vec<f64>>,
}

/// Writes a flat point list (held-out test splits) as JSON.
pub fn save_points<S: Scalar>(
    points: &[LabeledPoint<S>],
    num_classes: usize,
    path: &Path,
) -> Result<(), DataError> {
    let d = points.first().map_or(0, |p| p.features.len());
    let file = PointsFile {
        d,
        num_classes,
        points: points.iter().map(point_to_row).collect(),
    };
    fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

pub fn load_points<S: Scalar>(path: &Path) -> Result<(Vec<LabeledPoint<S>>, usize), DataError> {
    let file: PointsFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let points = file
        .points
        .iter()
        .map(|r| row_to_point(r))
        .collect::<Result<Vec<LabeledPoint<S>>, _>>()?;
    for pt in &points {
        if pt.features.len() != file.d || pt.label >= file.num_classes {
            return Err(DataError::Schema("point inconsistent with header".into()));
        }
    }
    Ok((points, file.num_classes))
}
