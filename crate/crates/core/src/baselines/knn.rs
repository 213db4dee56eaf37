use super::check_points;
use crate::error::{Error, Result};

const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Brute-force neighbor index for the nearest-neighbor distance-ratio score.
///
/// For a query `x`, the numerator is the mean distance to its `k` nearest
/// training points. The nearest of those anchors the denominator: the mean
/// distance from the anchor to its own `k` nearest training points,
/// excluding itself. Ties in distance go to the lower training index.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    points: Vec<f64>,
    dim: usize,
    k: usize,
    /// Self-excluded mean k-NN distance of every training point.
    anchor_scale: Vec<f64>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    super::squared_distance(a, b).sqrt()
}

impl KnnIndex {
    pub fn new(points: &[&[f64]], k: usize) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("k-NN index needs training points"));
        }
        if k == 0 || k >= n {
            return Err(Error::invalid(format!(
                "k = {k} must lie in 1..{n} for {n} training points"
            )));
        }
        let dim = points[0].len();
        check_points(points, dim)?;
        let mut index = Self {
            points: points.iter().flat_map(|p| p.iter().copied()).collect(),
            dim,
            k,
            anchor_scale: Vec::new(),
        };
        index.anchor_scale = (0..n)
            .map(|i| {
                let nn = index.nearest(index.point(i), Some(i));
                mean(nn.iter().map(|&(d, _)| d))
            })
            .collect();
        Ok(index)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.anchor_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchor_scale.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// The `k` nearest training points as `(distance, index)`, ascending.
    fn nearest(&self, x: &[f64], exclude: Option<usize>) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.dim)
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, p)| (distance(x, p), i))
            .collect();
        let by_distance_then_index =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if all.len() > self.k {
            all.select_nth_unstable_by(self.k - 1, by_distance_then_index);
            all.truncate(self.k);
        }
        all.sort_by(by_distance_then_index);
        all
    }

    pub fn point_score(&self, x: &[f64]) -> Result<f64> {
        check_points(&[x], self.dim)?;
        let nn = self.nearest(x, None);
        let numerator = mean(nn.iter().map(|&(d, _)| d));
        let anchor = nn[0].1;
        Ok(numerator / self.anchor_scale[anchor].max(DENOMINATOR_FLOOR))
    }

    /// Mean of the per-point scores.
    pub fn novelty_score(&self, points: &[&[f64]]) -> Result<f64> {
        check_points(points, self.dim)?;
        let scores = points
            .iter()
            .map(|p| self.point_score(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean(scores.into_iter()))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}
