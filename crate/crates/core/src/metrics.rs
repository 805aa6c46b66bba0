//! Region and boundary evaluation for binary masks.
//!
//! Boundary convention, pinned for reproducible values: a boundary pixel
//! is a foreground pixel with at least one background 4-neighbor, where
//! pixels beyond the image border count as background (so foreground on
//! the border is always boundary). Distances are Euclidean in pixels.
//!
//! Degenerate inputs never panic. With exactly one empty mask the
//! distance metrics return the image diagonal `hypot(h, w)` and the
//! boundary ratios return 0; with both masks empty the distance metrics
//! return 0 and the boundary ratios their perfect value. Region metrics
//! with an empty denominator return 100 (vacuously perfect).

use crate::error::{Error, Result};
use crate::tensor::BinaryMask;

/// Pixel confusion counts for the foreground class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    /// Counts for the background class: swap the roles of the classes.
    pub fn complement(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::ShapeMismatch(format!(
            "confusion: pred {}x{} vs gt {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    let mut c = ConfusionCounts {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for (p, g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 1) => c.fn_ += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

/// Region metrics in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMetrics {
    pub miou: f64,
    pub pa: f64,
    pub recall: f64,
    pub precision: f64,
    pub dsc: f64,
}

fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        100.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// mIoU averages the foreground and background class IoUs; the remaining
/// metrics are foreground-only.
pub fn region_metrics(fg: &ConfusionCounts, bg: &ConfusionCounts) -> RegionMetrics {
    let iou_fg = pct(fg.tp, fg.tp + fg.fp + fg.fn_);
    let iou_bg = pct(bg.tp, bg.tp + bg.fp + bg.fn_);
    RegionMetrics {
        miou: 0.5 * (iou_fg + iou_bg),
        pa: pct(fg.tp + fg.tn, fg.total()),
        recall: pct(fg.tp, fg.tp + fg.fn_),
        precision: pct(fg.tp, fg.tp + fg.fp),
        dsc: pct(2 * fg.tp, 2 * fg.tp + fg.fp + fg.fn_),
    }
}

/// Pixels on a mask's inner boundary, in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySet {
    points: Vec<(u32, u32)>,
}

impl BoundarySet {
    pub fn points(&self) -> &[(u32, u32)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

pub fn boundary_extract(m: &BinaryMask) -> BoundarySet {
    let (h, w) = (m.height(), m.width());
    let mut points = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !m.get(r, c) {
                continue;
            }
            let edge = r == 0
                || c == 0
                || r == h - 1
                || c == w - 1
                || !m.get(r - 1, c)
                || !m.get(r + 1, c)
                || !m.get(r, c - 1)
                || !m.get(r, c + 1);
            if edge {
                points.push((r as u32, c as u32));
            }
        }
    }
    BoundarySet { points }
}

/// Exact Euclidean distances from every grid cell to the nearest
/// boundary pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DistanceField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Two-pass exact Euclidean distance transform over squared distances
/// (column pass, then lower-envelope-of-parabolas row pass). All squared
/// distances are integers below 2^31, so the result matches a brute-force
/// nearest-site scan bit for bit.
pub fn distance_field(b: &BoundarySet, height: usize, width: usize) -> Result<DistanceField> {
    if b.is_empty() {
        return Err(Error::Degenerate("distance field of empty boundary".into()));
    }
    const INF: f64 = 1e18;
    // Column pass: per cell, squared distance to the nearest site in its column.
    let mut colsq = vec![INF; height * width];
    for &(r, c) in &b.points {
        colsq[r as usize * width + c as usize] = 0.0;
    }
    for c in 0..width {
        let mut last = INF; // squared distance accumulated downward
        let mut steps = 0i64;
        for r in 0..height {
            let i = r * width + c;
            if colsq[i] == 0.0 {
                last = 0.0;
                steps = 0;
            } else if last < INF {
                steps += 1;
                let cand = (steps * steps) as f64;
                if cand < colsq[i] {
                    colsq[i] = cand;
                }
                last = colsq[i];
            }
        }
        last = INF;
        steps = 0;
        for r in (0..height).rev() {
            let i = r * width + c;
            if colsq[i] == 0.0 {
                last = 0.0;
                steps = 0;
            } else if last < INF {
                steps += 1;
                let cand = (steps * steps) as f64;
                if cand < colsq[i] {
                    colsq[i] = cand;
                }
                last = colsq[i];
            }
        }
    }
    // Row pass: 1D squared-distance transform with additive offsets colsq.
    let mut out = vec![0.0f64; height * width];
    let mut v = vec![0usize; width]; // parabola sites
    let mut z = vec![0.0f64; width + 1]; // envelope breakpoints
    for r in 0..height {
        let f = |q: usize| colsq[r * width + q];
        let mut k = 0usize;
        v[0] = 0;
        z[0] = -INF;
        z[1] = INF;
        for q in 1..width {
            if f(q) >= INF {
                continue;
            }
            let mut s;
            loop {
                let p = v[k];
                s = ((f(q) + (q * q) as f64) - (f(p) + (p * p) as f64)) / (2 * q - 2 * p) as f64;
                if s <= z[k] {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                } else {
                    break;
                }
            }
            if f(v[k]) >= INF {
                // Only unreachable columns seen so far; replace.
                v[k] = q;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
            }
        }
        let mut k = 0usize;
        for q in 0..width {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let p = v[k];
            let d = q as f64 - p as f64;
            out[r * width + q] = (d * d + f(p)).sqrt();
        }
    }
    Ok(DistanceField {
        height,
        width,
        data: out,
    })
}

/// Linear-interpolation percentile of an unsorted sample; `q` in [0, 100].
fn percentile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = q / 100.0 * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        values[lo]
    } else {
        values[lo] + (rank - lo as f64) * (values[hi] - values[lo])
    }
}

fn diagonal(h: usize, w: usize) -> f64 {
    ((h * h + w * w) as f64).sqrt()
}

fn check_shapes(pred: &BinaryMask, gt: &BinaryMask, what: &str) -> Result<()> {
    if pred.height() != gt.height() || pred.width() != gt.width() {
        return Err(Error::ShapeMismatch(format!(
            "{what}: pred {}x{} vs gt {}x{}",
            pred.height(),
            pred.width(),
            gt.height(),
            gt.width()
        )));
    }
    Ok(())
}

/// Distances from each point of `from` to the nearest point of the set
/// behind `field`.
fn directed_distances(from: &BoundarySet, field: &DistanceField) -> Vec<f64> {
    from.points()
        .iter()
        .map(|&(r, c)| field.get(r as usize, c as usize))
        .collect()
}

/// 95th percentile of the pooled symmetric boundary-distance multiset.
pub fn hd95(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_shapes(pred, gt, "hd95")?;
    let bp = boundary_extract(pred);
    let bg = boundary_extract(gt);
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(diagonal(gt.height(), gt.width())),
        _ => {}
    }
    let fp = distance_field(&bp, pred.height(), pred.width())?;
    let fg = distance_field(&bg, gt.height(), gt.width())?;
    let mut pooled = directed_distances(&bg, &fp);
    pooled.extend(directed_distances(&bp, &fg));
    Ok(percentile(&mut pooled, 95.0))
}

/// Symmetric mean of the two directed average surface distances.
pub fn assd(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_shapes(pred, gt, "assd")?;
    let bp = boundary_extract(pred);
    let bg = boundary_extract(gt);
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(diagonal(gt.height(), gt.width())),
        _ => {}
    }
    let fp = distance_field(&bp, pred.height(), pred.width())?;
    let fg = distance_field(&bg, gt.height(), gt.width())?;
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let g_to_p = mean(directed_distances(&bg, &fp));
    let p_to_g = mean(directed_distances(&bp, &fg));
    Ok(0.5 * (g_to_p + p_to_g))
}

/// Boundary precision/recall/F1 in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Fraction of each boundary within `delta` pixels of the other, as
/// percentages; F1 is their harmonic mean (0 when both vanish).
pub fn boundary_prf(pred: &BinaryMask, gt: &BinaryMask, delta: f64) -> Result<BoundaryPrf> {
    check_shapes(pred, gt, "boundary_prf")?;
    let bp = boundary_extract(pred);
    let bg = boundary_extract(gt);
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => {
            return Ok(BoundaryPrf {
                precision: 100.0,
                recall: 100.0,
                f1: 100.0,
            })
        }
        (true, false) | (false, true) => {
            return Ok(BoundaryPrf {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            })
        }
        _ => {}
    }
    let fp = distance_field(&bp, pred.height(), pred.width())?;
    let fg = distance_field(&bg, gt.height(), gt.width())?;
    let within = |dists: Vec<f64>| {
        let hits = dists.iter().filter(|d| **d <= delta).count();
        100.0 * hits as f64 / dists.len() as f64
    };
    let recall = within(directed_distances(&bg, &fp));
    let precision = within(directed_distances(&bp, &fg));
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BoundaryPrf {
        precision,
        recall,
        f1,
    })
}

/// IoU of the two r-dilated boundary bands, in [0, 1]. A band is the set
/// of grid cells whose distance to the boundary is at most `r`.
pub fn biou(pred: &BinaryMask, gt: &BinaryMask, r: f64) -> Result<f64> {
    check_shapes(pred, gt, "biou")?;
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("biou radius {r} < 0")));
    }
    let bp = boundary_extract(pred);
    let bg = boundary_extract(gt);
    match (bp.is_empty(), bg.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let fp = distance_field(&bp, pred.height(), pred.width())?;
    let fg = distance_field(&bg, gt.height(), gt.width())?;
    let mut inter = 0u64;
    let mut union = 0u64;
    for (dp, dg) in fp.data().iter().zip(fg.data()) {
        let in_p = *dp <= r;
        let in_g = *dg <= r;
        if in_p && in_g {
            inter += 1;
        }
        if in_p || in_g {
            union += 1;
        }
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Every metric for one prediction/ground-truth pair: region metrics in
/// percent, distances in pixels, boundary P/R/F1 and BIoU as fractions
/// (the rendering layer multiplies by 100 where tables want percent).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub miou: f64,
    pub pa: f64,
    pub recall: f64,
    pub precision: f64,
    pub dsc: f64,
    pub hd95: f64,
    pub assd: f64,
    /// (delta, precision, recall, f1) fractions per tolerance.
    pub boundary: Vec<(f64, f64, f64, f64)>,
    pub biou: f64,
}

pub const BOUNDARY_DELTAS: [f64; 3] = [2.0, 5.0, 10.0];
pub const BIOU_RADIUS: f64 = 2.0;

pub fn metric_row(pred: &BinaryMask, gt: &BinaryMask) -> Result<MetricRow> {
    let fg = confusion(pred, gt)?;
    let region = region_metrics(&fg, &fg.complement());
    let mut boundary = Vec::with_capacity(BOUNDARY_DELTAS.len());
    for delta in BOUNDARY_DELTAS {
        let prf = boundary_prf(pred, gt, delta)?;
        boundary.push((
            delta,
            prf.precision / 100.0,
            prf.recall / 100.0,
            prf.f1 / 100.0,
        ));
    }
    Ok(MetricRow {
        miou: region.miou,
        pa: region.pa,
        recall: region.recall,
        precision: region.precision,
        dsc: region.dsc,
        hd95: hd95(pred, gt)?,
        assd: assd(pred, gt)?,
        boundary,
        biou: biou(pred, gt, BIOU_RADIUS)?,
    })
}
