//! Seeded differentiable surrogate detector and the max-IoU detection loss.
//!
//! Three 3x3 convolution banks (tanh, tanh, linear) map the image to a
//! single objectness map at stride `prod(strides)`. Anchors of several sizes
//! are centered on every map cell; an anchor's confidence is
//! `sigmoid(GAIN * (inside_mean - global_mean)^2 + BIAS)`,
//! so a region that stands out from the rest of the frame in feature space is
//! detected and a featureless frame is not. Convolutions replicate edge pixels, which keeps
//! a uniform image uniform in every layer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::image::Image;
use crate::math;
use crate::rng::CounterRng;
use crate::scene::GroundTruthBox;
use crate::{Error, Result};

pub const HIDDEN_CHANNELS: usize = 6;
pub const SCORE_GAIN: f64 = 200.0;
pub const SCORE_BIAS: f64 = -3.5;

/// `[xmin, ymin, xmax, ymax]` in pixels.
pub type Rect = [f64; 4];

/// Serializable detector description; weights are regenerated from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub seed: u64,
    /// Stride of each of the three convolution layers.
    pub strides: [usize; 3],
    /// Anchor side lengths in pixels.
    pub scales: Vec<f64>,
    /// Minimum confidence for a reported detection.
    pub threshold: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec {
            seed: 0,
            strides: [2, 2, 1],
            scales: vec![16.0, 32.0, 48.0],
            threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ConvLayer {
    in_c: usize,
    out_c: usize,
    stride: usize,
    /// `[out][in][ky][kx]`
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Tensor {
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Tensor {
    fn zeros(c: usize, h: usize, w: usize) -> Self {
        Tensor {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    #[inline]
    fn idx(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.h + y) * self.w + x
    }
}

#[inline]
fn tap(o: usize, stride: usize, k: usize, n: usize) -> usize {
    ((o * stride + k) as isize - 1).clamp(0, n as isize - 1) as usize
}

impl ConvLayer {
    fn random(in_c: usize, out_c: usize, stride: usize, rng: &mut CounterRng) -> Self {
        let fan_in = (in_c * 9) as f64;
        let limit = 1.5 * math::sqrt(3.0 / fan_in);
        let weights = (0..out_c * in_c * 9).map(|_| rng.uniform(-limit, limit)).collect();
        let bias = (0..out_c).map(|_| rng.uniform(-0.1, 0.1)).collect();
        ConvLayer {
            in_c,
            out_c,
            stride,
            weights,
            bias,
        }
    }

    #[inline]
    fn w(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_c + i) * 3 + ky) * 3 + kx]
    }

    fn forward(&self, input: &Tensor) -> Tensor {
        let (oh, ow) = (input.h / self.stride, input.w / self.stride);
        let mut out = Tensor::zeros(self.out_c, oh, ow);
        for o in 0..self.out_c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = self.bias[o];
                    for i in 0..self.in_c {
                        for ky in 0..3 {
                            let iy = tap(oy, self.stride, ky, input.h);
                            for kx in 0..3 {
                                let ix = tap(ox, self.stride, kx, input.w);
                                acc += self.w(o, i, ky, kx) * input.data[input.idx(i, iy, ix)];
                            }
                        }
                    }
                    let k = out.idx(o, oy, ox);
                    out.data[k] = acc;
                }
            }
        }
        out
    }

    /// Input gradient for an output gradient.
    fn backward(&self, input: &Tensor, grad_out: &Tensor) -> Tensor {
        let mut grad_in = Tensor::zeros(input.c, input.h, input.w);
        for o in 0..self.out_c {
            for oy in 0..grad_out.h {
                for ox in 0..grad_out.w {
                    let g = grad_out.data[grad_out.idx(o, oy, ox)];
                    if g == 0.0 {
                        continue;
                    }
                    for i in 0..self.in_c {
                        for ky in 0..3 {
                            let iy = tap(oy, self.stride, ky, input.h);
                            for kx in 0..3 {
                                let ix = tap(ox, self.stride, kx, input.w);
                                let k = grad_in.idx(i, iy, ix);
                                grad_in.data[k] += self.w(o, i, ky, kx) * g;
                            }
                        }
                    }
                }
            }
        }
        grad_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: Rect,
    pub confidence: f64,
    pub class_id: u32,
    /// Anchor that produced this detection.
    pub anchor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDetector {
    pub spec: DetectorSpec,
    pub class_id: u32,
    layers: [ConvLayer; 3],
}

#[derive(Debug, Clone, Copy)]
struct Anchor {
    bbox: Rect,
    /// Inclusive map-cell range `[x0, y0, x1, y1]`.
    cells: [usize; 4],
}

/// Intermediate activations kept for the backward pass.
struct Trace {
    input: Tensor,
    act1: Tensor,
    act2: Tensor,
    map: Tensor,
    global_mean: f64,
    anchors: Vec<Anchor>,
    confidences: Vec<f64>,
    inside_means: Vec<f64>,
}

impl SurrogateDetector {
    pub fn new(spec: DetectorSpec) -> Result<Self> {
        if spec.strides.iter().any(|s| *s == 0) {
            return Err(Error::invalid("detector.strides", "strides must be >= 1"));
        }
        if spec.scales.is_empty() || !spec.scales.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid("detector.scales", "need at least one positive scale"));
        }
        if !(0.0..1.0).contains(&spec.threshold) {
            return Err(Error::invalid("detector.threshold", "must lie in [0, 1)"));
        }
        let mut rng = CounterRng::new(spec.seed);
        let layers = [
            ConvLayer::random(3, HIDDEN_CHANNELS, spec.strides[0], &mut rng),
            ConvLayer::random(HIDDEN_CHANNELS, HIDDEN_CHANNELS, spec.strides[1], &mut rng),
            ConvLayer::random(HIDDEN_CHANNELS, 1, spec.strides[2], &mut rng),
        ];
        Ok(SurrogateDetector {
            spec,
            class_id: 0,
            layers,
        })
    }

    /// Pixel stride of one objectness cell.
    pub fn total_stride(&self) -> usize {
        self.spec.strides.iter().product()
    }

    fn check_image(&self, image: &Image) -> Result<()> {
        let s = self.total_stride();
        if image.width == 0 || image.height == 0 || image.width % s != 0 || image.height % s != 0 {
            return Err(Error::DimensionMismatch(format!(
                "image {}x{} is not divisible by the anchor stride {}",
                image.width, image.height, s
            )));
        }
        if !image.is_finite() {
            return Err(Error::NonFinite("detector input".into()));
        }
        Ok(())
    }

    fn anchors(&self, width: usize, height: usize) -> Vec<Anchor> {
        let s = self.total_stride() as f64;
        let (fw, fh) = (width / self.total_stride(), height / self.total_stride());
        let (wf, hf) = (width as f64, height as f64);
        let cell_range = |lo: f64, hi: f64, n: usize| {
            let a = libm::ceil(lo / s - 0.5).max(0.0) as usize;
            let b = (math::floor(hi / s - 0.5).max(0.0) as usize).min(n - 1);
            (a.min(b), b)
        };
        let mut out = Vec::with_capacity(fw * fh * self.spec.scales.len());
        for fy in 0..fh {
            for fx in 0..fw {
                let (cx, cy) = ((fx as f64 + 0.5) * s, (fy as f64 + 0.5) * s);
                for scale in &self.spec.scales {
                    let half = 0.5 * scale;
                    let bbox = [
                        (cx - half).max(0.0),
                        (cy - half).max(0.0),
                        (cx + half).min(wf),
                        (cy + half).min(hf),
                    ];
                    let (x0, x1) = cell_range(bbox[0], bbox[2], fw);
                    let (y0, y1) = cell_range(bbox[1], bbox[3], fh);
                    out.push(Anchor {
                        bbox,
                        cells: [x0, y0, x1, y1],
                    });
                }
            }
        }
        out
    }

    fn forward(&self, image: &Image) -> Result<Trace> {
        self.check_image(image)?;
        let (w, h) = (image.width, image.height);
        let mut input = Tensor::zeros(3, h, w);
        for y in 0..h {
            for x in 0..w {
                let p = image.pixel(x, y);
                for c in 0..3 {
                    let k = input.idx(c, y, x);
                    input.data[k] = p[c] - 0.5;
                }
            }
        }
        let mut act1 = self.layers[0].forward(&input);
        act1.data.iter_mut().for_each(|v| *v = math::tanh(*v));
        let mut act2 = self.layers[1].forward(&act1);
        act2.data.iter_mut().for_each(|v| *v = math::tanh(*v));
        let map = self.layers[2].forward(&act2);

        let (fw, fh) = (map.w, map.h);
        let global_mean = map.data.iter().sum::<f64>() / (fw * fh) as f64;
        // Summed-area table with a zero border row/column.
        let mut sat = vec![0.0; (fw + 1) * (fh + 1)];
        for y in 0..fh {
            let mut row = 0.0;
            for x in 0..fw {
                row += map.data[y * fw + x];
                sat[(y + 1) * (fw + 1) + x + 1] = sat[y * (fw + 1) + x + 1] + row;
            }
        }
        let anchors = self.anchors(w, h);
        let mut confidences = Vec::with_capacity(anchors.len());
        let mut inside_means = Vec::with_capacity(anchors.len());
        for a in &anchors {
            let [x0, y0, x1, y1] = a.cells;
            let sum = sat[(y1 + 1) * (fw + 1) + x1 + 1] - sat[y0 * (fw + 1) + x1 + 1] - sat[(y1 + 1) * (fw + 1) + x0]
                + sat[y0 * (fw + 1) + x0];
            let n = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
            let inside = sum / n;
            let d = inside - global_mean;
            inside_means.push(inside);
            confidences.push(math::sigmoid(SCORE_GAIN * d * d + SCORE_BIAS));
        }
        Ok(Trace {
            input,
            act1,
            act2,
            map,
            global_mean,
            anchors,
            confidences,
            inside_means,
        })
    }

    /// Objectness map (row-major, `width / stride` by `height / stride`).
    pub fn objectness_map(&self, image: &Image) -> Result<Vec<f64>> {
        Ok(self.forward(image)?.map.data)
    }

    /// Confidence of every anchor, in anchor order.
    pub fn anchor_confidences(&self, image: &Image) -> Result<Vec<f64>> {
        Ok(self.forward(image)?.confidences)
    }

    pub fn anchor_box(&self, width: usize, height: usize, anchor: usize) -> Option<Rect> {
        self.anchors(width, height).get(anchor).map(|a| a.bbox)
    }

    fn detections_from(&self, trace: &Trace) -> Vec<Detection> {
        let mut dets: Vec<Detection> = trace
            .confidences
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > self.spec.threshold)
            .map(|(i, c)| Detection {
                bbox: trace.anchors[i].bbox,
                confidence: *c,
                class_id: self.class_id,
                anchor: i,
            })
            .collect();
        dets.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.anchor.cmp(&b.anchor)));
        dets
    }

    /// Anchors above threshold, by descending confidence then anchor index.
    pub fn detect(&self, image: &Image) -> Result<Vec<Detection>> {
        Ok(self.detections_from(&self.forward(image)?))
    }

    fn backward_confidence(&self, trace: &Trace, anchor: usize, upstream: f64) -> Image {
        let a = &trace.anchors[anchor];
        let conf = trace.confidences[anchor];
        let d = trace.inside_means[anchor] - trace.global_mean;
        let dsig = upstream * conf * (1.0 - conf);
        let dcontrast = dsig * SCORE_GAIN * 2.0 * d;

        let map = &trace.map;
        let total = (map.w * map.h) as f64;
        let [x0, y0, x1, y1] = a.cells;
        let n_in = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
        let mut g_map = Tensor::zeros(1, map.h, map.w);
        for y in 0..map.h {
            for x in 0..map.w {
                let inside = (x0..=x1).contains(&x) && (y0..=y1).contains(&y);
                let mut g = -dcontrast / total;
                if inside {
                    g += dcontrast / n_in;
                }
                g_map.data[y * map.w + x] = g;
            }
        }
        let mut g2 = self.layers[2].backward(&trace.act2, &g_map);
        for (g, a) in g2.data.iter_mut().zip(&trace.act2.data) {
            *g *= 1.0 - a * a;
        }
        let mut g1 = self.layers[1].backward(&trace.act1, &g2);
        for (g, a) in g1.data.iter_mut().zip(&trace.act1.data) {
            *g *= 1.0 - a * a;
        }
        let g0 = self.layers[0].backward(&trace.input, &g1);
        let (w, h) = (trace.input.w, trace.input.h);
        let mut out = Image::new(w, h);
        for y in 0..h {
            for x in 0..w {
                out.set_pixel(
                    x,
                    y,
                    [g0.data[g0.idx(0, y, x)], g0.data[g0.idx(1, y, x)], g0.data[g0.idx(2, y, x)]],
                );
            }
        }
        out
    }

    /// `d confidence(anchor) / d pixels`.
    pub fn confidence_gradient(&self, image: &Image, anchor: usize) -> Result<Image> {
        let trace = self.forward(image)?;
        if anchor >= trace.anchors.len() {
            return Err(Error::IndexOutOfRange {
                index: anchor,
                len: trace.anchors.len(),
            });
        }
        Ok(self.backward_confidence(&trace, anchor, 1.0))
    }

    /// Detection loss on `image` and its pixel gradient. The max-IoU
    /// selection is held fixed; a frame with no overlapping detection has
    /// zero loss and zero gradient.
    pub fn loss_gradient(&self, image: &Image, gt: &GroundTruthBox) -> Result<(LossSelection, Image)> {
        let trace = self.forward(image)?;
        let dets = self.detections_from(&trace);
        let sel = detection_loss(&dets, gt)?;
        let grad = match sel.index {
            Some(i) => self.backward_confidence(&trace, dets[i].anchor, 1.0),
            None => Image::new(image.width, image.height),
        };
        Ok((sel, grad))
    }

    /// Detection loss without the backward pass.
    pub fn loss(&self, image: &Image, gt: &GroundTruthBox) -> Result<LossSelection> {
        detection_loss(&self.detect(image)?, gt)
    }
}

fn check_rect(r: &Rect, what: &str) -> Result<()> {
    if !r.iter().all(|v| v.is_finite()) || r[0] >= r[2] || r[1] >= r[3] {
        return Err(Error::Degenerate(format!("{what} box {r:?}")));
    }
    Ok(())
}

pub fn iou(a: &Rect, b: &Rect) -> Result<f64> {
    check_rect(a, "first")?;
    check_rect(b, "second")?;
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let area = |r: &Rect| (r[2] - r[0]) * (r[3] - r[1]);
    let union = area(a) + area(b) - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSelection {
    pub loss: f64,
    /// Position in the detection list, `None` when nothing overlaps.
    pub index: Option<usize>,
}

impl LossSelection {
    /// Index with `-1` for the no-overlap sentinel.
    pub fn signed_index(&self) -> i64 {
        self.index.map_or(-1, |i| i as i64)
    }
}

/// Confidence of the correct-class detection with maximal IoU against `gt`
/// (lowest index on ties).
pub fn detection_loss(dets: &[Detection], gt: &GroundTruthBox) -> Result<LossSelection> {
    let gt_rect = gt.rect();
    check_rect(&gt_rect, "ground-truth")?;
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in dets.iter().enumerate() {
        if d.class_id != gt.class_id {
            continue;
        }
        let v = iou(&gt_rect, &d.bbox)?;
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    Ok(match best {
        Some((i, _)) => LossSelection {
            loss: dets[i].confidence,
            index: Some(i),
        },
        None => LossSelection { loss: 0.0, index: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(bbox: Rect, confidence: f64) -> Detection {
        Detection {
            bbox,
            confidence,
            class_id: 0,
            anchor: 0,
        }
    }

    fn gt(r: Rect) -> GroundTruthBox {
        GroundTruthBox {
            xmin: r[0],
            ymin: r[1],
            xmax: r[2],
            ymax: r[3],
            class_id: 0,
        }
    }

    #[test]
    fn iou_cases() {
        let a = [0.0, 0.0, 2.0, 2.0];
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &[5.0, 5.0, 6.0, 6.0]).unwrap(), 0.0);
        assert!((iou(&a, &[1.0, 1.0, 3.0, 3.0]).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert!(iou(&a, &[1.0, 1.0, 1.0, 3.0]).is_err());
    }

    #[test]
    fn loss_selection_rules() {
        let g = gt([0.0, 0.0, 10.0, 10.0]);
        let one = [det([0.0, 0.0, 5.0, 5.0], 0.9)];
        let s = detection_loss(&one, &g).unwrap();
        assert_eq!((s.loss, s.index), (0.9, Some(0)));

        let s = detection_loss(&[], &g).unwrap();
        assert_eq!((s.loss, s.signed_index()), (0.0, -1));

        let far = [det([20.0, 20.0, 30.0, 30.0], 0.9)];
        assert_eq!(detection_loss(&far, &g).unwrap().index, None);

        let mut other_class = one;
        other_class[0].class_id = 3;
        assert_eq!(detection_loss(&other_class, &g).unwrap().index, None);

        assert!(detection_loss(&one, &gt([1.0, 0.0, 1.0, 4.0])).is_err());
    }

    #[test]
    fn tie_break_matches_brute_force() {
        let g = gt([0.0, 0.0, 10.0, 10.0]);
        // IoUs 0.2, 0.7, 0.7 by construction.
        let dets = [
            det([0.0, 0.0, 10.0, 2.0], 0.3),
            det([0.0, 0.0, 10.0, 7.0], 0.6),
            det([0.0, 3.0, 10.0, 10.0], 0.8),
        ];
        let ious: Vec<f64> = dets.iter().map(|d| iou(&g.rect(), &d.bbox).unwrap()).collect();
        assert!((ious[0] - 0.2).abs() < 1e-12 && (ious[1] - 0.7).abs() < 1e-12);
        assert_eq!(ious[1], ious[2]);
        let mut brute = 0;
        for i in 0..dets.len() {
            if ious[i] > ious[brute] {
                brute = i;
            }
        }
        let s = detection_loss(&dets, &g).unwrap();
        assert_eq!(s.index, Some(brute));
        assert_eq!(s.index, Some(1));
        assert_eq!(s.loss, 0.6);
    }

    fn textured(w: usize, h: usize, phase: f64) -> Image {
        let mut img = Image::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let inside = (8..24).contains(&x) && (10..22).contains(&y);
                let base = if inside { 0.8 } else { 0.3 };
                let t = 0.1 * libm::sin(0.7 * x as f64 + phase) * libm::cos(0.5 * y as f64);
                img.set_pixel(x, y, [base + t, 0.5 - t, (base * 0.5 + t).abs()]);
            }
        }
        img
    }

    #[test]
    fn deterministic_and_non_constant() {
        let d = SurrogateDetector::new(DetectorSpec::default()).unwrap();
        let d2 = SurrogateDetector::new(DetectorSpec::default()).unwrap();
        let img = textured(32, 32, 0.0);
        assert_eq!(d.detect(&img).unwrap(), d2.detect(&img).unwrap());
        assert_eq!(d.anchor_confidences(&img).unwrap(), d2.anchor_confidences(&img).unwrap());
        let flat = d.anchor_confidences(&Image::filled(32, 32, [0.5; 3])).unwrap();
        assert_ne!(d.anchor_confidences(&img).unwrap(), flat);
        assert_ne!(d.anchor_confidences(&img).unwrap(), d.anchor_confidences(&textured(32, 32, 1.3)).unwrap());
    }

    #[test]
    fn uniform_frame_detects_nothing() {
        let d = SurrogateDetector::new(DetectorSpec::default()).unwrap();
        assert!(d.detect(&Image::filled(32, 32, [0.4, 0.5, 0.6])).unwrap().is_empty());
    }

    #[test]
    fn rejects_indivisible_image() {
        let d = SurrogateDetector::new(DetectorSpec::default()).unwrap();
        assert!(matches!(d.detect(&Image::new(30, 32)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn confidence_gradient_matches_finite_differences() {
        let d = SurrogateDetector::new(DetectorSpec {
            seed: 11,
            ..DetectorSpec::default()
        })
        .unwrap();
        let img = textured(32, 32, 0.4);
        let confs = d.anchor_confidences(&img).unwrap();
        let top = (0..confs.len()).max_by(|a, b| confs[*a].total_cmp(&confs[*b])).unwrap();
        let grad = d.confidence_gradient(&img, top).unwrap();
        let h = 1e-3;
        let mut checked = 0;
        for k in (0..img.data.len()).step_by(7) {
            let mut p = img.clone();
            p.data[k] += h;
            let mut m = img.clone();
            m.data[k] -= h;
            let fd = (d.anchor_confidences(&p).unwrap()[top] - d.anchor_confidences(&m).unwrap()[top]) / (2.0 * h);
            let an = grad.data[k];
            if an.abs() > 1e-6 {
                checked += 1;
                assert!((fd - an).abs() / an.abs() < 1e-3, "pixel {k}: fd {fd} vs {an}");
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn sentinel_frame_has_zero_gradient() {
        let d = SurrogateDetector::new(DetectorSpec::default()).unwrap();
        let img = Image::filled(32, 32, [0.5; 3]);
        let (sel, grad) = d.loss_gradient(&img, &gt([2.0, 2.0, 10.0, 10.0])).unwrap();
        assert_eq!(sel.index, None);
        assert!(grad.data.iter().all(|v| *v == 0.0));
    }
}
