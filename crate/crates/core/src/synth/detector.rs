use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scene::DetectorSpec;
use super::GroundTruth;
use crate::frameio::{BBox, Detection};

/// Per-frame generator: one ChaCha stream per (seed, frame, purpose), so
/// frames can be produced in any order.
pub(crate) fn frame_rng(seed: u64, keyframe_id: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(keyframe_id.wrapping_mul(4).wrapping_add(purpose));
    rng
}

pub(crate) const DEPTH_STREAM: u64 = 0;
const DETECTOR_STREAM: u64 = 1;

fn jittered(b: BBox, jitter: f64, rng: &mut ChaCha8Rng) -> BBox {
    if jitter <= 0.0 {
        return b;
    }
    let mut j = |v: f64| v + rng.random_range(-jitter..=jitter);
    let (x0, y0, x1, y1) = (j(b.xmin), j(b.ymin), j(b.xmax), j(b.ymax));
    let (xmin, mut xmax) = (x0.min(x1), x0.max(x1));
    let (ymin, mut ymax) = (y0.min(y1), y0.max(y1));
    if xmax <= xmin {
        xmax = xmin + 1.0;
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    BBox { xmin, ymin, xmax, ymax }
}

/// One detection per visible object per frame, unless dropped. Boxes are the
/// true boxes moved by uniform jitter; scores are uniform in the range.
pub fn simulate_detections(truth: &GroundTruth, noise: &DetectorSpec, seed: u64) -> Vec<Detection> {
    let mut out = Vec::new();
    for frame in &truth.frames {
        let mut rng = frame_rng(seed, frame.keyframe_id, DETECTOR_STREAM);
        for vis in &frame.visible {
            let dropped = rng.random::<f64>() < noise.dropout;
            let bbox = jittered(vis.bbox, noise.bbox_jitter_px, &mut rng);
            let [lo, hi] = noise.score_range;
            let score = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            if dropped {
                continue;
            }
            let obj = &truth.objects[vis.object_id as usize];
            out.push(Detection {
                keyframe_id: frame.keyframe_id,
                class_id: obj.class_id,
                class_name: obj.class_name.clone(),
                score,
                bbox,
            });
        }
    }
    out
}
