//! Central finite-difference validation of the analytic gradients.
//!
//! For every parameter θ the numeric derivative is
//! `(L(θ+h) − L(θ−h)) / 2h`, compared against backprop via
//! `rel = |analytic − numeric| / max(|analytic|, |numeric|, 1e-12)`.

use super::losses::LossKind;
use super::{Network, NnError, ParamBlocks};

/// Relative-error floor that keeps the ratio defined when both gradients
/// are ~0.
pub const REL_ERROR_FLOOR: f64 = 1e-12;

/// Worst relative error found for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub layer: usize,
    /// "W" or "b".
    pub block: &'static str,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

fn zero_blocks(net: &Network) -> Vec<BlockReport> {
    let mut blocks = Vec::with_capacity(2 * net.layers.len());
    for l in 0..net.layers.len() {
        blocks.push(BlockReport {
            layer: l,
            block: "W",
            max_rel_error: 0.0,
        });
        blocks.push(BlockReport {
            layer: l,
            block: "b",
            max_rel_error: 0.0,
        });
    }
    blocks
}

/// Compare a given gradient (claimed to be dL/dθ at the current parameters)
/// against central finite differences for one sample, folding the worst
/// relative error into `blocks`.
pub fn compare_with_numeric(
    net: &Network,
    loss: LossKind,
    x: &[f64],
    target: &[f64],
    analytic: &ParamBlocks,
    h: f64,
    blocks: &mut [BlockReport],
) -> Result<(), NnError> {
    assert!(h > 0.0, "step size must be positive");
    let mut work = net.clone();
    for l in 0..net.layers.len() {
        let n_w = net.layers[l].w.data().len();
        for i in 0..n_w {
            let original = work.layers[l].w.data[i];
            work.layers[l].w.data[i] = original + h;
            let up = loss.value(work.forward(x)?.output(), target);
            work.layers[l].w.data[i] = original - h;
            let down = loss.value(work.forward(x)?.output(), target);
            work.layers[l].w.data[i] = original;
            let numeric = (up - down) / (2.0 * h);
            let err = rel_error(analytic.blocks[l].0.data()[i], numeric);
            blocks[2 * l].max_rel_error = blocks[2 * l].max_rel_error.max(err);
        }
        for i in 0..net.layers[l].b.len() {
            let original = work.layers[l].b[i];
            work.layers[l].b[i] = original + h;
            let up = loss.value(work.forward(x)?.output(), target);
            work.layers[l].b[i] = original - h;
            let down = loss.value(work.forward(x)?.output(), target);
            work.layers[l].b[i] = original;
            let numeric = (up - down) / (2.0 * h);
            let err = rel_error(analytic.blocks[l].1[i], numeric);
            blocks[2 * l + 1].max_rel_error = blocks[2 * l + 1].max_rel_error.max(err);
        }
    }
    Ok(())
}

/// Run backprop on every sample and compare against finite differences,
/// reporting the worst relative error per parameter block.
pub fn gradient_check(
    net: &Network,
    loss: LossKind,
    samples: &[(Vec<f64>, Vec<f64>)],
    h: f64,
    tolerance: f64,
) -> Result<GradCheckReport, NnError> {
    let mut blocks = zero_blocks(net);
    for (x, target) in samples {
        let cache = net.forward(x)?;
        let loss_grad = loss.grad(cache.output(), target);
        let analytic = net.backward(&cache, &loss_grad)?;
        compare_with_numeric(net, loss, x, target, &analytic, h, &mut blocks)?;
    }
    let max_rel_error = blocks
        .iter()
        .map(|b| b.max_rel_error)
        .fold(0.0_f64, f64::max);
    Ok(GradCheckReport {
        blocks,
        max_rel_error,
        tolerance,
    })
}
