use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::{xavier_uniform, Graph, ParamId, ParamStore, ShapeError, Tensor, Var};
use crate::Result;

/// Weights of one LSTM direction. Gate blocks are laid out as
/// `[input | forget | cell | output]` along the columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub input_weights: ParamId,
    pub hidden_weights: ParamId,
    pub bias: ParamId,
}

impl LstmParams {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let input_weights = store.add(
            format!("{name}.w_input"),
            xavier_uniform(input_dim, 4 * hidden, rng),
        )?;
        let hidden_weights = store.add(
            format!("{name}.w_hidden"),
            xavier_uniform(hidden, 4 * hidden, rng),
        )?;
        let mut bias = Tensor::zeros(1, 4 * hidden);
        for v in &mut bias.data_mut()[hidden..2 * hidden] {
            *v = 1.0;
        }
        let bias = store.add(format!("{name}.bias"), bias)?;
        Ok(LstmParams {
            input_weights,
            hidden_weights,
            bias,
        })
    }

    pub fn scalar_count(input_dim: usize, hidden: usize) -> usize {
        4 * hidden * (input_dim + hidden + 1)
    }
}

/// Bidirectional LSTM over a batch of equally long, individually masked sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
    pub input_dim: usize,
    pub hidden: usize,
}

impl BiLstm {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(BiLstm {
            forward: LstmParams::new(store, &format!("{name}.fwd"), input_dim, hidden, rng)?,
            backward: LstmParams::new(store, &format!("{name}.bwd"), input_dim, hidden, rng)?,
            input_dim,
            hidden,
        })
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    /// `inputs` holds `batch` sequences of `steps` rows each, sequence-major
    /// (row `b * steps + t`). Returns the same layout with `2 * hidden`
    /// columns: forward state then backward state. Masked steps carry the
    /// previous state through and emit zeros.
    pub fn forward(
        &self,
        g: &mut Graph,
        inputs: Var,
        batch: usize,
        steps: usize,
        mask: &[bool],
    ) -> Result<Var> {
        let (rows, cols) = g.shape(inputs);
        if steps == 0 || batch == 0 {
            return Err(ShapeError::new("bilstm", (rows, cols), (batch, steps))
                .with_detail("empty sequence")
                .into());
        }
        if rows != batch * steps || cols != self.input_dim || mask.len() != rows {
            return Err(ShapeError::new("bilstm", (rows, cols), (batch * steps, self.input_dim))
                .with_detail(format!("mask length {}", mask.len()))
                .into());
        }
        let fwd = self.run_direction(g, &self.forward, inputs, batch, steps, mask, false)?;
        let bwd = self.run_direction(g, &self.backward, inputs, batch, steps, mask, true)?;
        Ok(g.concat_cols(&[fwd, bwd])?)
    }

    #[allow(clippy::too_many_arguments)]
    fn run_direction(
        &self,
        g: &mut Graph,
        p: &LstmParams,
        inputs: Var,
        batch: usize,
        steps: usize,
        mask: &[bool],
        reverse: bool,
    ) -> Result<Var> {
        let h = self.hidden;
        let w_in = g.param(p.input_weights);
        let w_h = g.param(p.hidden_weights);
        let bias = g.param(p.bias);
        // Input projections for every step at once: (batch*steps) × 4h.
        let projected = g.matmul(inputs, w_in)?;
        let projected = g.add(projected, bias)?;

        let mut state_h = g.constant(Tensor::zeros(batch, h));
        let mut state_c = g.constant(Tensor::zeros(batch, h));
        let mut outputs: Vec<Option<Var>> = (0..steps).map(|_| None).collect();

        let order: Vec<usize> = if reverse {
            (0..steps).rev().collect()
        } else {
            (0..steps).collect()
        };
        for t in order {
            let rows: Vec<usize> = (0..batch).map(|b| b * steps + t).collect();
            let step_mask: Vec<f64> = rows.iter().map(|&r| if mask[r] { 1.0 } else { 0.0 }).collect();
            let x_t = g.gather_rows(projected, &rows)?;
            let rec = g.matmul(state_h, w_h)?;
            let gates = g.add(x_t, rec)?;
            let i_pre = g.slice_cols(gates, 0, h)?;
            let f_pre = g.slice_cols(gates, h, h)?;
            let c_pre = g.slice_cols(gates, 2 * h, h)?;
            let o_pre = g.slice_cols(gates, 3 * h, h)?;
            let i_gate = g.sigmoid(i_pre);
            let f_gate = g.sigmoid(f_pre);
            let c_cand = g.tanh(c_pre);
            let o_gate = g.sigmoid(o_pre);
            let keep = g.mul(f_gate, state_c)?;
            let write = g.mul(i_gate, c_cand)?;
            let c_new = g.add(keep, write)?;
            let c_act = g.tanh(c_new);
            let h_new = g.mul(o_gate, c_act)?;

            if step_mask.iter().all(|&m| m == 1.0) {
                state_c = c_new;
                state_h = h_new;
                outputs[t] = Some(h_new);
            } else {
                let m = g.constant(Tensor::from_vec(batch, 1, step_mask.clone())?);
                let not_m = g.constant(Tensor::from_vec(
                    batch,
                    1,
                    step_mask.iter().map(|v| 1.0 - v).collect(),
                )?);
                let out = g.mul(h_new, m)?;
                let carried_h = g.mul(state_h, not_m)?;
                let carried_c = g.mul(state_c, not_m)?;
                let kept_c = g.mul(c_new, m)?;
                state_h = g.add(out, carried_h)?;
                state_c = g.add(kept_c, carried_c)?;
                outputs[t] = Some(out);
            }
        }
        // Time-major stack, then reorder rows to sequence-major.
        let stacked: Vec<Var> = outputs.into_iter().map(|o| o.expect("every step ran")).collect();
        let time_major = g.concat_rows(&stacked)?;
        let perm: Vec<usize> = (0..batch * steps)
            .map(|r| {
                let (b, t) = (r / steps, r % steps);
                t * batch + b
            })
            .collect();
        Ok(g.gather_rows(time_major, &perm)?)
    }
}
