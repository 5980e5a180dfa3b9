use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Gradients, ParamId, ParamStore, ShapeError, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    /// Softmax over each row; columns with `false` are excluded.
    Softmax(Var, Vec<bool>),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Sum(Vec<Var>),
    Transpose(Var),
    /// Weighted mean of rows, weights are the 0/1 mask.
    MaskedMeanRows(Var, Vec<f64>),
    /// Multiplier per element: 0 for dropped, 1/(1-rate) for kept.
    Dropout(Var, Vec<f64>),
    GatherRows(Var, Vec<usize>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    SumAll(Var),
    Bce(Var, Vec<f64>),
}

#[derive(Debug)]
enum Value {
    Owned(Vec<f64>),
    Param(ParamId),
}

#[derive(Debug)]
struct Node {
    value: Value,
    rows: usize,
    cols: usize,
    op: Op,
    needs_grad: bool,
}

/// Tape of operations over a read-only parameter snapshot.
pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
    training: bool,
    rng: ChaCha8Rng,
}

type OpResult = Result<Var, ShapeError>;

/// How the right operand of an elementwise op broadcasts onto the left one.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Broadcast {
    Same,
    Row,
    Col,
    Scalar,
}

impl Broadcast {
    fn resolve(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Result<Self, ShapeError> {
        if a == b {
            Ok(Broadcast::Same)
        } else if b == (1, 1) {
            Ok(Broadcast::Scalar)
        } else if b.0 == 1 && b.1 == a.1 {
            Ok(Broadcast::Row)
        } else if b.1 == 1 && b.0 == a.0 {
            Ok(Broadcast::Col)
        } else {
            Err(ShapeError::new(op, a, b))
        }
    }

    #[inline]
    fn index(self, r: usize, c: usize, cols: usize) -> usize {
        match self {
            Broadcast::Same => r * cols + c,
            Broadcast::Row => c,
            Broadcast::Col => r,
            Broadcast::Scalar => 0,
        }
    }
}

impl<'p> Graph<'p> {
    /// `training` enables dropout; `seed` fixes its masks.
    pub fn new(store: &'p ParamStore, training: bool, seed: u64) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_nodes: vec![None; store.len()],
            training,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match &self.nodes[v.0].value {
            Value::Owned(d) => d,
            Value::Param(id) => self.store.value(*id).data(),
        }
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        let (r, c) = self.shape(v);
        Tensor::from_vec(r, c, self.value(v).to_vec()).expect("node shape is consistent")
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    fn push(&mut self, data: Vec<f64>, rows: usize, cols: usize, op: Op, needs_grad: bool) -> Var {
        debug_assert_eq!(data.len(), rows * cols);
        self.nodes.push(Node {
            value: Value::Owned(data),
            rows,
            cols,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        let (r, c) = t.shape();
        self.push(t.into_vec(), r, c, Op::Constant, false)
    }

    /// Node for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        let (rows, cols) = self.store.value(id).shape();
        self.nodes.push(Node {
            value: Value::Param(id),
            rows,
            cols,
            op: Op::Param(id),
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> OpResult {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(ShapeError::new("matmul", (m, k), (k2, n)));
        }
        let mut out = vec![0.0; m * n];
        matmul_into(self.value(a), self.value(b), &mut out, m, k, n);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, m, n, Op::MatMul(a, b), ng))
    }

    fn elementwise(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> OpResult {
        let (r, c) = self.shape(a);
        let bc = Broadcast::resolve(name, (r, c), self.shape(b))?;
        let av = self.value(a);
        let bv = self.value(b);
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(f(av[i * c + j], bv[bc.index(i, j, c)]));
            }
        }
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(out, r, c, op, ng))
    }

    /// Elementwise sum; `b` may be a row vector, column vector or scalar broadcast onto `a`.
    pub fn add(&mut self, a: Var, b: Var) -> OpResult {
        self.elementwise("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> OpResult {
        self.elementwise("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> OpResult {
        self.elementwise("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|x| x * factor).collect();
        let ng = self.needs(a);
        self.push(out, r, c, Op::Scale(a, factor), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|&x| libm::tanh(x)).collect();
        let ng = self.needs(a);
        self.push(out, r, c, Op::Tanh(a), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        let ng = self.needs(a);
        self.push(out, r, c, Op::Sigmoid(a), ng)
    }

    pub fn softmax(&mut self, a: Var) -> OpResult {
        let (_, c) = self.shape(a);
        self.masked_softmax(a, &vec![true; c])
    }

    /// Row-wise softmax where columns with `mask[c] == false` score −∞.
    pub fn masked_softmax(&mut self, a: Var, mask: &[bool]) -> OpResult {
        let (r, c) = self.shape(a);
        if mask.len() != c {
            return Err(ShapeError::new("masked_softmax", (r, c), (1, mask.len())));
        }
        if !mask.iter().any(|&m| m) {
            return Err(ShapeError::new("masked_softmax", (r, c), (1, mask.len()))
                .with_detail("every column is masked"));
        }
        let av = self.value(a);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &av[i * c..(i + 1) * c];
            let max = row
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(&x, _)| x)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for j in 0..c {
                if mask[j] {
                    let e = libm::exp(row[j] - max);
                    out[i * c + j] = e;
                    total += e;
                }
            }
            for j in 0..c {
                out[i * c + j] /= total;
            }
        }
        let ng = self.needs(a);
        Ok(self.push(out, r, c, Op::Softmax(a, mask.to_vec()), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> OpResult {
        let Some(&first) = parts.first() else {
            return Err(ShapeError::new("concat_cols", (0, 0), (0, 0)).with_detail("no operands"));
        };
        let rows = self.shape(first).0;
        let mut cols = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.0 != rows {
                return Err(ShapeError::new("concat_cols", self.shape(first), s));
            }
            cols += s.1;
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                let pc = self.shape(p).1;
                out.extend_from_slice(&self.value(p)[r * pc..(r + 1) * pc]);
            }
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, rows, cols, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> OpResult {
        let Some(&first) = parts.first() else {
            return Err(ShapeError::new("concat_rows", (0, 0), (0, 0)).with_detail("no operands"));
        };
        let cols = self.shape(first).1;
        let mut rows = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.1 != cols {
                return Err(ShapeError::new("concat_rows", self.shape(first), s));
            }
            rows += s.0;
        }
        let mut out = Vec::with_capacity(rows * cols);
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, rows, cols, Op::ConcatRows(parts.to_vec()), ng))
    }

    /// Elementwise sum of equally shaped tensors.
    pub fn sum(&mut self, parts: &[Var]) -> OpResult {
        let Some(&first) = parts.first() else {
            return Err(ShapeError::new("sum", (0, 0), (0, 0)).with_detail("no operands"));
        };
        let shape = self.shape(first);
        let mut out = vec![0.0; shape.0 * shape.1];
        for &p in parts {
            if self.shape(p) != shape {
                return Err(ShapeError::new("sum", shape, self.shape(p)));
            }
            for (o, v) in out.iter_mut().zip(self.value(p)) {
                *o += v;
            }
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, shape.0, shape.1, Op::Sum(parts.to_vec()), ng))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let av = self.value(a);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = av[i * c + j];
            }
        }
        let ng = self.needs(a);
        self.push(out, c, r, Op::Transpose(a), ng)
    }

    /// Mean over the rows selected by `mask`, giving a `1 × cols` row.
    pub fn masked_mean_rows(&mut self, a: Var, mask: &[bool]) -> OpResult {
        let (r, c) = self.shape(a);
        if mask.len() != r {
            return Err(ShapeError::new("masked_mean_rows", (r, c), (mask.len(), 1)));
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(ShapeError::new("masked_mean_rows", (r, c), (mask.len(), 1))
                .with_detail("every row is masked"));
        }
        let weights: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let av = self.value(a);
        let mut out = vec![0.0; c];
        for i in 0..r {
            if mask[i] {
                for j in 0..c {
                    out[j] += av[i * c + j];
                }
            }
        }
        for o in out.iter_mut() {
            *o /= count as f64;
        }
        let ng = self.needs(a);
        Ok(self.push(out, 1, c, Op::MaskedMeanRows(a, weights), ng))
    }

    /// Inverted dropout: identity unless the graph is in training mode.
    pub fn dropout(&mut self, a: Var, rate: f64) -> Var {
        if !self.training || rate <= 0.0 {
            return a;
        }
        let (r, c) = self.shape(a);
        let keep = 1.0 - rate;
        let factors: Vec<f64> = (0..r * c)
            .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let out = self
            .value(a)
            .iter()
            .zip(&factors)
            .map(|(x, f)| x * f)
            .collect();
        let ng = self.needs(a);
        self.push(out, r, c, Op::Dropout(a, factors), ng)
    }

    /// Selects rows by index (repeats allowed); used for embedding lookup.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> OpResult {
        let (r, c) = self.shape(a);
        let mut out = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            if i >= r {
                return Err(ShapeError::new("gather_rows", (r, c), (i, 1))
                    .with_detail("row index out of range"));
            }
            out.extend_from_slice(&self.value(a)[i * c..(i + 1) * c]);
        }
        let ng = self.needs(a);
        Ok(self.push(out, indices.len(), c, Op::GatherRows(a, indices.to_vec()), ng))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> OpResult {
        let (r, c) = self.shape(a);
        if start + len > r {
            return Err(ShapeError::new("slice_rows", (r, c), (start, len)));
        }
        let out = self.value(a)[start * c..(start + len) * c].to_vec();
        let ng = self.needs(a);
        Ok(self.push(out, len, c, Op::SliceRows(a, start), ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> OpResult {
        let (r, c) = self.shape(a);
        if start + len > c {
            return Err(ShapeError::new("slice_cols", (r, c), (start, len)));
        }
        let av = self.value(a);
        let mut out = Vec::with_capacity(r * len);
        for i in 0..r {
            out.extend_from_slice(&av[i * c + start..i * c + start + len]);
        }
        let ng = self.needs(a);
        Ok(self.push(out, r, len, Op::SliceCols(a, start), ng))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let total = self.value(a).iter().sum();
        let ng = self.needs(a);
        self.push(vec![total], 1, 1, Op::SumAll(a), ng)
    }

    /// Mean binary cross-entropy with predictions clamped to [1e-7, 1 − 1e-7].
    pub fn bce(&mut self, predictions: Var, labels: &[f64]) -> OpResult {
        let (r, c) = self.shape(predictions);
        if labels.len() != r * c {
            return Err(ShapeError::new("bce", (r, c), (labels.len(), 1)));
        }
        let n = labels.len() as f64;
        let loss = self
            .value(predictions)
            .iter()
            .zip(labels)
            .map(|(&p, &y)| {
                let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
            })
            .sum::<f64>()
            / n;
        let ng = self.needs(predictions);
        Ok(self.push(vec![loss], 1, 1, Op::Bce(predictions, labels.to_vec()), ng))
    }

    /// Gradients of the scalar `loss` with respect to every parameter it touches.
    pub fn backward(&self, loss: Var) -> Result<Gradients, ShapeError> {
        if self.shape(loss) != (1, 1) {
            return Err(ShapeError::new("backward", self.shape(loss), (1, 1))
                .with_detail("loss must be a scalar"));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::new(self.store.len());

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let (rows, cols) = (node.rows, node.cols);
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    let acc = out.accumulate(*id, g.len());
                    for (a, v) in acc.iter_mut().zip(&g) {
                        *a += v;
                    }
                }
                Op::MatMul(a, b) => {
                    let (m, k) = self.shape(*a);
                    let n = self.shape(*b).1;
                    if k == 0 || n == 0 {
                        continue;
                    }
                    if self.needs(*a) {
                        // dA = G · Bᵀ
                        let bv = self.value(*b);
                        let ga = slot(&mut grads, *a, m * k);
                        for (g_row, ga_row) in g.chunks_exact(n).zip(ga.chunks_exact_mut(k)) {
                            for (acc, b_row) in ga_row.iter_mut().zip(bv.chunks_exact(n)) {
                                *acc += dot(g_row, b_row);
                            }
                        }
                    }
                    if self.needs(*b) {
                        // dB = Aᵀ · G
                        let av = self.value(*a);
                        let gb = slot(&mut grads, *b, k * n);
                        for (a_row, g_row) in av.chunks_exact(k).zip(g.chunks_exact(n)) {
                            for (&x, gb_row) in a_row.iter().zip(gb.chunks_exact_mut(n)) {
                                if x == 0.0 {
                                    continue;
                                }
                                for (gbv, gv) in gb_row.iter_mut().zip(g_row) {
                                    *gbv += x * gv;
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                    if self.needs(*a) {
                        let ga = slot(&mut grads, *a, g.len());
                        for (x, v) in ga.iter_mut().zip(&g) {
                            *x += v;
                        }
                    }
                    if self.needs(*b) {
                        let bs = self.shape(*b);
                        let bc = Broadcast::resolve("add", (rows, cols), bs)?;
                        let gb = slot(&mut grads, *b, bs.0 * bs.1);
                        for i in 0..rows {
                            for j in 0..cols {
                                gb[bc.index(i, j, cols)] += sign * g[i * cols + j];
                            }
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let bs = self.shape(*b);
                    let bc = Broadcast::resolve("mul", (rows, cols), bs)?;
                    if self.needs(*a) {
                        let bv = self.value(*b);
                        let ga = slot(&mut grads, *a, rows * cols);
                        for i in 0..rows {
                            for j in 0..cols {
                                ga[i * cols + j] += g[i * cols + j] * bv[bc.index(i, j, cols)];
                            }
                        }
                    }
                    if self.needs(*b) {
                        let av = self.value(*a);
                        let gb = slot(&mut grads, *b, bs.0 * bs.1);
                        for i in 0..rows {
                            for j in 0..cols {
                                gb[bc.index(i, j, cols)] += g[i * cols + j] * av[i * cols + j];
                            }
                        }
                    }
                }
                Op::Scale(a, f) => {
                    let ga = slot(&mut grads, *a, g.len());
                    for (x, v) in ga.iter_mut().zip(&g) {
                        *x += f * v;
                    }
                }
                Op::Tanh(a) => {
                    let y = self.value(Var(idx));
                    let ga = slot(&mut grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * (1.0 - y[k] * y[k]);
                    }
                }
                Op::Sigmoid(a) => {
                    let y = self.value(Var(idx));
                    let ga = slot(&mut grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * y[k] * (1.0 - y[k]);
                    }
                }
                Op::Softmax(a, mask) => {
                    let y = self.value(Var(idx));
                    let ga = slot(&mut grads, *a, g.len());
                    for i in 0..rows {
                        let yr = &y[i * cols..(i + 1) * cols];
                        let gr = &g[i * cols..(i + 1) * cols];
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..cols {
                            if mask[j] {
                                ga[i * cols + j] += yr[j] * (gr[j] - dot);
                            }
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let pc = self.shape(p).1;
                        if self.needs(p) {
                            let gp = slot(&mut grads, p, rows * pc);
                            for i in 0..rows {
                                for j in 0..pc {
                                    gp[i * pc + j] += g[i * cols + offset + j];
                                }
                            }
                        }
                        offset += pc;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.shape(p).0 * cols;
                        if self.needs(p) {
                            let gp = slot(&mut grads, p, n);
                            for (x, v) in gp.iter_mut().zip(&g[offset..offset + n]) {
                                *x += v;
                            }
                        }
                        offset += n;
                    }
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        if self.needs(p) {
                            let gp = slot(&mut grads, p, g.len());
                            for (x, v) in gp.iter_mut().zip(&g) {
                                *x += v;
                            }
                        }
                    }
                }
                Op::Transpose(a) => {
                    // node is rows × cols, input is cols × rows
                    let ga = slot(&mut grads, *a, g.len());
                    for i in 0..rows {
                        for j in 0..cols {
                            ga[j * rows + i] += g[i * cols + j];
                        }
                    }
                }
                Op::MaskedMeanRows(a, weights) => {
                    let count: f64 = weights.iter().sum();
                    let ga = slot(&mut grads, *a, weights.len() * cols);
                    for (i, w) in weights.iter().enumerate() {
                        if *w != 0.0 {
                            for j in 0..cols {
                                ga[i * cols + j] += g[j] / count;
                            }
                        }
                    }
                }
                Op::Dropout(a, factors) => {
                    let ga = slot(&mut grads, *a, g.len());
                    for k in 0..g.len() {
                        ga[k] += g[k] * factors[k];
                    }
                }
                Op::GatherRows(a, indices) => {
                    let (ar, ac) = self.shape(*a);
                    let ga = slot(&mut grads, *a, ar * ac);
                    for (r, &src) in indices.iter().enumerate() {
                        for j in 0..ac {
                            ga[src * ac + j] += g[r * ac + j];
                        }
                    }
                }
                Op::SliceRows(a, start) => {
                    let (ar, ac) = self.shape(*a);
                    let ga = slot(&mut grads, *a, ar * ac);
                    for (x, v) in ga[start * ac..].iter_mut().zip(&g) {
                        *x += v;
                    }
                }
                Op::SliceCols(a, start) => {
                    let (ar, ac) = self.shape(*a);
                    let ga = slot(&mut grads, *a, ar * ac);
                    for i in 0..rows {
                        for j in 0..cols {
                            ga[i * ac + start + j] += g[i * cols + j];
                        }
                    }
                }
                Op::SumAll(a) => {
                    let (ar, ac) = self.shape(*a);
                    let ga = slot(&mut grads, *a, ar * ac);
                    for x in ga.iter_mut() {
                        *x += g[0];
                    }
                }
                Op::Bce(p, labels) => {
                    let pv = self.value(*p);
                    let n = labels.len() as f64;
                    let gp = slot(&mut grads, *p, labels.len());
                    for k in 0..labels.len() {
                        let x = pv[k];
                        if !(BCE_EPS..=1.0 - BCE_EPS).contains(&x) {
                            continue;
                        }
                        let y = labels[k];
                        gp[k] += g[0] * (-(y / x) + (1.0 - y) / (1.0 - x)) / n;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn matmul_into(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    for (a_row, out_row) in a.chunks_exact(k).zip(out.chunks_exact_mut(n)) {
        for (&x, b_row) in a_row.iter().zip(b.chunks_exact(n)) {
            if x == 0.0 {
                continue;
            }
            for (o, bv) in out_row.iter_mut().zip(b_row) {
                *o += x * bv;
            }
        }
    }
}

/// Dot product with four running sums.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(a, b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
