use super::tensor::{Scalar, Tensor};
use super::{shape_err, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    Conv2d { input: usize, kernel: usize, bias: usize, stride: usize },
    Dense { input: usize, weight: usize, bias: usize },
    Relu { input: usize },
    GlobalAvgPool { input: usize },
    Concat { parts: Vec<usize> },
    Mean { inputs: Vec<usize> },
    Scale { input: usize, factors: Vec<T> },
    Mse { pred: usize, target: usize },
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Wengert list of recorded operations. Nodes are appended in execution
/// order, so every operation's inputs precede it and the backward pass is a
/// plain reverse scan.
#[derive(Debug, Clone, Default)]
pub struct Tape<T = f32> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar output with respect to every recorded node.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, ids: &[usize]) -> bool {
        ids.iter().any(|&i| self.nodes[i].requires_grad)
    }

    /// 3x3 cross-correlation with zero padding 1. Input `[C_in, H, W]`,
    /// kernel `[C_out, C_in, 3, 3]`, bias `[C_out]`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Var, stride: usize) -> Result<Var, TensorError> {
        let x = self.value(input);
        let k = self.value(kernel);
        let b = self.value(bias);
        if x.rank() != 3 || k.rank() != 4 || b.rank() != 1 {
            return Err(shape_err("conv2d", format!("ranks {:?} {:?} {:?}", x.shape(), k.shape(), b.shape())));
        }
        let (cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let cout = k.shape()[0];
        if k.shape()[1] != cin || k.shape()[2] != 3 || k.shape()[3] != 3 || b.shape()[0] != cout {
            return Err(shape_err("conv2d", format!("input {:?} kernel {:?} bias {:?}", x.shape(), k.shape(), b.shape())));
        }
        if h < 3 || w < 3 || !(stride == 1 || stride == 2) {
            return Err(shape_err("conv2d", format!("input {h}x{w} stride {stride}")));
        }
        let geo = ConvGeometry { cin, cout, h, w, stride };
        let out = conv_forward(&geo, x.data(), k.data(), b.data());
        let value = Tensor::new(&[cout, geo.ho(), geo.wo()], out)?;
        let rg = self.needs(&[input.0, kernel.0, bias.0]);
        Ok(self.push(value, Op::Conv2d { input: input.0, kernel: kernel.0, bias: bias.0, stride }, rg))
    }

    /// `W x + b` for `W: [m, n]`, `x: [n]`, `b: [m]`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var, TensorError> {
        let x = self.value(input);
        let wt = self.value(weight);
        let b = self.value(bias);
        if wt.rank() != 2 || x.rank() != 1 || b.rank() != 1 || wt.shape()[1] != x.len() || wt.shape()[0] != b.len() {
            return Err(shape_err("dense", format!("W {:?} x {:?} b {:?}", wt.shape(), x.shape(), b.shape())));
        }
        let (m, n) = (wt.shape()[0], wt.shape()[1]);
        let xd = x.data();
        let out: Vec<T> = (0..m)
            .map(|i| {
                let row = &wt.data()[i * n..(i + 1) * n];
                row.iter().zip(xd).fold(b.data()[i], |acc, (&a, &c)| acc + a * c)
            })
            .collect();
        let rg = self.needs(&[input.0, weight.0, bias.0]);
        Ok(self.push(Tensor::from_vec(out), Op::Dense { input: input.0, weight: weight.0, bias: bias.0 }, rg))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let value = self.value(input).map(|v| if v > T::zero() { v } else { T::zero() });
        let rg = self.needs(&[input.0]);
        self.push(value, Op::Relu { input: input.0 }, rg)
    }

    /// Per-channel spatial mean of a `[C, H, W]` tensor.
    pub fn global_avg_pool(&mut self, input: Var) -> Result<Var, TensorError> {
        let x = self.value(input);
        if x.rank() != 3 {
            return Err(shape_err("global_avg_pool", format!("{:?}", x.shape())));
        }
        let c = x.shape()[0];
        let hw = x.shape()[1] * x.shape()[2];
        let inv = T::from_f64(1.0 / hw as f64);
        let out = x.data().chunks(hw).map(|ch| ch.iter().fold(T::zero(), |a, &b| a + b) * inv).collect();
        let value = Tensor::new(&[c], out)?;
        let rg = self.needs(&[input.0]);
        Ok(self.push(value, Op::GlobalAvgPool { input: input.0 }, rg))
    }

    /// Concatenates rank-1 tensors.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(shape_err("concat", "no inputs".into()));
        }
        let mut out = Vec::new();
        for p in parts {
            let t = self.value(*p);
            if t.rank() != 1 {
                return Err(shape_err("concat", format!("non-vector part {:?}", t.shape())));
            }
            out.extend_from_slice(t.data());
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.0).collect();
        let rg = self.needs(&ids);
        Ok(self.push(Tensor::from_vec(out), Op::Concat { parts: ids }, rg))
    }

    /// Elementwise mean of equally shaped tensors. Sums are accumulated in
    /// `f64` in input order before rounding back to `T`.
    pub fn mean_over_set(&mut self, inputs: &[Var]) -> Result<Var, TensorError> {
        let first = inputs.first().ok_or(TensorError::EmptySet)?;
        let shape = self.value(*first).shape().to_vec();
        let mut acc = vec![0f64; self.value(*first).len()];
        for v in inputs {
            let t = self.value(*v);
            if t.shape() != shape.as_slice() {
                return Err(shape_err("mean_over_set", format!("{:?} vs {:?}", t.shape(), shape)));
            }
            for (a, &x) in acc.iter_mut().zip(t.data()) {
                *a += x.as_f64();
            }
        }
        let n = inputs.len() as f64;
        let value = Tensor::new(&shape, acc.into_iter().map(|s| T::from_f64(s / n)).collect())?;
        let ids: Vec<usize> = inputs.iter().map(|v| v.0).collect();
        let rg = self.needs(&ids);
        Ok(self.push(value, Op::Mean { inputs: ids }, rg))
    }

    pub fn scale(&mut self, input: Var, factor: T) -> Var {
        let value = self.value(input).map(|v| v * factor);
        let rg = self.needs(&[input.0]);
        self.push(value, Op::Scale { input: input.0, factors: vec![factor] }, rg)
    }

    /// Elementwise multiplication by constant per-entry factors.
    pub fn scale_each(&mut self, input: Var, factors: &[T]) -> Result<Var, TensorError> {
        let x = self.value(input);
        if x.len() != factors.len() {
            return Err(shape_err("scale_each", format!("{:?} vs {} factors", x.shape(), factors.len())));
        }
        let data = x.data().iter().zip(factors).map(|(&v, &f)| v * f).collect();
        let value = Tensor::new(x.shape(), data)?;
        let rg = self.needs(&[input.0]);
        Ok(self.push(value, Op::Scale { input: input.0, factors: factors.to_vec() }, rg))
    }

    /// Mean squared error over all entries; returns a `[1]` tensor.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var, TensorError> {
        let p = self.value(pred);
        let t = self.value(target);
        if p.len() != t.len() {
            return Err(shape_err("mse_loss", format!("{:?} vs {:?}", p.shape(), t.shape())));
        }
        let sum = p.data().iter().zip(t.data()).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
        let value = Tensor::scalar(sum / T::from_f64(p.len() as f64));
        let rg = self.needs(&[pred.0, target.0]);
        Ok(self.push(value, Op::Mse { pred: pred.0, target: target.0 }, rg))
    }

    /// Smallest |x| over all ReLU inputs recorded so far.
    pub fn min_relu_margin(&self) -> Option<T> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu { input } => {
                    Some(self.nodes[input].value.data().iter().fold(T::infinity(), |m, &x| m.min(x.abs())))
                }
                _ => None,
            })
            .reduce(|a, b| a.min(b))
    }

    /// Reverse pass from a single-element output, visiting operations in the
    /// exact reverse of recording order.
    pub fn backward(&self, output: Var) -> Result<Gradients<T>, TensorError> {
        let out = self.value(output);
        if out.len() != 1 {
            return Err(TensorError::NotScalar(out.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Tensor::full(out.shape(), T::one()));

        for id in (0..=output.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            match &node.op {
                Op::Leaf => {
                    grads[id] = Some(g);
                    continue;
                }
                Op::Conv2d { input, kernel, bias, stride } => {
                    let x = &self.nodes[*input].value;
                    let k = &self.nodes[*kernel].value;
                    let geo = ConvGeometry {
                        cin: x.shape()[0],
                        cout: k.shape()[0],
                        h: x.shape()[1],
                        w: x.shape()[2],
                        stride: *stride,
                    };
                    let want_x = self.nodes[*input].requires_grad;
                    let (dx, dk, db) = conv_backward(&geo, x.data(), k.data(), g.data(), want_x);
                    if let Some(dx) = dx {
                        accumulate(&mut grads, *input, Tensor::new(x.shape(), dx)?);
                    }
                    if self.nodes[*kernel].requires_grad {
                        accumulate(&mut grads, *kernel, Tensor::new(k.shape(), dk)?);
                    }
                    if self.nodes[*bias].requires_grad {
                        accumulate(&mut grads, *bias, Tensor::from_vec(db));
                    }
                }
                Op::Dense { input, weight, bias } => {
                    let x = self.nodes[*input].value.data();
                    let w = &self.nodes[*weight].value;
                    let (m, n) = (w.shape()[0], w.shape()[1]);
                    let gd = g.data();
                    if self.nodes[*input].requires_grad {
                        let mut dx = vec![T::zero(); n];
                        for i in 0..m {
                            let row = &w.data()[i * n..(i + 1) * n];
                            for (d, &wij) in dx.iter_mut().zip(row) {
                                *d = *d + wij * gd[i];
                            }
                        }
                        accumulate(&mut grads, *input, Tensor::from_vec(dx));
                    }
                    if self.nodes[*weight].requires_grad {
                        let mut dw = Vec::with_capacity(m * n);
                        for &gi in gd.iter().take(m) {
                            dw.extend(x.iter().map(|&xj| gi * xj));
                        }
                        accumulate(&mut grads, *weight, Tensor::new(&[m, n], dw)?);
                    }
                    if self.nodes[*bias].requires_grad {
                        accumulate(&mut grads, *bias, g.clone());
                    }
                }
                Op::Relu { input } => {
                    let x = &self.nodes[*input].value;
                    let mut d = g;
                    for (gv, &xv) in d.data_mut().iter_mut().zip(x.data()) {
                        if xv <= T::zero() {
                            *gv = T::zero();
                        }
                    }
                    accumulate(&mut grads, *input, d);
                }
                Op::GlobalAvgPool { input } => {
                    let x = &self.nodes[*input].value;
                    let hw = x.shape()[1] * x.shape()[2];
                    let inv = T::from_f64(1.0 / hw as f64);
                    let mut d = Vec::with_capacity(x.len());
                    for &gc in g.data() {
                        d.extend(std::iter::repeat(gc * inv).take(hw));
                    }
                    accumulate(&mut grads, *input, Tensor::new(x.shape(), d)?);
                }
                Op::Concat { parts } => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.nodes[p].value.len();
                        if self.nodes[p].requires_grad {
                            let piece = g.data()[offset..offset + len].to_vec();
                            accumulate(&mut grads, p, Tensor::from_vec(piece));
                        }
                        offset += len;
                    }
                }
                Op::Mean { inputs } => {
                    let inv = T::from_f64(1.0 / inputs.len() as f64);
                    let share = g.map(|v| v * inv);
                    for &i in inputs {
                        if self.nodes[i].requires_grad {
                            accumulate(&mut grads, i, share.clone());
                        }
                    }
                }
                Op::Scale { input, factors } => {
                    let mut out = g.clone();
                    for (i, v) in out.data_mut().iter_mut().enumerate() {
                        *v = *v * factors[i % factors.len()];
                    }
                    accumulate(&mut grads, *input, out);
                }
                Op::Mse { pred, target } => {
                    let p = &self.nodes[*pred].value;
                    let t = &self.nodes[*target].value;
                    let coef = g.data()[0] * T::from_f64(2.0 / p.len() as f64);
                    let diff: Vec<T> = p.data().iter().zip(t.data()).map(|(&a, &b)| (a - b) * coef).collect();
                    if self.nodes[*target].requires_grad {
                        let neg = diff.iter().map(|&d| -d).collect();
                        accumulate(&mut grads, *target, Tensor::new(t.shape(), neg)?);
                    }
                    if self.nodes[*pred].requires_grad {
                        accumulate(&mut grads, *pred, Tensor::new(p.shape(), diff)?);
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: usize, g: Tensor<T>) {
    match &mut grads[id] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

struct ConvGeometry {
    cin: usize,
    cout: usize,
    h: usize,
    w: usize,
    stride: usize,
}

impl ConvGeometry {
    fn ho(&self) -> usize {
        self.h.div_ceil(self.stride)
    }

    fn wo(&self) -> usize {
        self.w.div_ceil(self.stride)
    }

    /// Output rows/cols whose input tap `k` (0..3) lands inside `0..extent`.
    fn valid(&self, k: usize, extent: usize, out_extent: usize) -> std::ops::Range<usize> {
        let start = if k == 0 { 1usize.div_ceil(self.stride) } else { 0 };
        let end = ((extent + 1 - k - 1) / self.stride + 1).min(out_extent);
        start..end.max(start)
    }
}

fn conv_forward<T: Scalar>(geo: &ConvGeometry, x: &[T], k: &[T], b: &[T]) -> Vec<T> {
    let (ho, wo, s) = (geo.ho(), geo.wo(), geo.stride);
    let mut out = vec![T::zero(); geo.cout * ho * wo];
    for co in 0..geo.cout {
        let o = &mut out[co * ho * wo..(co + 1) * ho * wo];
        o.iter_mut().for_each(|v| *v = b[co]);
        for ci in 0..geo.cin {
            let plane = &x[ci * geo.h * geo.w..(ci + 1) * geo.h * geo.w];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = k[((co * geo.cin + ci) * 3 + ky) * 3 + kx];
                    let cols = geo.valid(kx, geo.w, wo);
                    for oy in geo.valid(ky, geo.h, ho) {
                        let iy = oy * s + ky - 1;
                        let row_in = &plane[iy * geo.w..(iy + 1) * geo.w];
                        let row_out = &mut o[oy * wo..(oy + 1) * wo];
                        for ox in cols.clone() {
                            row_out[ox] = row_out[ox] + wv * row_in[ox * s + kx - 1];
                        }
                    }
                }
            }
        }
    }
    out
}

type ConvGrads<T> = (Option<Vec<T>>, Vec<T>, Vec<T>);

fn conv_backward<T: Scalar>(geo: &ConvGeometry, x: &[T], k: &[T], g: &[T], want_x: bool) -> ConvGrads<T> {
    let (ho, wo, s) = (geo.ho(), geo.wo(), geo.stride);
    let mut dx = want_x.then(|| vec![T::zero(); x.len()]);
    let mut dk = vec![T::zero(); k.len()];
    let mut db = vec![T::zero(); geo.cout];
    for co in 0..geo.cout {
        let go = &g[co * ho * wo..(co + 1) * ho * wo];
        db[co] = go.iter().fold(T::zero(), |a, &v| a + v);
        for ci in 0..geo.cin {
            let base = ci * geo.h * geo.w;
            for ky in 0..3 {
                for kx in 0..3 {
                    let widx = ((co * geo.cin + ci) * 3 + ky) * 3 + kx;
                    let wv = k[widx];
                    let cols = geo.valid(kx, geo.w, wo);
                    let mut acc = T::zero();
                    for oy in geo.valid(ky, geo.h, ho) {
                        let iy = oy * s + ky - 1;
                        let row = base + iy * geo.w;
                        let grow = &go[oy * wo..(oy + 1) * wo];
                        for ox in cols.clone() {
                            let ix = row + ox * s + kx - 1;
                            acc = acc + grow[ox] * x[ix];
                            if let Some(dx) = dx.as_mut() {
                                dx[ix] = dx[ix] + wv * grow[ox];
                            }
                        }
                    }
                    dk[widx] = acc;
                }
            }
        }
    }
    (dx, dk, db)
}
