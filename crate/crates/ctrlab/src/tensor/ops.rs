//! Forward op constructors and the backward dispatch.

use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayD, Axis, Ix2, Ix3, IxDyn};

use super::{reduce_to_shape, Node, Tape, Var};

type Ids = Arc<Array2<usize>>;

pub enum Op {
    Leaf,
    Constant,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddScalar(usize),
    BroadcastTo(usize),
    MatMul(usize, usize),
    BatchMatMul(usize, usize),
    BatchMatMulNT(usize, usize),
    PerFieldMatMul(usize, usize),
    Gather(usize, Ids),
    GatherVec(usize, Ids),
    Relu(usize),
    Sigmoid(usize),
    Exp(usize),
    Ln(usize),
    AbsClampFloor(usize, f64),
    SoftmaxLast(usize),
    SumAxis(usize, usize),
    SumAll(usize),
    MeanAll(usize),
    Reshape(usize),
    Permute(usize, Vec<usize>),
    Concat(Vec<usize>, usize),
    LayerNorm { x: usize, gamma: usize, beta: usize, eps: f64 },
    MulMask(usize, Arc<ArrayD<f64>>),
    BceWithLogitsMean { z: usize, targets: Arc<Array1<f64>> },
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn mm(a: &ArrayD<f64>, b: &ArrayD<f64>) -> Array2<f64> {
    let a = a.view().into_dimensionality::<Ix2>().unwrap();
    let b = b.view().into_dimensionality::<Ix2>().unwrap();
    a.dot(&b)
}

impl<'t> Var<'t> {
    fn bin(self, other: Var<'t>, value: ArrayD<f64>, op: Op) -> Var<'t> {
        let rg = self.tape.requires_grad(self.id) || other.tape.requires_grad(other.id);
        self.tape.push(value, op, rg)
    }

    fn un(self, value: ArrayD<f64>, op: Op) -> Var<'t> {
        let rg = self.tape.requires_grad(self.id);
        self.tape.push(value, op, rg)
    }

    pub fn add(self, o: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), o.value());
        assert_eq!(a.shape(), b.shape(), "add shape mismatch");
        let v = &*a + &*b;
        self.bin(o, v, Op::Add(self.id, o.id))
    }

    pub fn sub(self, o: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), o.value());
        assert_eq!(a.shape(), b.shape(), "sub shape mismatch");
        let v = &*a - &*b;
        self.bin(o, v, Op::Sub(self.id, o.id))
    }

    pub fn mul(self, o: Var<'t>) -> Var<'t> {
        let (a, b) = (self.value(), o.value());
        assert_eq!(a.shape(), b.shape(), "mul shape mismatch");
        let v = &*a * &*b;
        self.bin(o, v, Op::Mul(self.id, o.id))
    }

    pub fn neg(self) -> Var<'t> {
        let v = self.value().mapv(|x| -x);
        self.un(v, Op::Neg(self.id))
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let v = self.value().mapv(|x| c * x);
        self.un(v, Op::Scale(self.id, c))
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        let v = self.value().mapv(|x| x + c);
        self.un(v, Op::AddScalar(self.id))
    }

    pub fn broadcast_to(self, shape: &[usize]) -> Var<'t> {
        let a = self.value();
        let v = a
            .broadcast(IxDyn(shape))
            .unwrap_or_else(|| panic!("cannot broadcast {:?} to {:?}", a.shape(), shape))
            .to_owned();
        self.un(v, Op::BroadcastTo(self.id))
    }

    /// `[m,k] x [k,n] -> [m,n]`
    pub fn matmul(self, o: Var<'t>) -> Var<'t> {
        let v = mm(&self.value(), &o.value()).into_dyn();
        self.bin(o, v, Op::MatMul(self.id, o.id))
    }

    /// `[B,m,k] x [B,k,n] -> [B,m,n]`
    pub fn batch_matmul(self, o: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = o.value();
        let a3 = a.view().into_dimensionality::<Ix3>().unwrap();
        let b3 = b.view().into_dimensionality::<Ix3>().unwrap();
        let (bs, m, k) = a3.dim();
        let (bs2, k2, n) = b3.dim();
        assert!(bs == bs2 && k == k2, "batch_matmul {:?} x {:?}", a.shape(), b.shape());
        let mut out = ndarray::Array3::<f64>::zeros((bs, m, n));
        for i in 0..bs {
            general_mat_mul(1.0, &a3.index_axis(Axis(0), i), &b3.index_axis(Axis(0), i), 0.0, &mut out.index_axis_mut(Axis(0), i));
        }
        self.bin(o, out.into_dyn(), Op::BatchMatMul(self.id, o.id))
    }

    /// `[B,m,k] x [B,n,k]^T -> [B,m,n]`
    pub fn batch_matmul_nt(self, o: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = o.value();
        let a3 = a.view().into_dimensionality::<Ix3>().unwrap();
        let b3 = b.view().into_dimensionality::<Ix3>().unwrap();
        let (bs, m, k) = a3.dim();
        let (bs2, n, k2) = b3.dim();
        assert!(bs == bs2 && k == k2, "batch_matmul_nt {:?} x {:?}", a.shape(), b.shape());
        let mut out = ndarray::Array3::<f64>::zeros((bs, m, n));
        for i in 0..bs {
            let bt = b3.index_axis(Axis(0), i);
            general_mat_mul(1.0, &a3.index_axis(Axis(0), i), &bt.t(), 0.0, &mut out.index_axis_mut(Axis(0), i));
        }
        self.bin(o, out.into_dyn(), Op::BatchMatMulNT(self.id, o.id))
    }

    /// `x [B,F,k] x w [F,k,n] -> [B,F,n]`: an independent map per field.
    pub fn per_field_matmul(self, w: Var<'t>) -> Var<'t> {
        let x = self.value();
        let wv = w.value();
        let x3 = x.view().into_dimensionality::<Ix3>().unwrap();
        let w3 = wv.view().into_dimensionality::<Ix3>().unwrap();
        let (bs, f, k) = x3.dim();
        let (f2, k2, n) = w3.dim();
        assert!(f == f2 && k == k2, "per_field_matmul {:?} x {:?}", x.shape(), wv.shape());
        let mut out = ndarray::Array3::<f64>::zeros((bs, f, n));
        for fi in 0..f {
            general_mat_mul(
                1.0,
                &x3.index_axis(Axis(1), fi),
                &w3.index_axis(Axis(0), fi),
                0.0,
                &mut out.index_axis_mut(Axis(1), fi),
            );
        }
        self.bin(w, out.into_dyn(), Op::PerFieldMatMul(self.id, w.id))
    }

    /// table `[M,D]`, ids `[B,F]` -> `[B,F,D]`
    pub fn gather(self, ids: Ids) -> Var<'t> {
        let t = self.value();
        let t2 = t.view().into_dimensionality::<Ix2>().unwrap();
        let (bs, f) = ids.dim();
        let d = t2.ncols();
        let mut out = ndarray::Array3::<f64>::zeros((bs, f, d));
        for b in 0..bs {
            for fi in 0..f {
                out.slice_mut(s![b, fi, ..]).assign(&t2.row(ids[[b, fi]]));
            }
        }
        self.un(out.into_dyn(), Op::Gather(self.id, ids))
    }

    /// vec `[M]`, ids `[B,F]` -> `[B,F]`
    pub fn gather_vec(self, ids: Ids) -> Var<'t> {
        let t = self.value();
        let (bs, f) = ids.dim();
        let mut out = Array2::<f64>::zeros((bs, f));
        for b in 0..bs {
            for fi in 0..f {
                out[[b, fi]] = t[ids[[b, fi]]];
            }
        }
        self.un(out.into_dyn(), Op::GatherVec(self.id, ids))
    }

    pub fn relu(self) -> Var<'t> {
        let v = self.value().mapv(|x| x.max(0.0));
        self.un(v, Op::Relu(self.id))
    }

    pub fn sigmoid(self) -> Var<'t> {
        let v = self.value().mapv(stable_sigmoid);
        self.un(v, Op::Sigmoid(self.id))
    }

    pub fn exp(self) -> Var<'t> {
        let v = self.value().mapv(f64::exp);
        self.un(v, Op::Exp(self.id))
    }

    pub fn ln(self) -> Var<'t> {
        let v = self.value().mapv(f64::ln);
        self.un(v, Op::Ln(self.id))
    }

    /// `max(|x|, floor)` — keeps logarithms finite.
    pub fn abs_clamp_floor(self, floor: f64) -> Var<'t> {
        let v = self.value().mapv(|x| x.abs().max(floor));
        self.un(v, Op::AbsClampFloor(self.id, floor))
    }

    /// Softmax over the last axis, numerically shifted.
    pub fn softmax_last(self) -> Var<'t> {
        let x = self.value();
        let last = x.ndim() - 1;
        let mut v = x.as_ref().clone();
        let maxes = x.map_axis(Axis(last), |row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        v.zip_mut_with(&maxes.insert_axis(Axis(last)).broadcast(x.raw_dim()).unwrap().to_owned(), |e, m| {
            *e = (*e - m).exp()
        });
        let sums = v.sum_axis(Axis(last)).insert_axis(Axis(last));
        v = &v / &sums.broadcast(x.raw_dim()).unwrap();
        self.un(v, Op::SoftmaxLast(self.id))
    }

    pub fn sum_axis(self, axis: usize) -> Var<'t> {
        let v = self.value().sum_axis(Axis(axis));
        self.un(v, Op::SumAxis(self.id, axis))
    }

    /// Mean over the last axis (helper composed of sum + scale).
    pub fn mean_last(self) -> Var<'t> {
        let n = *self.value().shape().last().unwrap() as f64;
        let last = self.value().ndim() - 1;
        self.sum_axis(last).scale(1.0 / n)
    }

    pub fn sum_all(self) -> Var<'t> {
        let v = ArrayD::from_elem(IxDyn(&[]), self.value().sum());
        self.un(v, Op::SumAll(self.id))
    }

    pub fn mean_all(self) -> Var<'t> {
        let val = self.value();
        let v = ArrayD::from_elem(IxDyn(&[]), val.sum() / val.len() as f64);
        self.un(v, Op::MeanAll(self.id))
    }

    pub fn reshape(self, shape: &[usize]) -> Var<'t> {
        let a = self.value();
        assert_eq!(a.len(), shape.iter().product::<usize>(), "reshape {:?} -> {:?}", a.shape(), shape);
        let v = a
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order(IxDyn(shape))
            .unwrap();
        self.un(v, Op::Reshape(self.id))
    }

    pub fn permute(self, perm: &[usize]) -> Var<'t> {
        let v = self
            .value()
            .as_ref()
            .clone()
            .permuted_axes(IxDyn(perm))
            .as_standard_layout()
            .to_owned();
        self.un(v, Op::Permute(self.id, perm.to_vec()))
    }

    /// Layer normalization over the last axis with learned scale/shift.
    pub fn layer_norm(self, gamma: Var<'t>, beta: Var<'t>, eps: f64) -> Var<'t> {
        let x = self.value();
        let last = x.ndim() - 1;
        let mu = x.mean_axis(Axis(last)).unwrap().insert_axis(Axis(last));
        let centered = &*x - &mu.broadcast(x.raw_dim()).unwrap();
        let var = centered.mapv(|c| c * c).mean_axis(Axis(last)).unwrap().insert_axis(Axis(last));
        let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
        let xhat = &centered * &inv_std.broadcast(x.raw_dim()).unwrap();
        let g = gamma.value();
        let b = beta.value();
        let v = &xhat * &g.broadcast(x.raw_dim()).unwrap() + &b.broadcast(x.raw_dim()).unwrap();
        let rg = self.tape.requires_grad(self.id)
            || gamma.tape.requires_grad(gamma.id)
            || beta.tape.requires_grad(beta.id);
        self.tape.push(v, Op::LayerNorm { x: self.id, gamma: gamma.id, beta: beta.id, eps }, rg)
    }

    /// Elementwise product with a fixed mask (dropout).
    pub fn mul_mask(self, mask: Arc<ArrayD<f64>>) -> Var<'t> {
        let v = &*self.value() * &*mask;
        self.un(v, Op::MulMask(self.id, mask))
    }

    /// Mean binary cross-entropy over logits `[B]` against fixed 0/1 targets.
    pub fn bce_with_logits_mean(self, targets: Arc<Array1<f64>>) -> Var<'t> {
        let z = self.value();
        assert_eq!(z.ndim(), 1, "bce expects logits [B]");
        assert_eq!(z.len(), targets.len());
        let mut acc = 0.0;
        for (zi, yi) in z.iter().zip(targets.iter()) {
            acc += softplus(*zi) - yi * zi;
        }
        let v = ArrayD::from_elem(IxDyn(&[]), acc / z.len() as f64);
        self.un(v, Op::BceWithLogitsMean { z: self.id, targets })
    }
}

/// Concatenate along `axis`.
pub fn concat<'t>(tape: &'t Tape, parts: &[Var<'t>], axis: usize) -> Var<'t> {
    assert!(!parts.is_empty());
    let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
    let views: Vec<_> = values.iter().map(|v| v.view()).collect();
    let v = ndarray::concatenate(Axis(axis), &views).expect("concat shape mismatch");
    let rg = parts.iter().any(|p| tape.requires_grad(p.id));
    tape.push(v, Op::Concat(parts.iter().map(|p| p.id).collect(), axis), rg)
}

fn accumulate(nodes: &[Node], grads: &mut [Option<ArrayD<f64>>], pid: usize, contrib: ArrayD<f64>) {
    if !nodes[pid].requires_grad {
        return;
    }
    debug_assert_eq!(contrib.shape(), nodes[pid].value.shape());
    match &mut grads[pid] {
        Some(g) => *g += &contrib,
        slot @ None => *slot = Some(contrib),
    }
}

pub(crate) fn backward_step(nodes: &[Node], id: usize, grad: &ArrayD<f64>, grads: &mut [Option<ArrayD<f64>>]) {
    let val = |i: usize| -> &ArrayD<f64> { &nodes[i].value };
    match &nodes[id].op {
        Op::Leaf | Op::Constant => {}
        Op::Add(a, b) => {
            accumulate(nodes, grads, *a, grad.clone());
            accumulate(nodes, grads, *b, grad.clone());
        }
        Op::Sub(a, b) => {
            accumulate(nodes, grads, *a, grad.clone());
            accumulate(nodes, grads, *b, grad.mapv(|x| -x));
        }
        Op::Mul(a, b) => {
            accumulate(nodes, grads, *a, grad * val(*b));
            accumulate(nodes, grads, *b, grad * val(*a));
        }
        Op::Neg(a) => accumulate(nodes, grads, *a, grad.mapv(|x| -x)),
        Op::Scale(a, c) => accumulate(nodes, grads, *a, grad.mapv(|x| c * x)),
        Op::AddScalar(a) => accumulate(nodes, grads, *a, grad.clone()),
        Op::BroadcastTo(a) => {
            accumulate(nodes, grads, *a, reduce_to_shape(grad, val(*a).shape()));
        }
        Op::MatMul(a, b) => {
            let g2 = grad.view().into_dimensionality::<Ix2>().unwrap();
            let av = val(*a).view().into_dimensionality::<Ix2>().unwrap();
            let bv = val(*b).view().into_dimensionality::<Ix2>().unwrap();
            accumulate(nodes, grads, *a, g2.dot(&bv.t()).into_dyn());
            accumulate(nodes, grads, *b, av.t().dot(&g2).into_dyn());
        }
        Op::BatchMatMul(a, b) => {
            let g3 = grad.view().into_dimensionality::<Ix3>().unwrap();
            let av = val(*a).view().into_dimensionality::<Ix3>().unwrap();
            let bv = val(*b).view().into_dimensionality::<Ix3>().unwrap();
            let (bs, m, k) = av.dim();
            let n = bv.dim().2;
            let mut ga = ndarray::Array3::<f64>::zeros((bs, m, k));
            let mut gb = ndarray::Array3::<f64>::zeros((bs, k, n));
            for i in 0..bs {
                let gi = g3.index_axis(Axis(0), i);
                let bt = bv.index_axis(Axis(0), i);
                let at = av.index_axis(Axis(0), i);
                general_mat_mul(1.0, &gi, &bt.t(), 0.0, &mut ga.index_axis_mut(Axis(0), i));
                general_mat_mul(1.0, &at.t(), &gi, 0.0, &mut gb.index_axis_mut(Axis(0), i));
            }
            accumulate(nodes, grads, *a, ga.into_dyn());
            accumulate(nodes, grads, *b, gb.into_dyn());
        }
        Op::BatchMatMulNT(a, b) => {
            let g3 = grad.view().into_dimensionality::<Ix3>().unwrap();
            let av = val(*a).view().into_dimensionality::<Ix3>().unwrap();
            let bv = val(*b).view().into_dimensionality::<Ix3>().unwrap();
            let (bs, m, k) = av.dim();
            let n = bv.dim().1;
            let mut ga = ndarray::Array3::<f64>::zeros((bs, m, k));
            let mut gb = ndarray::Array3::<f64>::zeros((bs, n, k));
            for i in 0..bs {
                let gi = g3.index_axis(Axis(0), i);
                let ai = av.index_axis(Axis(0), i);
                let bi = bv.index_axis(Axis(0), i);
                general_mat_mul(1.0, &gi, &bi, 0.0, &mut ga.index_axis_mut(Axis(0), i));
                general_mat_mul(1.0, &gi.t(), &ai, 0.0, &mut gb.index_axis_mut(Axis(0), i));
            }
            accumulate(nodes, grads, *a, ga.into_dyn());
            accumulate(nodes, grads, *b, gb.into_dyn());
        }
        Op::PerFieldMatMul(x, w) => {
            let g3 = grad.view().into_dimensionality::<Ix3>().unwrap();
            let xv = val(*x).view().into_dimensionality::<Ix3>().unwrap();
            let wv = val(*w).view().into_dimensionality::<Ix3>().unwrap();
            let (bs, f, k) = xv.dim();
            let n = wv.dim().2;
            let mut gx = ndarray::Array3::<f64>::zeros((bs, f, k));
            let mut gw = ndarray::Array3::<f64>::zeros((f, k, n));
            for fi in 0..f {
                let gi = g3.index_axis(Axis(1), fi);
                let xi = xv.index_axis(Axis(1), fi);
                let wi = wv.index_axis(Axis(0), fi);
                general_mat_mul(1.0, &gi, &wi.t(), 0.0, &mut gx.index_axis_mut(Axis(1), fi));
                general_mat_mul(1.0, &xi.t(), &gi, 0.0, &mut gw.index_axis_mut(Axis(0), fi));
            }
            accumulate(nodes, grads, *x, gx.into_dyn());
            accumulate(nodes, grads, *w, gw.into_dyn());
        }
        Op::Gather(t, ids) => {
            let tv = val(*t);
            let d = tv.shape()[1];
            let mut gt = Array2::<f64>::zeros((tv.shape()[0], d));
            let g3 = grad.view().into_dimensionality::<Ix3>().unwrap();
            let (bs, f) = ids.dim();
            for b in 0..bs {
                for fi in 0..f {
                    let mut row = gt.row_mut(ids[[b, fi]]);
                    row += &g3.slice(s![b, fi, ..]);
                }
            }
            accumulate(nodes, grads, *t, gt.into_dyn());
        }
        Op::GatherVec(t, ids) => {
            let tv = val(*t);
            let mut gt = Array1::<f64>::zeros(tv.len());
            let g2 = grad.view().into_dimensionality::<Ix2>().unwrap();
            let (bs, f) = ids.dim();
            for b in 0..bs {
                for fi in 0..f {
                    gt[ids[[b, fi]]] += g2[[b, fi]];
                }
            }
            accumulate(nodes, grads, *t, gt.into_dyn());
        }
        Op::Relu(a) => {
            let av = val(*a);
            let mut g = grad.clone();
            g.zip_mut_with(av, |gi, xi| {
                if *xi <= 0.0 {
                    *gi = 0.0
                }
            });
            accumulate(nodes, grads, *a, g);
        }
        Op::Sigmoid(a) => {
            let sv = &nodes[id].value;
            let g = grad * &sv.mapv(|sx| sx * (1.0 - sx));
            accumulate(nodes, grads, *a, g);
        }
        Op::Exp(a) => {
            let g = grad * &*nodes[id].value;
            accumulate(nodes, grads, *a, g);
        }
        Op::Ln(a) => {
            let g = grad / val(*a);
            accumulate(nodes, grads, *a, g);
        }
        Op::AbsClampFloor(a, floor) => {
            let av = val(*a);
            let mut g = grad.clone();
            g.zip_mut_with(av, |gi, xi| {
                if xi.abs() <= *floor {
                    *gi = 0.0
                } else if *xi < 0.0 {
                    *gi = -*gi
                }
            });
            accumulate(nodes, grads, *a, g);
        }
        Op::SoftmaxLast(a) => {
            let sv = &*nodes[id].value;
            let last = sv.ndim() - 1;
            let gs = grad * sv;
            let dot = gs.sum_axis(Axis(last)).insert_axis(Axis(last));
            let g = sv * &(grad - &dot.broadcast(sv.raw_dim()).unwrap());
            accumulate(nodes, grads, *a, g);
        }
        Op::SumAxis(a, axis) => {
            let target = val(*a).raw_dim();
            let g = grad
                .clone()
                .insert_axis(Axis(*axis))
                .broadcast(target.clone())
                .unwrap()
                .to_owned();
            accumulate(nodes, grads, *a, g);
        }
        Op::SumAll(a) => {
            let g0 = grad.iter().next().copied().unwrap();
            accumulate(nodes, grads, *a, ArrayD::from_elem(val(*a).raw_dim(), g0));
        }
        Op::MeanAll(a) => {
            let av = val(*a);
            let g0 = grad.iter().next().copied().unwrap() / av.len() as f64;
            accumulate(nodes, grads, *a, ArrayD::from_elem(av.raw_dim(), g0));
        }
        Op::Reshape(a) => {
            let g = grad
                .as_standard_layout()
                .to_owned()
                .into_shape_with_order(val(*a).raw_dim())
                .unwrap();
            accumulate(nodes, grads, *a, g);
        }
        Op::Permute(a, perm) => {
            let mut inverse = vec![0usize; perm.len()];
            for (i, &p) in perm.iter().enumerate() {
                inverse[p] = i;
            }
            let g = grad.clone().permuted_axes(IxDyn(&inverse)).as_standard_layout().to_owned();
            accumulate(nodes, grads, *a, g);
        }
        Op::Concat(parts, axis) => {
            let mut offset = 0;
            for &pid in parts {
                let extent = val(pid).shape()[*axis];
                let g = grad
                    .slice_axis(Axis(*axis), ndarray::Slice::from(offset..offset + extent))
                    .to_owned();
                accumulate(nodes, grads, pid, g);
                offset += extent;
            }
        }
        Op::LayerNorm { x, gamma, beta, eps } => {
            let xv = val(*x);
            let last = xv.ndim() - 1;
            let d = xv.shape()[last] as f64;
            let mu = xv.mean_axis(Axis(last)).unwrap().insert_axis(Axis(last));
            let centered = xv - &mu.broadcast(xv.raw_dim()).unwrap();
            let var = centered.mapv(|c| c * c).mean_axis(Axis(last)).unwrap().insert_axis(Axis(last));
            let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
            let inv_b = inv_std.broadcast(xv.raw_dim()).unwrap().to_owned();
            let xhat = &centered * &inv_b;

            let gv = val(*gamma);
            let dxhat = grad * &gv.broadcast(xv.raw_dim()).unwrap();
            let m1 = dxhat.sum_axis(Axis(last)).insert_axis(Axis(last)).mapv(|v| v / d);
            let m2 = (&dxhat * &xhat).sum_axis(Axis(last)).insert_axis(Axis(last)).mapv(|v| v / d);
            let dx = (&dxhat
                - &m1.broadcast(xv.raw_dim()).unwrap()
                - &(&xhat * &m2.broadcast(xv.raw_dim()).unwrap()))
                * &inv_b;
            accumulate(nodes, grads, *x, dx);

            let ggamma = reduce_to_shape(&(grad * &xhat), gv.shape());
            accumulate(nodes, grads, *gamma, ggamma);
            let gbeta = reduce_to_shape(grad, val(*beta).shape());
            accumulate(nodes, grads, *beta, gbeta);
        }
        Op::MulMask(a, mask) => {
            accumulate(nodes, grads, *a, grad * &**mask);
        }
        Op::BceWithLogitsMean { z, targets } => {
            let zv = val(*z);
            let g0 = grad.iter().next().copied().unwrap() / zv.len() as f64;
            let mut g = Array1::<f64>::zeros(zv.len());
            for (i, (zi, yi)) in zv.iter().zip(targets.iter()).enumerate() {
                g[i] = g0 * (stable_sigmoid(*zi) - yi);
            }
            accumulate(nodes, grads, *z, g.into_dyn());
        }
    }
}
