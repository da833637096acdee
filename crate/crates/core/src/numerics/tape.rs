use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::tensor::{matmul, matmul_nt, matmul_tn, Tensor};
use std::collections::BTreeMap;

/// Handle into a `Tape`. Only valid for the tape that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Value,
    Param(String),
    /// x (n x k) * w (k x m) + b (m), b broadcast over rows.
    Affine { x: NodeId, w: NodeId, b: NodeId },
    MatMul { a: NodeId, b: NodeId },
    /// a (n x k) * b^T with b stored (m x k).
    MatMulNt { a: NodeId, b: NodeId },
    Tanh { x: NodeId },
    SoftmaxRows { x: NodeId },
    ConcatCols { a: NodeId, b: NodeId },
    /// Rows of a (v x d) table selected by index, duplicates allowed.
    GatherRows { table: NodeId, rows: Vec<usize> },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Scale { x: NodeId, factor: f64 },
    /// Scalar mean of squared entries.
    MeanSq { x: NodeId },
    /// Identity value, no gradient flows past it. The operand is kept so
    /// the recorded graph stays complete for debugging.
    StopGrad {
        #[allow(dead_code)]
        x: NodeId,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Append-only computation record. Operands always precede their results,
/// so one reverse sweep visits nodes in valid topological order. Backward
/// only propagates from nodes an adjoint actually reached; everything
/// behind a `StopGrad` is skipped rather than visited with zeros, which
/// keeps its gradients bitwise identical to substituting the stopped
/// branch with a constant.
pub struct Tape {
    nodes: Vec<Node>,
    param_nodes: BTreeMap<String, NodeId>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            nodes: Vec::new(),
            param_nodes: BTreeMap::new(),
        }
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Value)
    }

    /// One node per parameter name; repeated lookups share it, so adjoints
    /// from every use accumulate on a single leaf.
    pub fn param(&mut self, params: &ParamSet, name: &str) -> Result<NodeId> {
        if let Some(&id) = self.param_nodes.get(name) {
            return Ok(id);
        }
        let value = params.get(name)?.clone();
        let id = self.push(value, Op::Param(name.to_string()));
        self.param_nodes.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let xv = self.value(x);
        let wv = self.value(w);
        let bv = self.value(b);
        if bv.rank() != 1 || bv.shape()[0] != wv.shape().get(1).copied().unwrap_or(0) {
            return Err(Error::ShapeMismatch {
                op: "affine",
                lhs: wv.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let mut out = matmul(xv, wv)?;
        let m = out.cols();
        let bias = self.value(b).data().to_vec();
        for i in 0..out.rows() {
            let row = &mut out.data_mut()[i * m..(i + 1) * m];
            for (o, bv) in row.iter_mut().zip(&bias) {
                *o += bv;
            }
        }
        Ok(self.push(out, Op::Affine { x, w, b }))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul { a, b }))
    }

    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let out = matmul_nt(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMulNt { a, b }))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let out = Tensor::from_vec(v.shape(), v.data().iter().map(|e| e.tanh()).collect()).unwrap();
        self.push(out, Op::Tanh { x })
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let v = self.value(x);
        if v.rank() != 2 {
            return Err(Error::bad_input("softmax", format!("expected rank 2, got {:?}", v.shape())));
        }
        let (n, m) = (v.rows(), v.cols());
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let row = v.row(i);
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let orow = &mut out[i * m..(i + 1) * m];
            let mut sum = 0.0;
            for (o, &e) in orow.iter_mut().zip(row) {
                *o = (e - mx).exp();
                sum += *o;
            }
            for o in orow.iter_mut() {
                *o /= sum;
            }
        }
        let out = Tensor::from_vec(&[n, m], out)?;
        Ok(self.push(out, Op::SoftmaxRows { x }))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows() {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let (n, ca, cb) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![0.0; n * (ca + cb)];
        for i in 0..n {
            out[i * (ca + cb)..i * (ca + cb) + ca].copy_from_slice(av.row(i));
            out[i * (ca + cb) + ca..(i + 1) * (ca + cb)].copy_from_slice(bv.row(i));
        }
        let out = Tensor::from_vec(&[n, ca + cb], out)?;
        Ok(self.push(out, Op::ConcatCols { a, b }))
    }

    pub fn gather_rows(&mut self, table: NodeId, rows: &[usize]) -> Result<NodeId> {
        let tv = self.value(table);
        if tv.rank() != 2 {
            return Err(Error::bad_input("gather_rows", format!("table must be rank 2, got {:?}", tv.shape())));
        }
        if rows.is_empty() {
            return Err(Error::bad_input("gather_rows", "empty row list"));
        }
        let (v, d) = (tv.rows(), tv.cols());
        let mut out = vec![0.0; rows.len() * d];
        for (i, &r) in rows.iter().enumerate() {
            if r >= v {
                return Err(Error::bad_input("gather_rows", format!("row {r} out of range for table with {v} rows")));
            }
            out[i * d..(i + 1) * d].copy_from_slice(tv.row(r));
        }
        let out = Tensor::from_vec(&[rows.len(), d], out)?;
        Ok(self.push(out, Op::GatherRows { table, rows: rows.to_vec() }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b)).map_err(|_| Error::ShapeMismatch {
            op: "add",
            lhs: self.value(a).shape().to_vec(),
            rhs: self.value(b).shape().to_vec(),
        })?;
        Ok(self.push(out, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape() != bv.shape() {
            return Err(Error::ShapeMismatch {
                op: "sub",
                lhs: av.shape().to_vec(),
                rhs: bv.shape().to_vec(),
            });
        }
        let data = av.data().iter().zip(bv.data()).map(|(x, y)| x - y).collect();
        let out = Tensor::from_vec(av.shape(), data)?;
        Ok(self.push(out, Op::Sub { a, b }))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let out = self.value(x).scaled(factor);
        self.push(out, Op::Scale { x, factor })
    }

    pub fn mean_sq(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let n = v.numel() as f64;
        let s: f64 = v.data().iter().map(|e| e * e).sum();
        self.push(Tensor::scalar(s / n), Op::MeanSq { x })
    }

    pub fn stop_grad(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).clone();
        self.push(out, Op::StopGrad { x })
    }

    /// Reverse sweep from a scalar loss. Returns gradients for every
    /// parameter node the adjoint reached; parameters only used behind
    /// `StopGrad` are absent from the map.
    pub fn backward(&mut self, loss: NodeId) -> Result<BTreeMap<String, Tensor>> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(Error::bad_input("backward", format!("loss must be scalar, got shape {:?}", lv.shape())));
        }
        if !lv.is_finite() {
            return Err(Error::NonFinite { op: "backward" });
        }

        let mut adjoints: Vec<Option<Tensor>> = Vec::with_capacity(loss.0 + 1);
        adjoints.resize_with(loss.0 + 1, || None);
        adjoints[loss.0] = Some(Tensor::scalar(1.0));

        let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();

        for i in (0..=loss.0).rev() {
            let Some(g) = adjoints[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Value => {}
                Op::Param(name) => {
                    grads.insert(name.clone(), g);
                }
                Op::Affine { x, w, b } => {
                    let (x, w, b) = (*x, *w, *b);
                    let dx = matmul_nt(&g, self.value(w))?;
                    let dw = matmul_tn(self.value(x), &g)?;
                    let m = g.cols();
                    let mut db = vec![0.0; m];
                    for r in 0..g.rows() {
                        for (acc, &gv) in db.iter_mut().zip(g.row(r)) {
                            *acc += gv;
                        }
                    }
                    accumulate(&mut adjoints, x, dx)?;
                    accumulate(&mut adjoints, w, dw)?;
                    accumulate(&mut adjoints, b, Tensor::from_vec(&[m], db)?)?;
                }
                Op::MatMul { a, b } => {
                    let (a, b) = (*a, *b);
                    let da = matmul_nt(&g, self.value(b))?;
                    let db = matmul_tn(self.value(a), &g)?;
                    accumulate(&mut adjoints, a, da)?;
                    accumulate(&mut adjoints, b, db)?;
                }
                Op::MatMulNt { a, b } => {
                    let (a, b) = (*a, *b);
                    let da = matmul(&g, self.value(b))?;
                    let db = matmul_tn(&g, self.value(a))?;
                    accumulate(&mut adjoints, a, da)?;
                    accumulate(&mut adjoints, b, db)?;
                }
                Op::Tanh { x } => {
                    let x = *x;
                    let y = &self.nodes[i].value;
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gv, yv)| gv * (1.0 - yv * yv))
                        .collect();
                    let dx = Tensor::from_vec(y.shape(), data)?;
                    accumulate(&mut adjoints, x, dx)?;
                }
                Op::SoftmaxRows { x } => {
                    let x = *x;
                    let y = &self.nodes[i].value;
                    let (n, m) = (y.rows(), y.cols());
                    let mut dx = vec![0.0; n * m];
                    for r in 0..n {
                        let yrow = y.row(r);
                        let grow = g.row(r);
                        let dot: f64 = yrow.iter().zip(grow).map(|(yv, gv)| yv * gv).sum();
                        let drow = &mut dx[r * m..(r + 1) * m];
                        for ((d, &yv), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                            *d = yv * (gv - dot);
                        }
                    }
                    accumulate(&mut adjoints, x, Tensor::from_vec(&[n, m], dx)?)?;
                }
                Op::ConcatCols { a, b } => {
                    let (a, b) = (*a, *b);
                    let (ca, cb) = (self.value(a).cols(), self.value(b).cols());
                    let n = g.rows();
                    let mut da = vec![0.0; n * ca];
                    let mut db = vec![0.0; n * cb];
                    for r in 0..n {
                        let grow = g.row(r);
                        da[r * ca..(r + 1) * ca].copy_from_slice(&grow[..ca]);
                        db[r * cb..(r + 1) * cb].copy_from_slice(&grow[ca..]);
                    }
                    accumulate(&mut adjoints, a, Tensor::from_vec(&[n, ca], da)?)?;
                    accumulate(&mut adjoints, b, Tensor::from_vec(&[n, cb], db)?)?;
                }
                Op::GatherRows { table, rows } => {
                    let t = *table;
                    let rows = rows.clone();
                    let (v, d) = (self.value(t).rows(), self.value(t).cols());
                    let mut dt = vec![0.0; v * d];
                    for (i, &r) in rows.iter().enumerate() {
                        let grow = g.row(i);
                        let trow = &mut dt[r * d..(r + 1) * d];
                        for (slot, &gv) in trow.iter_mut().zip(grow) {
                            *slot += gv;
                        }
                    }
                    accumulate(&mut adjoints, t, Tensor::from_vec(&[v, d], dt)?)?;
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    accumulate(&mut adjoints, a, g.clone())?;
                    accumulate(&mut adjoints, b, g)?;
                }
                Op::Sub { a, b } => {
                    let (a, b) = (*a, *b);
                    accumulate(&mut adjoints, a, g.clone())?;
                    accumulate(&mut adjoints, b, g.scaled(-1.0))?;
                }
                Op::Scale { x, factor } => {
                    let (x, factor) = (*x, *factor);
                    accumulate(&mut adjoints, x, g.scaled(factor))?;
                }
                Op::MeanSq { x } => {
                    let x = *x;
                    let xv = self.value(x);
                    let gs = g.data()[0];
                    let scale = 2.0 * gs / xv.numel() as f64;
                    let dx = xv.scaled(scale);
                    accumulate(&mut adjoints, x, dx)?;
                }
                Op::StopGrad { .. } => {}
            }
        }
        Ok(grads)
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

fn accumulate(adjoints: &mut [Option<Tensor>], id: NodeId, delta: Tensor) -> Result<()> {
    match &mut adjoints[id.0] {
        slot @ None => *slot = Some(delta),
        Some(t) => t.add_assign(&delta)?,
    }
    Ok(())
}
