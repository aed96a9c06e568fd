use super::{AutodiffError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var, m: usize, k: usize, n: usize },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias { x: Var, bias: Var, cols: usize },
    Scale(Var, f64),
    Square(Var),
    Relu(Var),
    MaxRows { x: Var, argmax: Vec<usize> },
    ConcatCols { parts: Vec<(Var, usize)>, rows: usize },
    BroadcastRows { x: Var, cols: usize },
    GatherRows { x: Var, index: Vec<usize>, cols: usize },
    Reshape(Var),
    RowNorms { x: Var, cols: usize },
    Sum(Var),
    Mean(Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul { .. } => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::AddBias { .. } => "add_bias",
            Op::Scale(..) => "scale",
            Op::Square(..) => "square",
            Op::Relu(..) => "relu",
            Op::MaxRows { .. } => "max_rows",
            Op::ConcatCols { .. } => "concat_cols",
            Op::BroadcastRows { .. } => "broadcast_rows",
            Op::GatherRows { .. } => "gather_rows",
            Op::Reshape(..) => "reshape",
            Op::RowNorms { .. } => "row_norms",
            Op::Sum(..) => "sum",
            Op::Mean(..) => "mean",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Define-by-run record of tensor operations.
///
/// Every method evaluates its operation eagerly and appends it to the tape, so
/// operation inputs always precede their outputs. [`Tape::backward`] walks the
/// record once in reverse.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the output with respect to `var`, if `var` requires grad.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// Gradient as a tensor shaped like `var`; zeros when `var` did not
    /// influence the output.
    pub fn tensor(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0].clone();
        let data = match &self.grads[var.0] {
            Some(g) => g.clone(),
            None => vec![0.0; shape.iter().product()],
        };
        Tensor::from_parts(shape, data, false)
    }

    pub(crate) fn take(&mut self, var: Var) -> Vec<f64> {
        let len = self.shapes[var.0].iter().product();
        self.grads[var.0].take().unwrap_or_else(|| vec![0.0; len])
    }
}

fn matmul_into(
    (m, k, n): (usize, usize, usize),
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(c.len(), m * n);
    // SAFETY: slice lengths and strides describe in-bounds m x k, k x n and
    // m x n row/column views; every caller derives them from checked shapes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].value.requires_grad()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, requires_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value: Tensor::from_parts(shape, data, requires_grad),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn mismatch(&self, op: &'static str, a: Var, b: Var) -> AutodiffError {
        AutodiffError::ShapeMismatch {
            op,
            lhs: self.shape(a).to_vec(),
            rhs: self.shape(b).to_vec(),
        }
    }

    fn matrix_dims(&self, op: &'static str, v: Var) -> Result<(usize, usize), AutodiffError> {
        self.value(v)
            .dims2()
            .ok_or_else(|| AutodiffError::RankMismatch {
                op,
                expected: 2,
                shape: self.shape(v).to_vec(),
            })
    }

    /// Records a leaf. Gradients are tracked when `tensor.requires_grad()`.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        self.nodes.push(Node {
            value: tensor,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a non-differentiable constant.
    pub fn constant(&mut self, mut tensor: Tensor) -> Var {
        tensor.set_requires_grad(false);
        self.leaf(tensor)
    }

    /// Matrix product `a @ b` for `a: [m, k]` and `b: [k, n]` or `b: [k]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (m, k) = self.matrix_dims("matmul", a)?;
        let (bk, n, out_shape) = match self.shape(b) {
            [bk, n] => (*bk, *n, vec![m, *n]),
            [bk] => (*bk, 1, vec![m]),
            _ => return Err(self.mismatch("matmul", a, b)),
        };
        if bk != k {
            return Err(self.mismatch("matmul", a, b));
        }
        let mut out = vec![0.0; m * n];
        matmul_into(
            (m, k, n),
            (self.value(a).data(), k as isize, 1),
            (self.value(b).data(), n as isize, 1),
            0.0,
            &mut out,
        );
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(out_shape, out, rg, Op::MatMul { a, b, m, k, n }))
    }

    fn elementwise(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<(Vec<usize>, Vec<f64>, bool), AutodiffError> {
        if self.shape(a) != self.shape(b) {
            return Err(self.mismatch(op, a, b));
        }
        let out = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok((self.shape(a).to_vec(), out, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (shape, out, rg) = self.elementwise("add", a, b, |x, y| x + y)?;
        Ok(self.push(shape, out, rg, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (shape, out, rg) = self.elementwise("sub", a, b, |x, y| x - y)?;
        Ok(self.push(shape, out, rg, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (shape, out, rg) = self.elementwise("mul", a, b, |x, y| x * y)?;
        Ok(self.push(shape, out, rg, Op::Mul(a, b)))
    }

    /// Adds `bias: [c]` to every row of `x: [r, c]`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var, AutodiffError> {
        let (_, c) = self.matrix_dims("add_bias", x)?;
        if self.shape(bias) != [c] {
            return Err(self.mismatch("add_bias", x, bias));
        }
        let b = self.value(bias).data();
        let out: Vec<f64> = self
            .value(x)
            .data()
            .chunks_exact(c)
            .flat_map(|row| row.iter().zip(b).map(|(v, bb)| v + bb))
            .collect();
        let rg = self.requires_grad(x) || self.requires_grad(bias);
        let shape = self.shape(x).to_vec();
        Ok(self.push(shape, out, rg, Op::AddBias { x, bias, cols: c }))
    }

    /// `x @ weight + bias`.
    pub fn linear(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var, AutodiffError> {
        let h = self.matmul(x, weight)?;
        self.add_bias(h, bias)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let out = self.value(x).data().iter().map(|v| v * factor).collect();
        let rg = self.requires_grad(x);
        let shape = self.shape(x).to_vec();
        self.push(shape, out, rg, Op::Scale(x, factor))
    }

    pub fn square(&mut self, x: Var) -> Var {
        let out = self.value(x).data().iter().map(|v| v * v).collect();
        let rg = self.requires_grad(x);
        let shape = self.shape(x).to_vec();
        self.push(shape, out, rg, Op::Square(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).data().iter().map(|&v| v.max(0.0)).collect();
        let rg = self.requires_grad(x);
        let shape = self.shape(x).to_vec();
        self.push(shape, out, rg, Op::Relu(x))
    }

    /// Column-wise maximum of `x: [r, c]`, giving `[c]`. Ties resolve to the
    /// lowest row index.
    pub fn max_rows(&mut self, x: Var) -> Result<Var, AutodiffError> {
        let (r, c) = self.matrix_dims("max_rows", x)?;
        let data = self.value(x).data();
        let mut best = data[..c].to_vec();
        let mut argmax: Vec<usize> = (0..c).collect();
        for i in 1..r {
            let row = &data[i * c..(i + 1) * c];
            for j in 0..c {
                if row[j] > best[j] {
                    best[j] = row[j];
                    argmax[j] = i * c + j;
                }
            }
        }
        let rg = self.requires_grad(x);
        Ok(self.push(vec![c], best, rg, Op::MaxRows { x, argmax }))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let first = *parts.first().ok_or(AutodiffError::EmptyInput { op: "concat_cols" })?;
        let (rows, _) = self.matrix_dims("concat_cols", first)?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.matrix_dims("concat_cols", p)?;
            if r != rows {
                return Err(self.mismatch("concat_cols", first, p));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p).data()[i * w..(i + 1) * w]);
            }
        }
        let rg = parts.iter().any(|&p| self.requires_grad(p));
        let parts = parts.iter().copied().zip(widths).collect();
        Ok(self.push(vec![rows, total], out, rg, Op::ConcatCols { parts, rows }))
    }

    /// Repeats a vector `x: [c]` as `rows` identical rows.
    pub fn broadcast_rows(&mut self, x: Var, rows: usize) -> Result<Var, AutodiffError> {
        let c = match self.shape(x) {
            [c] => *c,
            shape => {
                return Err(AutodiffError::RankMismatch {
                    op: "broadcast_rows",
                    expected: 1,
                    shape: shape.to_vec(),
                })
            }
        };
        if rows == 0 {
            return Err(AutodiffError::EmptyInput { op: "broadcast_rows" });
        }
        let v = self.value(x).data();
        let mut out = Vec::with_capacity(rows * c);
        for _ in 0..rows {
            out.extend_from_slice(v);
        }
        let rg = self.requires_grad(x);
        Ok(self.push(vec![rows, c], out, rg, Op::BroadcastRows { x, cols: c }))
    }

    /// Selects rows of `x: [r, c]` by index; indices may repeat.
    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Result<Var, AutodiffError> {
        let (r, c) = self.matrix_dims("gather_rows", x)?;
        if index.is_empty() {
            return Err(AutodiffError::EmptyInput { op: "gather_rows" });
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= r) {
            return Err(AutodiffError::IndexOutOfRange {
                op: "gather_rows",
                index: bad,
                len: r,
            });
        }
        let data = self.value(x).data();
        let mut out = Vec::with_capacity(index.len() * c);
        for &i in index {
            out.extend_from_slice(&data[i * c..(i + 1) * c]);
        }
        let rg = self.requires_grad(x);
        Ok(self.push(
            vec![index.len(), c],
            out,
            rg,
            Op::GatherRows {
                x,
                index: index.to_vec(),
                cols: c,
            },
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: impl Into<Vec<usize>>) -> Result<Var, AutodiffError> {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        if n != self.value(x).numel() || shape.iter().any(|&d| d == 0) {
            return Err(AutodiffError::ShapeMismatch {
                op: "reshape",
                lhs: self.shape(x).to_vec(),
                rhs: shape,
            });
        }
        let out = self.value(x).data().to_vec();
        let rg = self.requires_grad(x);
        Ok(self.push(shape, out, rg, Op::Reshape(x)))
    }

    /// Euclidean norm of every row of `x: [r, c]`, giving `[r]`.
    pub fn row_norms(&mut self, x: Var) -> Result<Var, AutodiffError> {
        let (r, c) = self.matrix_dims("row_norms", x)?;
        let out = self
            .value(x)
            .data()
            .chunks_exact(c)
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let rg = self.requires_grad(x);
        Ok(self.push(vec![r], out, rg, Op::RowNorms { x, cols: c }))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.requires_grad(x);
        self.push(Vec::new(), vec![s], rg, Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x).data();
        let s = v.iter().sum::<f64>() / v.len() as f64;
        let rg = self.requires_grad(x);
        self.push(Vec::new(), vec![s], rg, Op::Mean(x))
    }

    /// Reverse pass from a scalar output. Every recorded operation is visited
    /// once, in reverse recording order.
    pub fn backward(&self, output: Var) -> Result<Gradients, AutodiffError> {
        let out_value = self.value(output);
        if !out_value.is_scalar() {
            return Err(AutodiffError::NonScalarOutput {
                shape: out_value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(vec![1.0]);

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.value.requires_grad() {
                continue;
            }
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let shapes = self.nodes[..=output.0]
            .iter()
            .map(|n| n.value.shape().to_vec())
            .collect();
        for (i, g) in grads.iter_mut().enumerate() {
            if !self.nodes[i].value.requires_grad() {
                *g = None;
            }
        }
        Ok(Gradients { grads, shapes })
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        if !self.requires_grad(v) {
            return None;
        }
        let len = self.value(v).numel();
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, m, k, n } => {
                let (m, k, n) = (*m, *k, *n);
                if let Some(ga) = self.slot(grads, *a) {
                    // dA += dC @ B^T
                    matmul_into(
                        (m, n, k),
                        (g, n as isize, 1),
                        (self.value(*b).data(), 1, n as isize),
                        1.0,
                        ga,
                    );
                }
                if let Some(gb) = self.slot(grads, *b) {
                    // dB += A^T @ dC
                    matmul_into(
                        (k, m, n),
                        (self.value(*a).data(), 1, k as isize),
                        (g, n as isize, 1),
                        1.0,
                        gb,
                    );
                }
            }
            Op::Add(a, b) => {
                if let Some(ga) = self.slot(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(x, y)| *x += y);
                }
                if let Some(gb) = self.slot(grads, *b) {
                    gb.iter_mut().zip(g).for_each(|(x, y)| *x += y);
                }
            }
            Op::Sub(a, b) => {
                if let Some(ga) = self.slot(grads, *a) {
                    ga.iter_mut().zip(g).for_each(|(x, y)| *x += y);
                }
                if let Some(gb) = self.slot(grads, *b) {
                    gb.iter_mut().zip(g).for_each(|(x, y)| *x -= y);
                }
            }
            Op::Mul(a, b) => {
                if self.requires_grad(*a) {
                    let bv = self.value(*b).data();
                    let ga = self.slot(grads, *a).unwrap();
                    for ((x, y), w) in ga.iter_mut().zip(g).zip(bv) {
                        *x += y * w;
                    }
                }
                if self.requires_grad(*b) {
                    let av = self.value(*a).data();
                    let gb = self.slot(grads, *b).unwrap();
                    for ((x, y), w) in gb.iter_mut().zip(g).zip(av) {
                        *x += y * w;
                    }
                }
            }
            Op::AddBias { x, bias, cols } => {
                if let Some(gx) = self.slot(grads, *x) {
                    gx.iter_mut().zip(g).for_each(|(a, b)| *a += b);
                }
                if let Some(gb) = self.slot(grads, *bias) {
                    for row in g.chunks_exact(*cols) {
                        gb.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                    }
                }
            }
            Op::Scale(x, f) => {
                if let Some(gx) = self.slot(grads, *x) {
                    gx.iter_mut().zip(g).for_each(|(a, b)| *a += b * f);
                }
            }
            Op::Square(x) => {
                if self.requires_grad(*x) {
                    let xv = self.value(*x).data();
                    let gx = self.slot(grads, *x).unwrap();
                    for ((a, b), v) in gx.iter_mut().zip(g).zip(xv) {
                        *a += 2.0 * v * b;
                    }
                }
            }
            Op::Relu(x) => {
                let out = node.value.data();
                if let Some(gx) = self.slot(grads, *x) {
                    for ((a, b), o) in gx.iter_mut().zip(g).zip(out) {
                        if *o > 0.0 {
                            *a += b;
                        }
                    }
                }
            }
            Op::MaxRows { x, argmax } => {
                if let Some(gx) = self.slot(grads, *x) {
                    for (&i, b) in argmax.iter().zip(g) {
                        gx[i] += b;
                    }
                }
            }
            Op::ConcatCols { parts, rows } => {
                let total: usize = parts.iter().map(|p| p.1).sum();
                let mut offset = 0;
                for &(p, w) in parts {
                    if let Some(gp) = self.slot(grads, p) {
                        for i in 0..*rows {
                            let src = &g[i * total + offset..i * total + offset + w];
                            gp[i * w..(i + 1) * w]
                                .iter_mut()
                                .zip(src)
                                .for_each(|(a, b)| *a += b);
                        }
                    }
                    offset += w;
                }
            }
            Op::BroadcastRows { x, cols } => {
                if let Some(gx) = self.slot(grads, *x) {
                    for row in g.chunks_exact(*cols) {
                        gx.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                    }
                }
            }
            Op::GatherRows { x, index, cols } => {
                let c = *cols;
                if let Some(gx) = self.slot(grads, *x) {
                    for (row, &i) in g.chunks_exact(c).zip(index) {
                        gx[i * c..(i + 1) * c]
                            .iter_mut()
                            .zip(row)
                            .for_each(|(a, b)| *a += b);
                    }
                }
            }
            Op::Reshape(x) => {
                if let Some(gx) = self.slot(grads, *x) {
                    gx.iter_mut().zip(g).for_each(|(a, b)| *a += b);
                }
            }
            Op::RowNorms { x, cols } => {
                if self.requires_grad(*x) {
                    let c = *cols;
                    let xv = self.value(*x).data();
                    let norms = node.value.data();
                    let gx = self.slot(grads, *x).unwrap();
                    for (i, (&nrm, &b)) in norms.iter().zip(g).enumerate() {
                        if nrm > 0.0 {
                            let s = b / nrm;
                            for j in 0..c {
                                gx[i * c + j] += s * xv[i * c + j];
                            }
                        }
                    }
                }
            }
            Op::Sum(x) => {
                if let Some(gx) = self.slot(grads, *x) {
                    gx.iter_mut().for_each(|a| *a += g[0]);
                }
            }
            Op::Mean(x) => {
                if let Some(gx) = self.slot(grads, *x) {
                    let s = g[0] / gx.len() as f64;
                    gx.iter_mut().for_each(|a| *a += s);
                }
            }
        }
    }

    /// Names of the recorded operations, in order.
    pub fn op_names(&self) -> Vec<&'static str> {
        self.nodes.iter().map(|n| n.op.name()).collect()
    }
}
