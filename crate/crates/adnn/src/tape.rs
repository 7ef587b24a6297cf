//! Scalar reverse-mode automatic differentiation on a flat tape.
//!
//! Every intermediate value of a computation is a node in a [`Tape`]. Nodes
//! are appended in evaluation order, so the tape is always topologically
//! sorted and a single forward sweep ([`Tape::refresh`]) re-evaluates the
//! whole graph after leaf values change. This makes the tape reusable: build
//! the graph once per model, then per optimizer iteration only swap leaf
//! values and sweep.
//!
//! Two backward passes are provided:
//!
//! * [`Tape::grad_values`] accumulates plain `f64` adjoints. Fast, but the
//!   result is terminal (not differentiable further). Used for the outermost
//!   gradient handed to the optimizer.
//! * [`Tape::grad_trace`] expresses the adjoint recursion with graph
//!   operations, so the returned gradients are ordinary nodes that can be
//!   evaluated, combined and differentiated again. Stresses obtained as
//!   energy derivatives, Biot residuals and Newton Jacobians are built this
//!   way, and second derivatives are exact because the traced first
//!   derivative is just another sub-graph.
//!
//! The gradient with respect to a node the output does not depend on is zero
//! (`grad_values` reports `0.0`, `grad_trace` returns the shared zero
//! constant). `relu`, `abs`, `sign` and `step` are differentiated with their
//! almost-everywhere derivative; at the kink the subgradient `0` is used, and
//! second derivatives through them vanish identically.

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    /// Position of the node on its tape; indexes the vectors returned by
    /// [`Tape::grad_values`].
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    /// Externally set value: an input or a parameter. Kept by `refresh`.
    Leaf,
    /// Fixed scalar baked into the graph. Kept by `refresh`.
    Const,
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Exp(u32),
    Ln(u32),
    Tanh(u32),
    Sigmoid(u32),
    Softplus(u32),
    Relu(u32),
    Abs(u32),
    /// `-1`, `0`, `+1`; derivative zero almost everywhere.
    Sign(u32),
    /// Heaviside step, `1` for positive input; derivative zero a.e.
    Step(u32),
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    val: f64,
}

/// Growable arena of scalar operations; see the module docs.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Shared constant `0.0`, present on every tape.
pub const ZERO: NodeId = NodeId(0);
/// Shared constant `1.0`, present on every tape.
pub const ONE: NodeId = NodeId(1);

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    // ln(1 + e^x), written to avoid overflow for large |x|.
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Tape {
    pub fn new() -> Self {
        let mut t = Tape { nodes: Vec::new() };
        t.push(Op::Const, 0.0);
        t.push(Op::Const, 1.0);
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, val: f64) -> NodeId {
        let id = NodeId(u32::try_from(self.nodes.len()).expect("tape exceeds u32 indices"));
        self.nodes.push(Node { op, val });
        id
    }

    /// New externally-set node (input or parameter).
    pub fn leaf(&mut self, val: f64) -> NodeId {
        self.push(Op::Leaf, val)
    }

    /// New fixed scalar. `0.0` and `1.0` reuse the shared constants.
    pub fn constant(&mut self, val: f64) -> NodeId {
        if val == 0.0 {
            ZERO
        } else if val == 1.0 {
            ONE
        } else {
            self.push(Op::Const, val)
        }
    }

    pub fn val(&self, id: NodeId) -> f64 {
        self.nodes[id.index()].val
    }

    /// Overwrite the value of a leaf (or constant) node.
    pub fn set(&mut self, id: NodeId, val: f64) {
        debug_assert!(
            matches!(self.nodes[id.index()].op, Op::Leaf | Op::Const),
            "set() is only valid on leaf/const nodes"
        );
        self.nodes[id.index()].val = val;
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.val(a) + self.val(b);
        self.push(Op::Add(a.0, b.0), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.val(a) - self.val(b);
        self.push(Op::Sub(a.0, b.0), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.val(a) * self.val(b);
        self.push(Op::Mul(a.0, b.0), v)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.val(a) / self.val(b);
        self.push(Op::Div(a.0, b.0), v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = -self.val(a);
        self.push(Op::Neg(a.0), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.val(a).exp();
        self.push(Op::Exp(a.0), v)
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        let v = self.val(a).ln();
        self.push(Op::Ln(a.0), v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.val(a).tanh();
        self.push(Op::Tanh(a.0), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v = sigmoid(self.val(a));
        self.push(Op::Sigmoid(a.0), v)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let v = softplus(self.val(a));
        self.push(Op::Softplus(a.0), v)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let x = self.val(a);
        let v = if x > 0.0 { x } else { 0.0 };
        self.push(Op::Relu(a.0), v)
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let v = self.val(a).abs();
        self.push(Op::Abs(a.0), v)
    }

    pub fn sign(&mut self, a: NodeId) -> NodeId {
        let x = self.val(a);
        let v = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.push(Op::Sign(a.0), v)
    }

    pub fn step(&mut self, a: NodeId) -> NodeId {
        let v = if self.val(a) > 0.0 { 1.0 } else { 0.0 };
        self.push(Op::Step(a.0), v)
    }

    /// Sum of a slice of nodes; `ZERO` for an empty slice.
    pub fn sum(&mut self, xs: &[NodeId]) -> NodeId {
        match xs {
            [] => ZERO,
            [x] => *x,
            [x, rest @ ..] => {
                let mut acc = *x;
                for &r in rest {
                    acc = self.add(acc, r);
                }
                acc
            }
        }
    }

    /// Re-evaluate every non-leaf node in topological (insertion) order.
    pub fn refresh(&mut self) {
        for i in 0..self.nodes.len() {
            let node = self.nodes[i];
            let v = |id: u32| self.nodes[id as usize].val;
            let val = match node.op {
                Op::Leaf | Op::Const => continue,
                Op::Add(a, b) => v(a) + v(b),
                Op::Sub(a, b) => v(a) - v(b),
                Op::Mul(a, b) => v(a) * v(b),
                Op::Div(a, b) => v(a) / v(b),
                Op::Neg(a) => -v(a),
                Op::Exp(a) => v(a).exp(),
                Op::Ln(a) => v(a).ln(),
                Op::Tanh(a) => v(a).tanh(),
                Op::Sigmoid(a) => sigmoid(v(a)),
                Op::Softplus(a) => softplus(v(a)),
                Op::Relu(a) => {
                    let x = v(a);
                    if x > 0.0 {
                        x
                    } else {
                        0.0
                    }
                }
                Op::Abs(a) => v(a).abs(),
                Op::Sign(a) => {
                    let x = v(a);
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Op::Step(a) => {
                    if v(a) > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            self.nodes[i].val = val;
        }
    }

    /// Adjoints of `y` with respect to every node, as plain numbers.
    ///
    /// The returned vector is indexed by node id and is not differentiable
    /// further; use [`Tape::grad_trace`] when the derivative itself must stay
    /// on the graph.
    pub fn grad_values(&self, y: NodeId) -> Vec<f64> {
        let mut adj = vec![0.0; self.nodes.len()];
        adj[y.index()] = 1.0;
        for i in (0..=y.index()).rev() {
            let a_bar = adj[i];
            if a_bar == 0.0 {
                continue;
            }
            let v = |id: u32| self.nodes[id as usize].val;
            match self.nodes[i].op {
                Op::Leaf | Op::Const => {}
                Op::Add(a, b) => {
                    adj[a as usize] += a_bar;
                    adj[b as usize] += a_bar;
                }
                Op::Sub(a, b) => {
                    adj[a as usize] += a_bar;
                    adj[b as usize] -= a_bar;
                }
                Op::Mul(a, b) => {
                    adj[a as usize] += a_bar * v(b);
                    adj[b as usize] += a_bar * v(a);
                }
                Op::Div(a, b) => {
                    adj[a as usize] += a_bar / v(b);
                    adj[b as usize] -= a_bar * self.nodes[i].val / v(b);
                }
                Op::Neg(a) => adj[a as usize] -= a_bar,
                Op::Exp(a) => adj[a as usize] += a_bar * self.nodes[i].val,
                Op::Ln(a) => adj[a as usize] += a_bar / v(a),
                Op::Tanh(a) => {
                    let t = self.nodes[i].val;
                    adj[a as usize] += a_bar * (1.0 - t * t);
                }
                Op::Sigmoid(a) => {
                    let s = self.nodes[i].val;
                    adj[a as usize] += a_bar * s * (1.0 - s);
                }
                Op::Softplus(a) => adj[a as usize] += a_bar * sigmoid(v(a)),
                Op::Relu(a) => {
                    if v(a) > 0.0 {
                        adj[a as usize] += a_bar;
                    }
                }
                Op::Abs(a) => {
                    let x = v(a);
                    if x > 0.0 {
                        adj[a as usize] += a_bar;
                    } else if x < 0.0 {
                        adj[a as usize] -= a_bar;
                    }
                }
                Op::Sign(_) | Op::Step(_) => {}
            }
        }
        adj
    }

    /// Backward sweep that emits graph nodes, so each returned gradient is a
    /// differentiable node of this tape.
    ///
    /// Returns the adjoint node of every id in `wrt`, in order. Ids the
    /// output does not depend on map to [`ZERO`].
    ///
    /// Only nodes on a path from a requested input to `y` receive adjoint
    /// nodes. Without that restriction every ancestor of `y` would, and a
    /// gradient taken on top of a long recurrent history would emit a
    /// sub-graph proportional to the whole tape instead of to the layer
    /// between the inputs and `y`.
    pub fn grad_trace(&mut self, y: NodeId, wrt: &[NodeId]) -> Vec<NodeId> {
        let lo = wrt.iter().map(|w| w.index()).min().unwrap_or(y.index());
        let mut active = vec![false; self.nodes.len()];
        for w in wrt {
            active[w.index()] = true;
        }
        for i in lo..=y.index() {
            if active[i] {
                continue;
            }
            active[i] = match self.nodes[i].op {
                Op::Leaf | Op::Const => false,
                Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => {
                    active[a as usize] || active[b as usize]
                }
                Op::Neg(a)
                | Op::Exp(a)
                | Op::Ln(a)
                | Op::Tanh(a)
                | Op::Sigmoid(a)
                | Op::Softplus(a)
                | Op::Relu(a)
                | Op::Abs(a)
                | Op::Sign(a)
                | Op::Step(a) => active[a as usize],
            };
        }

        let mut adj: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        adj[y.index()] = Some(ONE);
        for i in (lo..=y.index()).rev() {
            let Some(a_bar) = adj[i] else { continue };
            let node_i = NodeId(i as u32);
            let acc = |tape: &mut Tape, adj: &mut Vec<Option<NodeId>>, p: u32, term: NodeId| {
                let slot = &mut adj[p as usize];
                *slot = Some(match *slot {
                    None => term,
                    Some(existing) => tape.add(existing, term),
                });
            };
            match self.nodes[i].op {
                Op::Leaf | Op::Const => {}
                Op::Add(a, b) => {
                    if active[a as usize] {
                        acc(self, &mut adj, a, a_bar);
                    }
                    if active[b as usize] {
                        acc(self, &mut adj, b, a_bar);
                    }
                }
                Op::Sub(a, b) => {
                    if active[a as usize] {
                        acc(self, &mut adj, a, a_bar);
                    }
                    if active[b as usize] {
                        let t = self.neg(a_bar);
                        acc(self, &mut adj, b, t);
                    }
                }
                Op::Mul(a, b) => {
                    if active[a as usize] {
                        let ta = self.mul(a_bar, NodeId(b));
                        acc(self, &mut adj, a, ta);
                    }
                    if active[b as usize] {
                        let tb = self.mul(a_bar, NodeId(a));
                        acc(self, &mut adj, b, tb);
                    }
                }
                Op::Div(a, b) => {
                    if active[a as usize] {
                        let ta = self.div(a_bar, NodeId(b));
                        acc(self, &mut adj, a, ta);
                    }
                    if active[b as usize] {
                        // d(a/b)/db = -(a/b)/b
                        let q = self.div(node_i, NodeId(b));
                        let m = self.mul(a_bar, q);
                        let tb = self.neg(m);
                        acc(self, &mut adj, b, tb);
                    }
                }
                Op::Neg(a) => {
                    if active[a as usize] {
                        let t = self.neg(a_bar);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Exp(a) => {
                    if active[a as usize] {
                        let t = self.mul(a_bar, node_i);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Ln(a) => {
                    if active[a as usize] {
                        let t = self.div(a_bar, NodeId(a));
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Tanh(a) => {
                    if active[a as usize] {
                        let sq = self.mul(node_i, node_i);
                        let d = self.sub(ONE, sq);
                        let t = self.mul(a_bar, d);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Sigmoid(a) => {
                    if active[a as usize] {
                        let one_minus = self.sub(ONE, node_i);
                        let d = self.mul(node_i, one_minus);
                        let t = self.mul(a_bar, d);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Softplus(a) => {
                    if active[a as usize] {
                        let d = self.sigmoid(NodeId(a));
                        let t = self.mul(a_bar, d);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Relu(a) => {
                    if active[a as usize] {
                        let d = self.step(NodeId(a));
                        let t = self.mul(a_bar, d);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Abs(a) => {
                    if active[a as usize] {
                        let d = self.sign(NodeId(a));
                        let t = self.mul(a_bar, d);
                        acc(self, &mut adj, a, t);
                    }
                }
                Op::Sign(_) | Op::Step(_) => {}
            }
        }
        wrt.iter().map(|w| adj[w.index()].unwrap_or(ZERO)).collect()
    }

    /// Truncate the tape back to `len` nodes, discarding everything newer.
    ///
    /// Useful for scratch sub-graphs: record `len()`, build, read values,
    /// rewind. Node ids handed out past the mark become invalid.
    pub fn rewind(&mut self, len: usize) {
        debug_assert!(len >= 2, "cannot rewind past the shared constants");
        self.nodes.truncate(len);
    }
}
