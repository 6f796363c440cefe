"""Closed-form expression trees for chart evaluators.

Nodes follow the serialization grammar
``{"op": "add|mul|pow|sin|cos|exp|var|const", "args": [...]}`` with variables
named ``"x1".."xn"``.  Trees are built through the smart constructors below,
which fold constants and drop algebraic no-ops so that repeated symbolic
differentiation does not blow up.  Evaluation is vectorized over batches of
points and shares work across common subexpressions.
"""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = [
    "Expr", "const", "var", "add", "mul", "pow_", "sin_", "cos_", "exp_",
    "neg", "sub", "div", "sqrt_", "diff", "evaluate", "to_json", "from_json",
    "polynomial_2d", "chebyshev_fit", "vdot", "vadd", "vscale", "vsub",
]

_SCALAR_OPS = {"sin", "cos", "exp"}


class Expr:
    """One node of an expression DAG."""

    __slots__ = ("op", "args", "_hash")

    def __init__(self, op, args):
        self.op = op
        self.args = args
        self._hash = None

    def __hash__(self):
        if self._hash is None:
            if self.op in ("const", "var"):
                self._hash = hash((self.op, self.args))
            else:
                self._hash = hash((self.op, tuple(id(a) if isinstance(a, Expr) else a for a in self.args)))
        return self._hash

    def __repr__(self):
        if self.op == "const":
            return f"{self.args[0]:g}"
        if self.op == "var":
            return f"x{self.args[0] + 1}"
        return f"{self.op}({', '.join(map(repr, self.args))})"

    # numpy-friendly operators make chart-building code readable
    def __add__(self, other):
        return add(self, _as_expr(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, _as_expr(other))

    def __rsub__(self, other):
        return sub(_as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __pow__(self, e):
        return pow_(self, e)


_ZERO = Expr("const", (0.0,))
_ONE = Expr("const", (1.0,))


def _as_expr(x):
    if isinstance(x, Expr):
        return x
    return const(float(x))


def const(c):
    c = float(c)
    if c == 0.0:
        return _ZERO
    if c == 1.0:
        return _ONE
    return Expr("const", (c,))


def var(i):
    return Expr("var", (int(i),))


def add(*terms):
    flat = []
    c = 0.0
    for t in terms:
        t = _as_expr(t)
        if t.op == "const":
            c += t.args[0]
        elif t.op == "add":
            for s in t.args:
                if s.op == "const":
                    c += s.args[0]
                else:
                    flat.append(s)
        else:
            flat.append(t)
    if c != 0.0:
        flat.append(const(c))
    if not flat:
        return _ZERO
    if len(flat) == 1:
        return flat[0]
    return Expr("add", tuple(flat))


def mul(*factors):
    flat = []
    c = 1.0
    for f in factors:
        f = _as_expr(f)
        if f.op == "const":
            c *= f.args[0]
        elif f.op == "mul":
            for s in f.args:
                if s.op == "const":
                    c *= s.args[0]
                else:
                    flat.append(s)
        else:
            flat.append(f)
    if c == 0.0:
        return _ZERO
    if c != 1.0:
        flat.insert(0, const(c))
    if not flat:
        return _ONE
    if len(flat) == 1:
        return flat[0]
    return Expr("mul", tuple(flat))


def pow_(base, exponent):
    base = _as_expr(base)
    e = float(exponent)
    if e == 0.0:
        return _ONE
    if e == 1.0:
        return base
    if base.op == "const":
        return const(base.args[0] ** e)
    if base.op == "pow":
        return pow_(base.args[0], base.args[1] * e)
    return Expr("pow", (base, e))


def sin_(a):
    a = _as_expr(a)
    if a.op == "const":
        return const(math.sin(a.args[0]))
    return Expr("sin", (a,))


def cos_(a):
    a = _as_expr(a)
    if a.op == "const":
        return const(math.cos(a.args[0]))
    return Expr("cos", (a,))


def exp_(a):
    a = _as_expr(a)
    if a.op == "const":
        return const(math.exp(a.args[0]))
    return Expr("exp", (a,))


def neg(a):
    return mul(const(-1.0), _as_expr(a))


def sub(a, b):
    return add(_as_expr(a), neg(b))


def div(a, b):
    return mul(_as_expr(a), pow_(b, -1.0))


def sqrt_(a):
    return pow_(a, 0.5)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(exprs, points):
    """Evaluate expressions on a batch of points.

    Parameters
    ----------
    exprs : Expr or sequence of Expr
    points : (m, n) array of parameter values

    Returns
    -------
    (m,) array for a single expression, else (m, len(exprs)) array.
    """
    single = isinstance(exprs, Expr)
    roots = [exprs] if single else list(exprs)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m = P.shape[0]
    memo = {}

    def ev(node):
        key = id(node)
        got = memo.get(key)
        if got is not None:
            return got
        op = node.op
        if op == "const":
            out = np.full(m, node.args[0])
        elif op == "var":
            out = P[:, node.args[0]]
        elif op == "add":
            out = ev(node.args[0]).copy()
            for a in node.args[1:]:
                out += ev(a)
        elif op == "mul":
            out = ev(node.args[0]).copy()
            for a in node.args[1:]:
                out *= ev(a)
        elif op == "pow":
            base, e = node.args
            b = ev(base)
            if e == int(e) and abs(e) <= 64:
                ei = int(e)
                out = b ** ei if ei >= 0 else 1.0 / (b ** (-ei))
            else:
                out = np.power(b, e)
        elif op == "sin":
            out = np.sin(ev(node.args[0]))
        elif op == "cos":
            out = np.cos(ev(node.args[0]))
        elif op == "exp":
            out = np.exp(ev(node.args[0]))
        else:
            raise ValueError(f"unknown op {op!r}")
        memo[key] = out
        return out

    # iterative pre-pass to avoid recursion limits on deep trees
    _force_postorder(roots, memo, P, m)
    cols = [ev(r) for r in roots]
    if single:
        return cols[0]
    return np.stack(cols, axis=1)


def _force_postorder(roots, memo, P, m):
    """Seed the memo bottom-up so the recursive pass never goes deep."""
    stack = [(r, False) for r in roots]
    seen = set()
    order = []
    while stack:
        node, expanded = stack.pop()
        if id(node) in memo or (id(node) in seen and not expanded):
            continue
        if expanded:
            order.append(node)
            continue
        seen.add(id(node))
        stack.append((node, True))
        if node.op not in ("const", "var"):
            for a in node.args:
                if isinstance(a, Expr) and id(a) not in memo and id(a) not in seen:
                    stack.append((a, False))
    for node in order:
        if id(node) in memo:
            continue
        op = node.op
        if op == "const":
            memo[id(node)] = np.full(m, node.args[0])
        elif op == "var":
            memo[id(node)] = P[:, node.args[0]]
        elif op == "add":
            out = memo[id(node.args[0])].copy()
            for a in node.args[1:]:
                out += memo[id(a)]
            memo[id(node)] = out
        elif op == "mul":
            out = memo[id(node.args[0])].copy()
            for a in node.args[1:]:
                out *= memo[id(a)]
            memo[id(node)] = out
        elif op == "pow":
            base, e = node.args
            b = memo[id(base)]
            if e == int(e) and abs(e) <= 64:
                ei = int(e)
                memo[id(node)] = b ** ei if ei >= 0 else 1.0 / (b ** (-ei))
            else:
                memo[id(node)] = np.power(b, e)
        elif op == "sin":
            memo[id(node)] = np.sin(memo[id(node.args[0])])
        elif op == "cos":
            memo[id(node)] = np.cos(memo[id(node.args[0])])
        elif op == "exp":
            memo[id(node)] = np.exp(memo[id(node.args[0])])


# ---------------------------------------------------------------------------
# differentiation


def diff(expr, i, _memo=None):
    """Partial derivative with respect to variable index ``i``."""
    memo = {} if _memo is None else _memo
    return _diff(expr, i, memo)


def _diff(node, i, memo):
    key = (id(node), i)
    got = memo.get(key)
    if got is not None:
        return got
    op = node.op
    if op == "const":
        out = _ZERO
    elif op == "var":
        out = _ONE if node.args[0] == i else _ZERO
    elif op == "add":
        out = add(*[_diff(a, i, memo) for a in node.args])
    elif op == "mul":
        terms = []
        for j, a in enumerate(node.args):
            da = _diff(a, i, memo)
            if da is _ZERO:
                continue
            rest = list(node.args[:j]) + list(node.args[j + 1:])
            terms.append(mul(da, *rest))
        out = add(*terms) if terms else _ZERO
    elif op == "pow":
        base, e = node.args
        db = _diff(base, i, memo)
        out = _ZERO if db is _ZERO else mul(const(e), pow_(base, e - 1.0), db)
    elif op == "sin":
        da = _diff(node.args[0], i, memo)
        out = _ZERO if da is _ZERO else mul(cos_(node.args[0]), da)
    elif op == "cos":
        da = _diff(node.args[0], i, memo)
        out = _ZERO if da is _ZERO else mul(const(-1.0), sin_(node.args[0]), da)
    elif op == "exp":
        da = _diff(node.args[0], i, memo)
        out = _ZERO if da is _ZERO else mul(node, da)
    else:
        raise ValueError(f"unknown op {op!r}")
    memo[key] = out
    return out


# ---------------------------------------------------------------------------
# serialization


def to_json(expr):
    """Serialize to the wire grammar (shared subtrees are duplicated)."""

    def enc(node):
        if node.op == "const":
            return {"op": "const", "args": [node.args[0]]}
        if node.op == "var":
            return {"op": "var", "args": [f"x{node.args[0] + 1}"]}
        if node.op == "pow":
            return {"op": "pow", "args": [enc(node.args[0]), node.args[1]]}
        return {"op": node.op, "args": [enc(a) for a in node.args]}

    return enc(expr)


def from_json(obj):
    if isinstance(obj, str):
        obj = json.loads(obj)
    op = obj["op"]
    args = obj["args"]
    if op == "const":
        return const(args[0])
    if op == "var":
        name = args[0]
        if not (isinstance(name, str) and name.startswith("x")):
            raise ValueError(f"bad variable name {name!r}")
        return var(int(name[1:]) - 1)
    if op == "pow":
        return pow_(from_json(args[0]), args[1])
    if op == "add":
        return add(*[from_json(a) for a in args])
    if op == "mul":
        return mul(*[from_json(a) for a in args])
    if op in _SCALAR_OPS:
        return Expr(op, (from_json(args[0]),))
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# small vector-of-expression helpers


def vadd(u, v):
    return tuple(add(a, b) for a, b in zip(u, v))


def vsub(u, v):
    return tuple(sub(a, b) for a, b in zip(u, v))


def vscale(c, u):
    return tuple(mul(_as_expr(c), a) for a in u)


def vdot(u, v):
    return add(*[mul(a, b) for a, b in zip(u, v)])


# ---------------------------------------------------------------------------
# polynomial builders and Chebyshev fitting


def polynomial_2d(coeffs):
    """Build sum_{i,j} coeffs[(i, j)] * x^i * z^j over variables (x1, x2)."""
    x, z = var(0), var(1)
    terms = []
    for (i, j), c in coeffs.items():
        if c == 0.0:
            continue
        fs = [const(c)]
        if i:
            fs.append(pow_(x, i))
        if j:
            fs.append(pow_(z, j))
        terms.append(mul(*fs))
    return add(*terms) if terms else _ZERO


def _cheb_basis(t, deg):
    """Chebyshev polynomials T_0..T_deg of an expression, as a shared list."""
    out = [_ONE, t]
    for _ in range(deg - 1):
        out.append(sub(mul(const(2.0), t, out[-1]), out[-2]))
    return out[: deg + 1]


def chebyshev_fit(values_fn, lo, hi, degrees, oversample=2, var_indices=None):
    """Least-squares Chebyshev fit of a smooth field, returned as Expr trees.

    Parameters
    ----------
    values_fn : callable mapping an (m, d) array of points to (m, k) values
    lo, hi : domain box corners, length d
    degrees : per-axis polynomial degree, length d
    oversample : sample factor relative to degrees
    var_indices : which chart variables the box axes map to (default 0..d-1)

    Returns
    -------
    (exprs, max_residual) : list of k Expr trees and the worst-case fit error
    on a dense validation grid.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    d = lo.size
    if var_indices is None:
        var_indices = list(range(d))
    degrees = [int(g) for g in degrees]
    ns = [oversample * (g + 1) for g in degrees]
    axes = []
    for n, a, b in zip(ns, lo, hi):
        # Chebyshev points of the second kind, mapped to [a, b]
        t = np.cos(np.pi * np.arange(n) / (n - 1))
        axes.append(0.5 * (a + b) + 0.5 * (b - a) * t[::-1])
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=1)
    V = np.atleast_2d(values_fn(P))
    if V.ndim == 1:
        V = V[:, None]

    # design matrix: tensor Chebyshev basis on normalized coordinates
    def norm(c, a, b):
        return (2.0 * c - (a + b)) / (b - a)

    basis_1d = []
    for ax, (a, b), g in zip(mesh, zip(lo, hi), degrees):
        t = norm(ax.ravel(), a, b)
        B = np.empty((t.size, g + 1))
        B[:, 0] = 1.0
        if g >= 1:
            B[:, 1] = t
        for k in range(2, g + 1):
            B[:, k] = 2.0 * t * B[:, k - 1] - B[:, k - 2]
        basis_1d.append(B)
    cols = None
    idx_sets = np.stack(np.meshgrid(*[np.arange(g + 1) for g in degrees], indexing="ij"), axis=-1).reshape(-1, d)
    cols = np.ones((P.shape[0], idx_sets.shape[0]))
    for axis in range(d):
        cols *= basis_1d[axis][:, idx_sets[:, axis]]
    coef, *_ = np.linalg.lstsq(cols, V, rcond=None)
    resid = np.abs(cols @ coef - V).max()

    # trees
    tvars = []
    for axis, (a, b) in enumerate(zip(lo, hi)):
        x = var(var_indices[axis])
        tvars.append(mul(const(2.0 / (b - a)), sub(x, const(0.5 * (a + b)))))
    cheb = [_cheb_basis(t, g) for t, g in zip(tvars, degrees)]
    exprs = []
    for k in range(V.shape[1]):
        terms = []
        for row, c in zip(idx_sets, coef[:, k]):
            if abs(c) < 1e-300:
                continue
            fs = [const(c)]
            for axis in range(d):
                if row[axis] > 0:
                    fs.append(cheb[axis][row[axis]])
            terms.append(mul(*fs))
        exprs.append(add(*terms) if terms else _ZERO)
    return exprs, float(resid)
