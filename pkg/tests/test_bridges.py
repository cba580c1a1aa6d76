"""Cross-cutting identities tying the interpreter to the relation calculus.

Each test pits the interpreter against an independently computed value: a
closed-form oracle, a direct lattice fact, or a second evaluation route.
"""

import numpy as np

from qrel import logic as lg
from qrel import qset as q
from qrel import subspace as sp

X = q.atoms([2], ["x"])
Y = q.atoms([1, 2], ["y0", "y1"])
A = q.classical(["a", "b"])


def rand_pred(sorts, seed, density=0.9):
    rng = np.random.default_rng(seed)
    blocks = {}
    for flat, _idx, dims in q.atom_tuples(list(sorts)):
        if rng.random() > density:
            continue
        d = 1
        for v in dims:
            d *= v
        k = int(rng.integers(0, d + 1))
        blocks[(flat, 0)] = sp.span(
            [rng.normal(size=(1, d)) + 1j * rng.normal(size=(1, d)) for _ in range(k)],
            (1, d),
        )
    return q.Relation(q.product_all(list(sorts)), q.unit(), blocks)


def rand_rel(a, b, seed):
    rng = np.random.default_rng(seed)
    blocks = {}
    for i, at in enumerate(a.atoms):
        for j, bt in enumerate(b.atoms):
            k = int(rng.integers(0, at.dim * bt.dim + 1))
            blocks[(i, j)] = sp.span(
                [rng.normal(size=(bt.dim, at.dim)) + 1j * rng.normal(size=(bt.dim, at.dim))
                 for _ in range(k)],
                (bt.dim, at.dim),
            )
    return q.Relation(a, b, blocks)


def exists_infimum_oracle(s: q.Relation, head: q.QuantumSet, tail: q.QuantumSet):
    """The least R with top x R above s, computed from scratch.

    Blockwise this is the span of the tail-indexed rows of every functional
    of s, reshaped along the head/tail tensor split; no composition is used.
    """
    blocks = {}
    n_tail = len(tail.atoms)
    for (flat, _zero), blk in s.blocks.items():
        hi, ti = divmod(flat, n_tail)
        d_head = head.atoms[hi].dim
        d_tail = tail.atoms[ti].dim
        rows = []
        for b in blk.basis:
            rows.extend(b.reshape(d_head, d_tail))
        prev = blocks.get((ti, 0), sp.zero((1, d_tail)))
        blocks[(ti, 0)] = sp.join(
            prev, sp.span([r.reshape(1, d_tail) for r in rows], (1, d_tail))
        )
    return q.Relation(tail, q.unit(), blocks)


def test_exists_matches_infimum_oracle():
    for k in range(20):
        s = rand_pred([X, Y], 2000 + k)
        u, w = lg.Variable("u", X), lg.Variable("w", Y)
        via_logic = lg.interpret(
            lg.Exists(u, lg.Atomic(s, (lg.Var(u), lg.Var(w)))), (w,)
        )
        oracle = exists_infimum_oracle(s, X, Y)
        assert q.rel_equal(via_logic, oracle)
        # and the infimum property itself: top x oracle dominates s, and the
        # oracle is below any other dominating relation
        assert q.leq(s, q.cross(q.top_pred(X), oracle))
        bigger = rand_pred([Y], 3000 + k)
        dominating = q.join(oracle, bigger)
        assert q.leq(s, q.cross(q.top_pred(X), dominating))


def sasaki_and_formula(p, r):
    return lg.And(lg.Or(p, lg.Not(r)), r)


def test_inconsistency_characterizations():
    # three ways to say two predicates exclude each other
    for k in range(20):
        p = rand_pred([X], 4000 + k)
        r = rand_pred([X], 5000 + k)
        v = lg.Variable("v", X)
        vs = lg.Variable("vs", X.dual())
        fp = lg.Atomic(p, (lg.Var(v),))
        fr = lg.Atomic(r, (lg.Var(v),))
        meet_empty = lg.truth(lg.Forall(v, lg.Not(lg.And(fp, fr))))
        assert meet_empty == (len(q.meet(p, r).blocks) == 0)
        sasaki_empty = lg.truth(lg.Forall(v, lg.Not(sasaki_and_formula(fp, fr))))
        assert sasaki_empty == q.perp(p, r)
        rc = q.conjugate(r)
        frc = lg.Atomic(rc, (lg.Var(vs),))
        diag_empty = lg.truth(lg.ForallDiag(v, vs, lg.Not(lg.And(fp, frc))))
        assert diag_empty == q.perp(p, r)


def test_composition_via_diagonal_existential():
    # the sentence-level composite of two bent relations is the bent composite
    for k in range(10):
        r = rand_rel(X, Y, 6000 + k)
        s = rand_rel(Y, A, 7000 + k)
        br, bs = q.bend(r), q.bend(s)
        xv = lg.Variable("xv", X)
        yv, yvs = lg.Variable("yv", Y), lg.Variable("yvs", Y.dual())
        zvs = lg.Variable("zvs", A.dual())
        f = lg.ExistsDiag(
            yv,
            yvs,
            lg.And(
                lg.Atomic(br, (lg.Var(xv), lg.Var(yvs))),
                lg.Atomic(bs, (lg.Var(yv), lg.Var(zvs))),
            ),
        )
        assert q.rel_equal(lg.interpret(f, (xv, zvs)), q.bend(q.compose(s, r)))


def test_symmetry_ordinary_quantifier_form():
    # adjoint domination in its plain-quantifier formulation
    for k in range(10):
        r = rand_rel(X, X, 8000 + k)
        g = q.bend(r)
        gc = q.conjugate(g)
        x1 = lg.Variable("x1", X)
        x2s = lg.Variable("x2s", X.dual())
        f = lg.Forall(
            x1,
            lg.Forall(
                x2s,
                lg.Implies(
                    lg.Atomic(g, (lg.Var(x1), lg.Var(x2s))),
                    lg.Atomic(gc, (lg.Var(x2s), lg.Var(x1))),
                ),
            ),
        )
        assert lg.truth(f) == q.leq(r, q.dagger(r))


def test_equivariance_on_composite_formulas():
    rng = np.random.default_rng(17)
    sorts = [X, Y, A]
    ctx = tuple(lg.Variable(n, s) for n, s in zip("uvw", sorts))
    for k in range(10):
        p = rand_pred([sorts[0], sorts[2]], 9000 + k)
        r = rand_pred([sorts[1]], 9500 + k)
        fresh = lg.Variable("t", X)
        extra = rand_pred([X, sorts[1]], 9800 + k)
        f = lg.And(
            lg.Atomic(p, (lg.Var(ctx[0]), lg.Var(ctx[2]))),
            lg.Or(
                lg.Atomic(r, (lg.Var(ctx[1]),)),
                lg.Exists(fresh, lg.Atomic(extra, (lg.Var(fresh), lg.Var(ctx[1])))),
            ),
        )
        sigma = list(rng.permutation(3))
        permuted_ctx = tuple(ctx[sigma[i]] for i in range(3))
        lhs = lg.interpret(f, permuted_ctx)
        base = lg.interpret(f, ctx)
        inv = [0] * 3
        for i, s in enumerate(sigma):
            inv[s] = i
        rhs = q.permute(base, inv, [v.sort for v in permuted_ctx])
        assert q.rel_equal(lhs, rhs)


def test_identity_global_image_is_block_scalars():
    # the global image of the identity relation is the span of the minimal
    # central projections, one scalar block per atom
    carrier = q.atoms([1, 2], ["p", "r"])
    v = q.weaver_to_global(q.identity(carrier))
    assert v.rank == 2
    assert v.contains(np.diag([1.0, 0, 0]).astype(complex))
    assert v.contains(np.diag([0, 1.0, 1.0]).astype(complex))
    assert not v.contains(np.diag([0, 1.0, 0]).astype(complex))


def test_empty_quantum_set_constants():
    nothing = q.empty()
    assert len(q.top(nothing, nothing).blocks) == 0
    assert len(q.identity(nothing).blocks) == 0
    assert len(q.equality(nothing).blocks) == 0
    prod = q.product(X, nothing)
    assert prod.is_empty
    # composing through an empty middle yields bottom
    r = q.bottom(X, nothing)
    s = q.bottom(nothing, Y)
    assert q.rel_equal(q.compose(s, r), q.bottom(X, Y))


def test_exists_over_empty_sort_is_bottom():
    nothing = q.empty()
    z = lg.Variable("z", A)
    e = lg.Variable("e", nothing)
    body = lg.Atomic(q.top_pred(q.product(nothing, A)), (lg.Var(e), lg.Var(z)))
    out = lg.interpret(lg.Exists(e, body), (z,))
    assert q.rel_equal(out, q.bottom(A, q.unit()))
    # and the universal over the empty sort is correspondingly top
    out = lg.interpret(lg.Forall(e, body), (z,))
    assert q.rel_equal(out, q.top_pred(A))


def test_context_variable_of_product_sort():
    # a single context position may itself carry a product sort
    xy = q.product(X, Y)
    p = rand_pred([xy], 11000)
    w = lg.Variable("w", xy)
    z = lg.Variable("z", A)
    out = lg.interpret(lg.Atomic(p, (lg.Var(w),)), (w, z))
    assert q.rel_equal(out, q.cross(p, q.top_pred(A)))
    # quantifying it away matches quantifying the two components in order
    out2 = lg.interpret(lg.Exists(w, lg.Atomic(p, (lg.Var(w),))), (z,))
    u, v = lg.Variable("u", X), lg.Variable("v", Y)
    split = lg.interpret(
        lg.Exists(u, lg.Exists(v, lg.Atomic(p, (lg.Var(u), lg.Var(v))))), (z,)
    )
    assert q.rel_equal(out2, split)


def unitary_line(mat):
    d = mat.shape[0]
    carrier = q.atoms([d], ["h"])
    return carrier, q.Relation(
        carrier, carrier, {(0, 0): sp.span([mat.astype(complex)], (d, d))}
    )


def test_term_equality_bridge_quantum_and_composed():
    # sentences E(s, ~t) under diagonal quantifiers decide term equality,
    # for composed terms over a genuinely quantum carrier
    had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    carrier, f_had = unitary_line(had)
    _, f_sx = unitary_line(sx)
    _, f_hs = unitary_line(had @ sx)
    _, f_sh = unitary_line(sx @ had)
    x, xs = lg.Variable("x", carrier), lg.Variable("xs", carrier.dual())
    e = q.equality(carrier)

    def bridge(s_term, t_fn):
        t_star = lg.App(q.conjugate(t_fn), (lg.Var(xs),))
        return lg.truth(lg.ForallDiag(x, xs, lg.Atomic(e, (s_term, t_star))))

    composed = lg.App(f_had, (lg.App(f_sx, (lg.Var(x),)),))
    assert q.rel_equal(
        lg.interpret_term(composed, (x,)), q.compose(f_had, f_sx)
    )
    assert bridge(composed, f_hs)          # H after X is the composite
    assert not bridge(composed, f_sh)      # and is not X after H
    assert not bridge(composed, f_had)
