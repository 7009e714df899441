from fractions import Fraction

from hypothesis import strategies as st

from ineqcomp import expr as E

VARS = [E.var("x"), E.var("y"), E.var("z"), E.var("x", 2)]

consts = st.builds(lambda n, d: E.const(Fraction(n, d)), st.integers(-9, 9).filter(bool), st.integers(1, 5))
leaves = st.one_of(st.sampled_from(VARS), consts)


def _extend(children):
    return st.one_of(
        st.builds(E.add, children, children),
        st.builds(E.mul, children, children),
        st.builds(E.sub, children, children),
        st.builds(E.div, children, children),
        st.builds(E.pown, children, st.integers(2, 3)),
        st.builds(E.powr, children, st.sampled_from([Fraction(1, 2), Fraction(2, 5), Fraction(-1, 3)])),
        st.builds(E.sqrt, children),
        st.builds(E.log, children),
        st.builds(E.minimum, children, children),
        st.builds(E.maximum, children, children),
        st.builds(E.absval, children),
        st.builds(E.neg, children),
    )


exprs = st.recursive(leaves, _extend, max_leaves=12)

# exp separately: it overflows too easily to mix into deep trees
shallow = st.recursive(leaves, lambda c: st.one_of(_extend(c), st.builds(E.exp, c)), max_leaves=4)

points = st.fixed_dictionaries({v.args[0]: st.floats(0.05, 20.0) for v in VARS})
