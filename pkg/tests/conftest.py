import pytest

from laf import BOOL, INT, Builder, EnumBudget, bv, tup
from laf.core import Term, extract_op, get_op

FIXTURES = __import__("pathlib").Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def small_budget() -> EnumBudget:
    return EnumBudget(int_lo=-4, int_hi=4, max_mu_iters=8, max_env_count=20_000)


def build_abs_term() -> Term:
    """Absolute-value program as a hand-built term: branch on x<0, join the
    two (abs, nabs) tuples, then guard the division through an assume."""
    b = Builder()
    x = b.let_unknown("x", INT)
    k0 = b.let_int("k0", 0)
    c1 = b.let_op("c1", BOOL, "lt", [x, k0])
    nx = b.let_op("nx", INT, "neg", [x])
    t1 = b.let_op("t1", tup(INT, INT), "mk", [nx, x])
    t1p = b.let_assume("t1p", c1, t1)
    nc1 = b.let_op("nc1", BOOL, "not", [c1])
    t2 = b.let_op("t2", tup(INT, INT), "mk", [x, nx])
    t2p = b.let_assume("t2p", nc1, t2)
    t3 = b.let_nondet("t3", t1p, t2p)
    abs_ = b.let_op("abs", INT, get_op(0), [t3])
    nabs = b.let_op("nabs", INT, get_op(1), [t3])
    negnabs = b.let_op("negnabs", INT, "neg", [nabs])
    b.let_op("c3", BOOL, "eq", [abs_, negnabs])
    k8 = b.let_int("k8", 8)
    c2 = b.let_op("c2", BOOL, "le", [abs_, k8])
    xk = b.let_assume("xk", c2, x)
    k9 = b.let_int("k9", 9)
    xdiv = b.let_op("xdiv", INT, "div", [xk, k9])
    c4 = b.let_op("c4", BOOL, "eq", [xdiv, k0])
    return b.term(c4)


def build_bitcopy_term(width: int = 16):
    """A word copied halfwise through two intermediate views, weakly
    updated, and compared against the original."""
    w, h = width, width // 2
    b = Builder()
    X = b.let_unknown("X", bv(w))
    r1l = b.let_unknown("r1l", bv(h))
    r1h = b.let_unknown("r1h", bv(h))
    Xl = b.let_op("Xl", bv(h), extract_op(h - 1, 0), [X])
    Xh = b.let_op("Xh", bv(h), extract_op(w - 1, h), [X])
    Xc = b.let_op("Xc", bv(w), "concat", [Xh, Xl])
    Xw = b.let_nondet("Xw", X, Xc)
    Xv = b.let_nondet("Xv", Xc, Xc)
    tl = b.let_op("tl", bv(h), extract_op(h - 1, 0), [Xv])
    th = b.let_op("th", bv(h), extract_op(w - 1, h), [Xv])
    tthen = b.let_op("tthen", tup(bv(w), bv(h), bv(h)), "mk", [Xw, tl, th])
    telse = b.let_op("telse", tup(bv(w), bv(h), bv(h)), "mk", [X, r1l, r1h])
    t = b.let_nondet("t", tthen, telse)
    t0 = b.let_op("t0", bv(w), get_op(0), [t])
    assertion = b.let_op("assertion", BOOL, "eq", [t0, X])
    return b.term(assertion), assertion


def build_counter_loop():
    """x,y counted up together while x < n, exit kills non-final states."""
    b = Builder()
    n0 = b.let_unknown("n0", INT)
    k0 = b.let_int("k0", 0)
    one = b.let_int("one", 1)
    m2 = b.let_op("M2", tup(INT, INT, INT), "mk", [k0, k0, n0])

    def body(bb, m):
        x1 = bb.let_op("x1", INT, get_op(0), [m])
        n1 = bb.let_op("n1", INT, get_op(2), [m])
        c = bb.let_op("c", BOOL, "lt", [x1, n1])
        m3 = bb.let_assume("M3", c, m)
        x1b = bb.let_op("x1b", INT, get_op(0), [m3])
        y1 = bb.let_op("y1", INT, get_op(1), [m3])
        n1b = bb.let_op("n1b", INT, get_op(2), [m3])
        x2 = bb.let_op("x2", INT, "add", [x1b, one])
        y2 = bb.let_op("y2", INT, "add", [y1, one])
        return bb.let_op("M4", tup(INT, INT, INT), "mk", [x2, y2, n1b])

    mf = b.let_mu("Mf", m2, body)
    x3 = b.let_op("x3", INT, get_op(0), [mf])
    n3 = b.let_op("n3", INT, get_op(2), [mf])
    c2 = b.let_op("c2", BOOL, "lt", [x3, n3])
    nc = b.let_op("nc", BOOL, "not", [c2])
    m5 = b.let_assume("M5", nc, mf)
    x6 = b.let_op("x6", INT, get_op(0), [m5])
    y6 = b.let_op("y6", INT, get_op(1), [m5])
    c3 = b.let_op("c3", BOOL, "eq", [x6, y6])
    return b.term(c3), c3, mf
