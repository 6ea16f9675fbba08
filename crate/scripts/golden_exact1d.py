#!/usr/bin/env python3
"""Arbitrary-precision reference values for the 1D interval problem.

Solves the 2x2 flux system for (C_l, C_r) directly with mpmath (2000 digits working precision, 50 printed),
independent of the closed-form expressions used by the Rust library, and
integrates the homogeneous 1D problem used by the interior-H1 checks.

Run:  python3 scripts/golden_exact1d.py > scripts/golden_exact1d.txt
"""
from mpmath import mp, mpf, sqrt, sinh, cosh, matrix, lu_solve, quad

# Working precision must cover cancellation between e^(alpha+beta) sized terms
# (beta ~ 2000 at a = 1e-6).
mp.dps = 2000


def exact(bl, br, fl, fr, a):
    bl, br, fl, fr, a = map(mpf, (bl, br, fl, fr, a))
    T = fr - fl
    sa = sqrt(a)
    al = (fl - bl) / sa
    be = (br - fr) / sa
    # flux identities: a*s* - a*s'(f_l-0) = 1, a*s* - a*s'(f_r+0) = 1
    A = matrix([[a / T * sinh(al) + sa * cosh(al), a / T * sinh(be)],
                [a / T * sinh(al), a / T * sinh(be) + sa * cosh(be)]])
    cl, cr = lu_solve(A, matrix([1, 1]))
    s_star = (cl * sinh(al) + cr * sinh(be)) / T
    h = 2 / (sa * s_star)
    return dict(C_l=cl, C_r=cr, s_lo=-cl * sinh(al), s_hi=cr * sinh(be),
                slope=s_star, h=h)


def homogeneous(bl, br, fl, fr, a, c_lo, c_hi):
    """-a d'' + (1-chi) d = 0 with d(b_l)=c_lo, d(b_r)=c_hi."""
    bl, br, fl, fr, a, c_lo, c_hi = map(mpf, (bl, br, fl, fr, a, c_lo, c_hi))
    T = fr - fl
    sa = sqrt(a)
    al = (fl - bl) / sa
    be = (br - fr) / sa
    # left:  d = (c_lo sinh((fl-y)/sa) + p sinh((y-bl)/sa)) / sinh(al)
    # right: d = (c_hi sinh((y-fr)/sa) + q sinh((br-y)/sa)) / sinh(be)
    # flux continuity at f_l and f_r with the linear film segment.
    A = matrix([[cosh(al) / (sa * sinh(al)) + 1 / T, -1 / T],
                [-1 / T, cosh(be) / (sa * sinh(be)) + 1 / T]])
    rhs = matrix([c_lo / (sa * sinh(al)), c_hi / (sa * sinh(be))])
    p, q = lu_solve(A, rhs)

    def d(y):
        if y <= fl:
            return (c_lo * sinh((fl - y) / sa) + p * sinh((y - bl) / sa)) / sinh(al)
        if y >= fr:
            return (c_hi * sinh((y - fr) / sa) + q * sinh((br - y) / sa)) / sinh(be)
        return p + (q - p) * (y - fl) / T

    grad_film = (q - p) ** 2 / T
    void_l2 = quad(lambda y: d(y) ** 2, [bl, fl]) + quad(lambda y: d(y) ** 2, [fr, br])
    return dict(p=p, q=q, film_grad_sq=grad_film, void_sq=void_l2)


def show(tag, vals):
    for k, v in vals.items():
        print(f"{tag} {k} {mp.nstr(v, 50)}")


if __name__ == "__main__":
    show("film_1e-4", exact(0, 3, 0.5, 0.99, "1e-4"))
    show("film_1e-6", exact(0, 3, 0.5, 0.99, "1e-6"))
    show("asym_1e-2", exact(0, 1, 0.3, 0.5, "1e-2"))
    show("sym_1e-1", exact(-1, 1, -0.5, 0.5, "1e-1"))
    show("hom_asym_1e-2", homogeneous(0, 1, 0.3, 0.5, "1e-2", 1, 1))
    show("hom_asym2_1e-2", homogeneous(0, 1, 0.3, 0.5, "1e-2", 1, -0.5))
